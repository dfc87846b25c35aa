#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fisherdoc/baselines.hpp"
#include "fisherdoc/common.hpp"
#include "fisherdoc/corpus.hpp"
#include "fisherdoc/docvectors.hpp"
#include "fisherdoc/evalx.hpp"
#include "fisherdoc/pipeline.hpp"
#include "fisherdoc/report.hpp"
#include "fisherdoc/retrieval.hpp"

#ifndef FISHERDOC_VERSION
#define FISHERDOC_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace fisherdoc;

namespace {

struct Global {
    std::string out = "fisherdoc-out";
    std::string data_root;
    std::uint64_t seed = 1;
    int dim = 50;
    int components = 15;
    double lambda = 0.5;
    std::string topic_fields = "title+desc";
    std::string log_level = "warn";
};

/// Per-dataset working directory and its manifest.
class Workspace {
public:
    Workspace(const Global& g, const std::string& dataset) : root_(fs::path(g.out) / dataset), dataset_(dataset) {}

    const fs::path& root() const { return root_; }
    const std::string& dataset() const { return dataset_; }
    fs::path corpus() const { return root_ / "corpus.tsv"; }
    fs::path topics() const { return root_ / "topics.tsv"; }
    fs::path qrels() const { return root_ / "qrels.txt"; }
    fs::path index() const { return root_ / "index.fdv"; }
    fs::path model(const std::string& tag) const { return root_ / "models" / tag; }
    fs::path vectors(const std::string& tag) const { return root_ / "vectors" / (tag + ".fdv"); }
    fs::path run(const std::string& name) const { return root_ / "runs" / (name + ".run"); }
    fs::path report(const std::string& name) const { return root_ / "reports" / name; }

    void record(const std::string& subcommand, const json& config, const std::string& hash,
                const std::vector<fs::path>& artifacts) const {
        fs::create_directories(root_);
        std::ofstream out(root_ / "manifest.jsonl", std::ios::app);
        if (!out) throw Error("cannot append to " + (root_ / "manifest.jsonl").string());
        const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        char stamp[32];
        std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        for (const auto& a : artifacts) {
            json line{{"artifact", a.lexically_relative(root_).generic_string()},
                      {"subcommand", subcommand},
                      {"config_hash", hash},
                      {"config", config},
                      {"version", FISHERDOC_VERSION},
                      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                    std::to_string(EIGEN_MINOR_VERSION)},
                      {"created", stamp}};
            out << line.dump() << '\n';
        }
    }

private:
    fs::path root_;
    std::string dataset_;
};

std::string config_hash(const json& config) {
    char buffer[17];
    std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(fnv1a(config.dump())));
    return buffer;
}

void require(const fs::path& path, const std::string& producer) {
    if (!fs::exists(path)) throw Error("missing " + path.string() + "; produce it with `fisherdoc " + producer + "`");
}

fs::path resolve_input(const Global& g, const std::string& path) {
    const fs::path p(path);
    if (p.is_absolute() || g.data_root.empty()) return p;
    return fs::path(g.data_root) / p;
}

TokenizedCorpus load_corpus(const Workspace& ws) {
    require(ws.corpus(), "prep --dataset " + ws.dataset());
    return read_corpus(ws.corpus());
}

void write_table(const fs::path& stem, const Table& table, const std::vector<std::string>& notes = {}) {
    write_text(fs::path(stem.string() + ".tsv"), to_tsv(table));
    std::string md;
    for (const auto& n : notes) md += "- " + n + "\n";
    if (!notes.empty()) md += "\n";
    write_text(fs::path(stem.string() + ".md"), md + to_markdown(table));
}

json base_config(const Global& g, const std::string& dataset) {
    return json{{"dataset", dataset}, {"seed", g.seed}, {"dim", g.dim}};
}

// Vectors reordered to follow the corpus documents.
DocumentVectors align(const DocumentVectors& v, const TokenizedCorpus& corpus, const std::string& producer) {
    std::vector<std::size_t> rows;
    rows.reserve(corpus.docs.size());
    for (const auto& d : corpus.docs) {
        const auto r = v.find(d.id);
        if (!r) throw Error("vectors lack document " + d.id + "; regenerate them with `fisherdoc " + producer + "`");
        rows.push_back(static_cast<std::size_t>(*r));
    }
    return select_rows(v, rows);
}

std::string producer_of(Representation kind, const std::string& dataset, int dim) {
    const std::string tail = " --dataset " + dataset + " --dim " + std::to_string(dim);
    if (kind == Representation::fv_gmm) return "fv --family gmm" + tail;
    if (kind == Representation::fv_movmf) return "fv --family vmf" + tail;
    return "train --model " + to_string(kind) + tail;
}

// ------------------------------------------------------------------ options

struct ModelOptions {
    std::string model;
    int epochs = 5;
    int window = 5;
    int negative = 5;
    int inference_steps = 50;
    int lda_passes = 20;
    std::size_t max_features = 5000;
    std::string term_selection = "max";
    int restarts = 10;
    bool token_weighted = false;
    std::string kappa = "banerjee";
    bool power_norm = false;
    bool no_l2 = false;

    void add(CLI::App* app, bool model_option) {
        if (model_option) {
            std::vector<std::string> names;
            for (auto k : all_representations()) names.push_back(to_string(k));
            app->add_option("--model", model, "Representation")->required()->check(CLI::IsMember(names));
        }
        app->add_option("--epochs", epochs, "Training epochs (word2vec family)")->check(CLI::Range(1, 100000));
        app->add_option("--window", window, "Context window")->check(CLI::Range(1, 1000));
        app->add_option("--negative", negative, "Negative samples")->check(CLI::Range(1, 1000));
        app->add_option("--inference-steps", inference_steps, "Inference passes for unseen documents")
            ->check(CLI::Range(1, 100000));
        app->add_option("--lda-passes", lda_passes, "LDA passes over the corpus")->check(CLI::Range(20, 100));
        app->add_option("--max-features", max_features, "TF-IDF vocabulary size")->check(CLI::Range(1, 10000000));
        app->add_option("--term-selection", term_selection, "TF-IDF term ranking: max or sum")
            ->check(CLI::IsMember({"max", "sum"}));
        app->add_option("--restarts", restarts, "Mixture EM restarts")->check(CLI::Range(1, 1000));
        app->add_flag("--token-weighted", token_weighted, "Weight mixture points by corpus frequency");
        app->add_option("--kappa", kappa, "Concentration estimator: banerjee or newton")
            ->check(CLI::IsMember({"banerjee", "newton"}));
        app->add_flag("--power-norm", power_norm, "Signed square root before L2 normalization");
        app->add_flag("--no-l2", no_l2, "Skip L2 normalization of Fisher vectors");
    }

    RepresentationConfig config(const Global& g, Representation kind) const {
        RepresentationConfig c;
        c.kind = kind;
        c.dim = g.dim;
        c.seed = g.seed;
        c.components = g.components;
        c.max_features = max_features;
        c.selection = term_selection == "sum" ? TermSelection::sum_weight : TermSelection::max_weight;
        c.lda_passes = lda_passes;
        c.epochs = epochs;
        c.window = window;
        c.negative = negative;
        c.inference_steps = inference_steps;
        c.restarts = restarts;
        c.token_weighted = token_weighted;
        c.kappa = kappa == "newton" ? KappaEstimator::newton : KappaEstimator::banerjee;
        c.fisher.power_normalize = power_norm;
        c.fisher.l2_normalize = !no_l2;
        return c;
    }

    // Only the knobs that influence `kind`, so unrelated flags do not change
    // the config hash.
    json describe(Representation kind) const {
        json j{{"model", to_string(kind)}};
        if (kind == Representation::tfidf || kind == Representation::lsi) {
            j["max_features"] = max_features;
            j["term_selection"] = term_selection;
        }
        if (kind == Representation::lda) j["lda_passes"] = lda_passes;
        if (has_epochs(kind)) {
            j["epochs"] = epochs;
            j["window"] = window;
            j["negative"] = negative;
        }
        if (is_paragraph_vector(kind) || kind == Representation::lda) j["inference_steps"] = inference_steps;
        if (is_fisher(kind)) {
            j["restarts"] = restarts;
            j["token_weighted"] = token_weighted;
            j["kappa"] = kappa;
            j["normalization"] = std::string(power_norm ? "power+" : "") + (no_l2 ? "none" : "l2");
        }
        return j;
    }
};

std::string tag_for(const Global& g, Representation kind) {
    RepresentationConfig c;
    c.kind = kind;
    c.dim = g.dim;
    return representation_tag(c);
}

// ------------------------------------------------------------------ prep

struct PrepOptions {
    std::string dataset;
    std::string format;
    std::string input;
    std::string docs;
    std::string topics;
    std::string qrels;
    bool strip_headers = false;
    bool strip_footers = false;
    bool strip_quotes = false;
};

void run_prep(const Global& g, const PrepOptions& o) {
    const Workspace ws(g, o.dataset);
    json config{{"dataset", o.dataset}, {"format", o.format}};
    std::vector<fs::path> artifacts{ws.corpus()};
    TokenizedCorpus corpus;
    if (o.format == "trec") {
        if (o.docs.empty() || o.topics.empty() || o.qrels.empty()) {
            throw Error("prep --format trec needs --docs, --topics and --qrels");
        }
        const auto collection = load_trec_collection(resolve_input(g, o.docs), resolve_input(g, o.topics),
                                                     resolve_input(g, o.qrels));
        corpus = preprocess(collection.docs);
        fs::create_directories(ws.root());
        write_topics(ws.topics(), collection.topics);
        write_qrels(ws.qrels(), collection.qrels);
        artifacts.push_back(ws.topics());
        artifacts.push_back(ws.qrels());
        config["docs"] = o.docs;
        config["topics"] = o.topics;
        config["qrels"] = o.qrels;
        std::cout << "topics: " << collection.topics.size() << ", skipped SGML blocks: " << collection.skipped_blocks
                  << '\n';
    } else {
        if (o.input.empty()) throw Error("prep --format " + o.format + " needs --input");
        LoadOptions load;
        load.strip_headers = o.strip_headers;
        load.strip_footers = o.strip_footers;
        load.strip_quotes = o.strip_quotes;
        corpus = load_labeled_corpus(resolve_input(g, o.input), *parse_labeled_format(o.format), load);
        config["input"] = o.input;
        config["strip"] = json{{"headers", o.strip_headers}, {"footers", o.strip_footers}, {"quotes", o.strip_quotes}};
    }
    fs::create_directories(ws.root());
    write_corpus(ws.corpus(), corpus);
    ws.record("prep", config, config_hash(config), artifacts);
    std::cout << "documents: " << corpus.docs.size() << ", vocabulary: " << corpus.vocab_counts.size()
              << ", empty after filtering: " << corpus.empty_documents() << ", classes: " << corpus.label_names.size()
              << '\n';
}

// ------------------------------------------------------------------ train

void save_vectors(const Workspace& ws, const DocumentVectors& v, const std::string& tag) {
    fs::create_directories(ws.vectors(tag).parent_path());
    v.save(ws.vectors(tag));
}

void run_train(const Global& g, const std::string& dataset, const ModelOptions& m) {
    const auto kind = *parse_representation(m.model);
    if (is_fisher(kind)) {
        throw Error("Fisher vectors are built with `fisherdoc fit-mixture` followed by `fisherdoc fv`");
    }
    const Workspace ws(g, dataset);
    const auto corpus = load_corpus(ws);
    const auto config = m.config(g, kind);
    auto rep = make_representer(config);
    const std::string tag = rep->tag();
    info("training " + tag + " on " + std::to_string(corpus.docs.size()) + " documents");
    rep->fit(corpus);
    fs::create_directories(ws.model(tag).parent_path());
    rep->save(ws.model(tag));
    // Vectors come from the saved model so later encodes (queries) see the
    // same parameters, including any rounding of the text formats.
    if (kind == Representation::cbow) rep->load(ws.model(tag));
    const auto vectors = rep->training_vectors(corpus);
    save_vectors(ws, vectors, tag);

    json cfg = base_config(g, dataset);
    cfg.update(m.describe(kind));
    auto artifacts = rep->files(ws.model(tag));
    artifacts.push_back(ws.vectors(tag));
    ws.record("train", cfg, config_hash(cfg), artifacts);
    std::cout << tag << ": " << vectors.rows() << " vectors of dimension " << vectors.dim() << " ("
              << vectors.flagged.size() << " flagged)\n";
}

// ------------------------------------------------------------------ mixtures

Representation family_kind(const std::string& family) {
    return family == "gmm" ? Representation::fv_gmm : Representation::fv_movmf;
}

void run_fit_mixture(const Global& g, const std::string& dataset, const std::string& family, std::string embeddings,
                     const ModelOptions& m) {
    const Workspace ws(g, dataset);
    const auto kind = family_kind(family);
    const auto corpus = load_corpus(ws);
    RepresentationConfig cbow;
    cbow.kind = Representation::cbow;
    cbow.dim = g.dim;
    if (embeddings.empty()) {
        embeddings = ws.model(representation_tag(cbow)).string() + ".vec";
        require(embeddings, "train --model cbow --dataset " + dataset + " --dim " + std::to_string(g.dim));
    } else {
        embeddings = resolve_input(g, embeddings).string();
        require(embeddings, "train --model cbow");
    }
    auto words = load_embeddings(embeddings);
    if (words.dim() != g.dim) {
        throw Error("--dim " + std::to_string(g.dim) + " does not match the embedding dimension " +
                    std::to_string(words.dim()));
    }
    const auto config = m.config(g, kind);
    auto rep = make_fisher_representer(config, std::move(words));
    rep->fit(corpus);
    const std::string tag = rep->tag();
    fs::create_directories(ws.model(tag).parent_path());
    rep->save(ws.model(tag));

    json cfg = base_config(g, dataset);
    cfg.update(m.describe(kind));
    cfg["components"] = g.components;
    cfg["embeddings"] = fs::path(embeddings).filename().string();
    cfg.erase("normalization");
    ws.record("fit-mixture", cfg, config_hash(cfg), rep->files(ws.model(tag)));
    std::cout << tag << ": fitted " << g.components << " components\n";
}

std::unique_ptr<Representer> load_representer(const Global& g, const Workspace& ws, Representation kind,
                                               const ModelOptions& m) {
    auto rep = make_representer(m.config(g, kind));
    const auto prefix = ws.model(rep->tag());
    const std::string producer =
        is_fisher(kind) ? "fit-mixture --family " + std::string(kind == Representation::fv_gmm ? "gmm" : "vmf") +
                              " --dataset " + ws.dataset() + " --dim " + std::to_string(g.dim)
                        : "train --model " + to_string(kind) + " --dataset " + ws.dataset() + " --dim " +
                              std::to_string(g.dim);
    for (const auto& f : rep->files(prefix)) require(f, producer);
    rep->load(prefix);
    return rep;
}

void run_fv(const Global& g, const std::string& dataset, const std::string& family, const ModelOptions& m) {
    const Workspace ws(g, dataset);
    const auto kind = family_kind(family);
    const auto corpus = load_corpus(ws);
    auto rep = load_representer(g, ws, kind, m);
    const auto vectors = rep->encode(corpus);
    save_vectors(ws, vectors, rep->tag());
    json cfg = base_config(g, dataset);
    cfg.update(m.describe(kind));
    cfg["components"] = g.components;
    ws.record("fv", cfg, config_hash(cfg), {ws.vectors(rep->tag())});
    std::cout << rep->tag() << ": " << vectors.rows() << " Fisher vectors of length " << vectors.dim() << " ("
              << vectors.flagged.size() << " documents without in-vocabulary words)\n";
}

// ------------------------------------------------------------------ classify

struct ClassifyOptions {
    std::vector<double> c_grid = default_c_grid();
    std::vector<int> epoch_grid;
};

std::vector<int> binary_labels(const TokenizedCorpus& corpus) {
    std::vector<int> labels;
    for (const auto& d : corpus.docs) {
        if (!d.label) throw Error("document " + d.id + " has no label; classification needs a labelled corpus");
        labels.push_back(*d.label);
    }
    const std::set<int> distinct(labels.begin(), labels.end());
    if (distinct != std::set<int>{0, 1}) throw Error("classification needs exactly the two labels 0 and 1");
    return labels;
}

void run_classify(const Global& g, const std::string& dataset, const ModelOptions& m, const ClassifyOptions& o) {
    const Workspace ws(g, dataset);
    const auto kind = *parse_representation(m.model);
    const auto corpus = load_corpus(ws);
    const auto labels = binary_labels(corpus);
    const std::string tag = tag_for(g, kind);

    std::vector<int> epochs = o.epoch_grid;
    if (!has_epochs(kind) && !epochs.empty()) throw Error("--epochs-grid does not apply to " + m.model);
    if (epochs.empty()) epochs.push_back(has_epochs(kind) ? m.epochs : 0);

    std::vector<CvReport> reports;
    for (int e : epochs) {
        ModelOptions at = m;
        if (e > 0) at.epochs = e;
        const auto config = at.config(g, kind);
        std::vector<CvReport> curve;
        if (is_paragraph_vector(kind)) {
            // Each fold trains on its own split. Training documents are
            // re-inferred too so both sides share the inference scale.
            curve = cv_grid(labels, 10, g.seed,
                            [&](const std::vector<std::size_t>& train, const std::vector<std::size_t>& test) {
                                const auto train_docs = corpus.subset(train);
                                const auto test_docs = corpus.subset(test);
                                auto rep = make_representer(config);
                                rep->fit(train_docs);
                                return std::pair{rep->encode(train_docs), rep->encode(test_docs)};
                            },
                            o.c_grid);
        } else {
            DocumentVectors x;
            if (o.epoch_grid.empty()) {
                require(ws.vectors(tag), producer_of(kind, dataset, g.dim));
                x = align(DocumentVectors::load(ws.vectors(tag)), corpus, producer_of(kind, dataset, g.dim));
            } else {
                auto rep = make_representer(config);
                rep->fit(corpus);
                x = rep->training_vectors(corpus);
            }
            curve = scan_C(x, labels, o.c_grid, g.seed);
        }
        for (auto& r : curve) {
            r.tag = tag;
            r.epochs = e;
            reports.push_back(std::move(r));
        }
        std::cerr << tag << (e > 0 ? " epochs=" + std::to_string(e) : std::string()) << ": best "
                  << percent(best_report(curve).mean) << '\n';
    }

    json cfg = base_config(g, dataset);
    cfg.update(m.describe(kind));
    cfg.erase("epochs");
    cfg["c_grid"] = o.c_grid;
    cfg["epoch_grid"] = epochs;
    cfg["folds"] = 10;
    const std::string hash = config_hash(cfg);
    const auto& best = best_report(reports);
    Table table;
    table.header = {"config_hash", "dataset", "model", "dim", "epochs", "C", "mean", "std", "folds", "best"};
    for (const auto& r : reports) {
        std::string folds;
        for (double a : r.fold_accuracy) folds += (folds.empty() ? "" : ",") + format_number(a);
        table.rows.push_back({hash, dataset, to_string(kind), kind == Representation::tfidf ? "-" : std::to_string(g.dim),
                              std::to_string(r.epochs), format_number(r.C), format_number(r.mean), format_number(r.std),
                              folds, &r == &best ? "1" : "0"});
    }
    const auto stem = ws.report("classify-" + tag);
    write_table(stem, table, {"config_hash: " + hash, "folds: 10 (stratified, seed " + std::to_string(g.seed) + ")"});
    ws.record("classify", cfg, hash, {fs::path(stem.string() + ".tsv"), fs::path(stem.string() + ".md")});
    std::cout << tag << '\t' << dataset << "\tC=" << format_number(best.C)
              << (best.epochs > 0 ? "\tepochs=" + std::to_string(best.epochs) : std::string()) << '\t'
              << percent_pm(best.mean, best.std) << '\n';
}

// ------------------------------------------------------------------ cluster

void run_cluster(const Global& g, const std::string& dataset, const ModelOptions& m, int k, int runs, bool raw) {
    const Workspace ws(g, dataset);
    const auto kind = *parse_representation(m.model);
    const auto corpus = load_corpus(ws);
    std::vector<int> truth;
    for (const auto& d : corpus.docs) {
        if (!d.label) throw Error("document " + d.id + " has no label; clustering evaluation needs ground truth");
        truth.push_back(*d.label);
    }
    if (k == 0) k = static_cast<int>(std::set<int>(truth.begin(), truth.end()).size());
    const std::string tag = tag_for(g, kind);
    require(ws.vectors(tag), producer_of(kind, dataset, g.dim));
    auto x = align(DocumentVectors::load(ws.vectors(tag)), corpus, producer_of(kind, dataset, g.dim));
    if (!raw) x = l2_normalized(x);
    const auto report = cluster_report(tag, kmeans_runs(x, k, runs, g.seed), truth);

    json cfg = base_config(g, dataset);
    cfg.update(m.describe(kind));
    cfg["k"] = k;
    cfg["runs"] = runs;
    cfg["features"] = raw ? "raw" : "l2";
    const std::string hash = config_hash(cfg);
    auto joined = [](const std::vector<double>& v) {
        std::string s;
        for (double x : v) s += (s.empty() ? "" : ",") + format_number(x);
        return s;
    };
    Table table;
    table.header = {"config_hash", "dataset", "model", "dim", "k", "runs", "ari_mean", "ari_std", "nmi_mean", "nmi_std",
                    "ari", "nmi"};
    table.rows.push_back({hash, dataset, to_string(kind), kind == Representation::tfidf ? "-" : std::to_string(g.dim),
                          std::to_string(k), std::to_string(runs), format_number(report.ari_mean),
                          format_number(report.ari_std), format_number(report.nmi_mean), format_number(report.nmi_std),
                          joined(report.ari), joined(report.nmi)});
    const auto stem = ws.report("cluster-" + tag);
    write_table(stem, table, {"config_hash: " + hash, std::string("features: ") + (raw ? "raw" : "L2-normalized")});
    ws.record("cluster", cfg, hash, {fs::path(stem.string() + ".tsv"), fs::path(stem.string() + ".md")});
    std::cout << tag << '\t' << dataset << "\tARI " << percent_pm(report.ari_mean, report.ari_std) << "\tNMI "
              << percent_pm(report.nmi_mean, report.nmi_std) << '\n';
}

// ------------------------------------------------------------------ retrieval

void run_index(const Global& g, const std::string& dataset) {
    const Workspace ws(g, dataset);
    const auto index = build_index(load_corpus(ws));
    index.save(ws.index());
    const json cfg{{"dataset", dataset}};
    ws.record("index", cfg, config_hash(cfg), {ws.index()});
    std::cout << "indexed " << index.size() << " documents, " << index.postings.size() << " terms, average length "
              << index.average_length << '\n';
}

TopicFields topic_fields(const Global& g) {
    const auto f = parse_topic_fields(g.topic_fields);
    if (!f) throw Error("--topic-fields: expected title, desc or title+desc");
    return *f;
}

struct TrecInputs {
    std::vector<Topic> topics;
    Qrels qrels;
};

TrecInputs load_trec_inputs(const Workspace& ws) {
    require(ws.topics(), "prep --format trec --dataset " + ws.dataset());
    require(ws.qrels(), "prep --format trec --dataset " + ws.dataset());
    return {read_topics_tsv(ws.topics()), read_qrels(ws.qrels())};
}

std::map<std::string, std::vector<std::string>> query_tokens(const std::vector<Topic>& topics, TopicFields fields) {
    std::map<std::string, std::vector<std::string>> out;
    for (const auto& d : topic_corpus(topics, fields).docs) out[d.id] = d.tokens;
    return out;
}

Table retrieval_table(const std::string& hash, const std::string& dataset, const std::string& model,
                      const std::string& fields, const Bm25Params& p, const std::string& lambda,
                      const RetrievalReport& r, const std::string& selected) {
    Table t;
    t.header = {"config_hash", "dataset", "model", "topic_fields", "k1", "b", "lambda", "map", "map_ci", "p20", "p20_ci",
                "topics", "selected"};
    t.rows.push_back({hash, dataset, model, fields, format_number(p.k1), format_number(p.b), lambda, format_number(r.map),
                      format_number(r.map_ci), format_number(r.p20), format_number(r.p20_ci),
                      std::to_string(r.topics.size()), selected});
    return t;
}

Table per_topic_table(const RetrievalReport& r) {
    Table t;
    t.header = {"topic", "ap", "p20"};
    for (const auto& s : r.topics) t.rows.push_back({s.topic, format_number(s.ap), format_number(s.p20)});
    return t;
}

void run_search(const Global& g, const std::string& dataset, Bm25Params params, bool grid, unsigned threads,
                std::size_t top) {
    const Workspace ws(g, dataset);
    require(ws.index(), "index --dataset " + dataset);
    const auto index = InvertedIndex::load(ws.index());
    const auto inputs = load_trec_inputs(ws);
    const auto queries = query_tokens(inputs.topics, topic_fields(g));

    json cfg{{"dataset", dataset}, {"topic_fields", g.topic_fields}, {"k1", params.k1}, {"b", params.b}, {"top", top}};
    std::vector<fs::path> artifacts;
    if (grid) {
        const auto cells = bm25_grid();
        const auto scan = grid_scan(index, queries, inputs.qrels, cells, threads, top);
        json gcfg{{"dataset", dataset}, {"topic_fields", g.topic_fields}, {"grid", "k1=0:3:0.05,b=0:1:0.05"}, {"top", top}};
        const auto ghash = config_hash(gcfg);
        Table surface;
        surface.header = {"config_hash", "k1", "b", "map", "p20", "best", "default"};
        for (std::size_t c = 0; c < scan.cells.size(); ++c) {
            const auto& cell = scan.cells[c];
            surface.rows.push_back({ghash, format_number(cell.params.k1), format_number(cell.params.b),
                                    format_number(cell.map), format_number(cell.p20), c == scan.best ? "1" : "0",
                                    c == scan.default_cell ? "1" : "0"});
        }
        const auto stem = ws.report("bm25-grid");
        write_table(stem, surface, {"config_hash: " + ghash, "cells: " + std::to_string(scan.cells.size())});
        ws.record("search", gcfg, ghash, {fs::path(stem.string() + ".tsv"), fs::path(stem.string() + ".md")});
        const auto& best = scan.cells[scan.best];
        const auto& def = scan.cells[scan.default_cell];
        std::cout << "grid: " << scan.cells.size() << " cells; best k1=" << format_number(best.params.k1)
                  << " b=" << format_number(best.params.b) << " MAP " << percent(best.map, 2) << "; default MAP "
                  << percent(def.map, 2) << '\n';
    }

    const auto run = bm25_run(index, queries, params, top);
    fs::create_directories(ws.run("bm25").parent_path());
    write_run(ws.run("bm25"), run, "bm25");
    auto report = evaluate_run(run, inputs.qrels);
    report.params = params;
    const auto hash = config_hash(cfg);
    const auto stem = ws.report("retrieval-bm25");
    write_table(stem, retrieval_table(hash, dataset, "bm25", g.topic_fields, params, "-", report, "1"),
                {"config_hash: " + hash, "BM25 without document-length quantization"});
    write_table(ws.report("retrieval-bm25.topics"), per_topic_table(report));
    artifacts.insert(artifacts.end(), {ws.run("bm25"), fs::path(stem.string() + ".tsv"), fs::path(stem.string() + ".md")});
    ws.record("search", cfg, hash, artifacts);
    std::cout << "bm25 k1=" << format_number(params.k1) << " b=" << format_number(params.b) << "\tMAP "
              << percent_pm(report.map, report.map_ci, 2) << "\tP@20 " << percent_pm(report.p20, report.p20_ci, 2)
              << '\n';
}

void run_fuse(const Global& g, const std::string& dataset, const ModelOptions& m, bool scan) {
    const Workspace ws(g, dataset);
    const auto kind = *parse_representation(m.model);
    if (!(g.lambda >= 0.0 && g.lambda <= 1.0)) throw Error("--lambda: must lie in [0, 1]");
    require(ws.run("bm25"), "search --dataset " + dataset);
    const auto bm25 = read_run(ws.run("bm25"));
    const auto inputs = load_trec_inputs(ws);
    const std::string tag = tag_for(g, kind);
    require(ws.vectors(tag), producer_of(kind, dataset, g.dim));
    const auto docs = DocumentVectors::load(ws.vectors(tag));
    auto rep = load_representer(g, ws, kind, m);
    const auto queries = rep->encode(topic_corpus(inputs.topics, topic_fields(g)));

    std::vector<double> lambdas{g.lambda};
    if (scan) {
        lambdas.clear();
        for (int i = 0; i <= 10; ++i) lambdas.push_back(i / 10.0);
    }
    json cfg = base_config(g, dataset);
    cfg.update(m.describe(kind));
    cfg["topic_fields"] = g.topic_fields;
    cfg["lambda"] = g.lambda;
    cfg["lambda_scan"] = scan;
    const auto hash = config_hash(cfg);
    Table table;
    RetrievalReport chosen;
    for (double lambda : lambdas) {
        const auto fused = fuse(bm25, docs, queries, lambda);
        const auto report = evaluate_run(fused.run, inputs.qrels);
        const bool selected = std::abs(lambda - g.lambda) < 1e-12;
        auto t = retrieval_table(hash, dataset, "bm25+" + tag, g.topic_fields, {}, format_number(lambda), report,
                                 selected ? "1" : "0");
        t.header[4] = "k1";
        if (table.header.empty()) table.header = t.header;
        table.rows.push_back(t.rows.front());
        if (selected) {
            fs::create_directories(ws.run(tag).parent_path());
            write_run(ws.run("fused-" + tag), fused.run, "bm25+" + tag);
            chosen = report;
        }
        std::cerr << "lambda=" << format_number(lambda) << "\tMAP " << percent(report.map, 2) << "\tP@20 "
                  << percent(report.p20, 2) << '\n';
    }
    // The BM25 parameters are those of the pooled run, not re-tuned here.
    for (auto& row : table.rows) {
        row[4] = "-";
        row[5] = "-";
    }
    const auto stem = ws.report("retrieval-" + tag);
    write_table(stem, table, {"config_hash: " + hash, "fusion: lambda * minmax(bm25) + (1 - lambda) * minmax(cosine)"});
    write_table(ws.report("retrieval-" + tag + ".topics"), per_topic_table(chosen));
    ws.record("fuse", cfg, hash, {ws.run("fused-" + tag), fs::path(stem.string() + ".tsv"), fs::path(stem.string() + ".md")});
    std::cout << "bm25+" << tag << " lambda=" << format_number(g.lambda) << "\tMAP "
              << percent_pm(chosen.map, chosen.map_ci, 2) << "\tP@20 " << percent_pm(chosen.p20, chosen.p20_ci, 2)
              << '\n';
}

// ------------------------------------------------------------------ report

int model_rank(const std::string& model) {
    const auto kind = parse_representation(model);
    if (!kind) return 100;
    return static_cast<int>(*kind);
}

void run_report(const Global& g) {
    const fs::path out(g.out);
    if (!fs::is_directory(out)) throw Error("no output directory " + out.string() + "; run `fisherdoc prep` first");
    std::vector<fs::path> files;
    for (const auto& ws : fs::directory_iterator(out)) {
        const auto reports = ws.path() / "reports";
        if (!fs::is_directory(reports)) continue;
        for (const auto& f : fs::directory_iterator(reports)) {
            if (f.path().extension() == ".tsv") files.push_back(f.path());
        }
    }
    std::sort(files.begin(), files.end());

    // Best (C, epochs) per model and dataset, plus accuracy curves.
    std::map<std::string, std::map<std::string, std::vector<std::string>>> best_rows;  // model -> dataset -> best row
    std::set<std::string> class_datasets;
    std::map<std::string, std::string> hashes;  // model -> hash list
    Table clustering;
    clustering.header = {"model", "dataset", "ARI", "NMI", "config_hash"};
    Table retrieval;
    retrieval.header = {"model", "dataset", "MAP", "P@20", "config_hash"};
    std::vector<std::pair<std::string, std::vector<std::string>>> cluster_rows;
    std::vector<std::pair<std::string, std::vector<std::string>>> retrieval_rows;
    Table curves;
    curves.header = {"dataset", "model", "epochs", "C", "mean", "std", "config_hash"};
    for (const auto& f : files) {
        const std::string name = f.filename().string();
        if (name.ends_with(".topics.tsv")) continue;
        const auto t = read_tsv(f);
        if (name.starts_with("classify-")) {
            for (const auto& row : t.rows) {
                curves.rows.push_back({row[t.column("dataset")], row[t.column("model")] + (row[t.column("dim")] == "-" ? "" : "-d" + row[t.column("dim")]),
                                       row[t.column("epochs")], row[t.column("C")], row[t.column("mean")],
                                       row[t.column("std")], row[t.column("config_hash")]});
                if (row[t.column("best")] != "1") continue;
                const std::string model = row[t.column("model")] + (row[t.column("dim")] == "-" ? "" : "-d" + row[t.column("dim")]);
                best_rows[model][row[t.column("dataset")]] = row;
                class_datasets.insert(row[t.column("dataset")]);
                auto& h = hashes[model];
                if (h.find(row[t.column("config_hash")]) == std::string::npos) {
                    h += (h.empty() ? "" : ",") + row[t.column("config_hash")];
                }
            }
            continue;
        }
        if (name.starts_with("cluster-")) {
            for (const auto& row : t.rows) {
                const std::string model = row[t.column("model")] + (row[t.column("dim")] == "-" ? "" : "-d" + row[t.column("dim")]);
                cluster_rows.push_back({model, {model, row[t.column("dataset")],
                                           percent_pm(std::stod(row[t.column("ari_mean")]), std::stod(row[t.column("ari_std")])),
                                           percent_pm(std::stod(row[t.column("nmi_mean")]), std::stod(row[t.column("nmi_std")])),
                                           row[t.column("config_hash")]}});
            }
            continue;
        }
        if (name.starts_with("retrieval-")) {
            for (const auto& row : t.rows) {
                if (row[t.column("selected")] != "1") continue;
                const std::string model = row[t.column("model")];
                retrieval_rows.push_back({model, {model, row[t.column("dataset")],
                                           percent_pm(std::stod(row[t.column("map")]), std::stod(row[t.column("map_ci")]), 2),
                                           percent_pm(std::stod(row[t.column("p20")]), std::stod(row[t.column("p20_ci")]), 2),
                                           row[t.column("config_hash")]}});
            }
        }
    }

    Table classification;
    classification.header = {"model"};
    for (const auto& d : class_datasets) classification.header.push_back(d);
    classification.header.push_back("config_hash");
    std::vector<std::string> models;
    for (const auto& [model, row] : best_rows) models.push_back(model);
    auto by_rank = [](const std::string& a, const std::string& b) {
        const auto base = [](const std::string& m) { return m.substr(0, m.find("-d")); };
        const int ra = model_rank(base(a));
        const int rb = model_rank(base(b));
        return ra != rb ? ra < rb : a < b;
    };
    std::sort(models.begin(), models.end(), by_rank);
    for (const auto& model : models) {
        std::vector<std::string> row{model};
        for (const auto& d : class_datasets) {
            const auto it = best_rows[model].find(d);
            if (it == best_rows[model].end()) {
                row.push_back("-");
                continue;
            }
            // Column order of classify reports: ..., mean (6), std (7).
            row.push_back(percent_pm(std::stod(it->second[6]), std::stod(it->second[7])));
        }
        row.push_back(hashes[model]);
        classification.rows.push_back(std::move(row));
    }
    auto sorted_rows = [&](std::vector<std::pair<std::string, std::vector<std::string>>>& rows, Table& table) {
        std::stable_sort(rows.begin(), rows.end(), [&](const auto& a, const auto& b) {
            const auto sa = a.first.starts_with("bm25+") ? a.first.substr(5) : a.first;
            const auto sb = b.first.starts_with("bm25+") ? b.first.substr(5) : b.first;
            if (a.first == "bm25" || b.first == "bm25") return a.first == "bm25" && b.first != "bm25";
            return by_rank(sa, sb);
        });
        for (auto& [m, r] : rows) table.rows.push_back(std::move(r));
    };
    sorted_rows(cluster_rows, clustering);
    sorted_rows(retrieval_rows, retrieval);

    const auto tables = out / "tables";
    write_table(tables / "classification", classification,
                {"mean accuracy ± std (percent) under stratified 10-fold cross-validation, best scanned C and epochs"});
    write_table(tables / "clustering", clustering, {"mean ± std (percent) over k-means runs"});
    write_table(tables / "retrieval", retrieval, {"MAP and P@20 (percent) ± 95% confidence half-width"});
    write_table(tables / "accuracy-curves", curves);
    std::cout << "classification rows: " << classification.rows.size() << ", clustering rows: " << clustering.rows.size()
              << ", retrieval rows: " << retrieval.rows.size() << "\nwritten to " << tables.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Document representations, Fisher vectors over word-embedding mixtures, and their evaluation", "fisherdoc"};
    app.set_version_flag("--version", FISHERDOC_VERSION);
    app.require_subcommand(1);
    app.fallthrough();
    app.config_formatter(std::make_shared<CLI::ConfigINI>());
    app.set_config("--config", "", "INI file; [subcommand] sections hold subcommand options");

    Global g;
    if (const char* root = std::getenv("FISHERDOC_DATA")) g.data_root = root;
    app.add_option("--out", g.out, "Output directory")->capture_default_str();
    app.add_option("--data-root", g.data_root, "Root for relative input paths (default $FISHERDOC_DATA)");
    app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
    app.add_option("--dim", g.dim, "Embedding / topic dimension")->check(CLI::IsMember({20, 50, 100}))->capture_default_str();
    app.add_option("--components", g.components, "Mixture components")->check(CLI::Range(1, 10000))->capture_default_str();
    app.add_option("--lambda", g.lambda, "Fusion weight of BM25")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    app.add_option("--topic-fields", g.topic_fields, "title, desc or title+desc")
        ->check(CLI::IsMember({"title", "desc", "description", "title+desc", "title_description"}))
        ->capture_default_str();
    app.add_option("--log-level", g.log_level, "quiet, warn or info")
        ->check(CLI::IsMember({"quiet", "warn", "info"}))
        ->capture_default_str();

    std::string dataset;
    auto add_dataset = [&](CLI::App* sub) { sub->add_option("--dataset", dataset, "Dataset workspace name")->required(); };

    PrepOptions prep;
    auto* prep_cmd = app.add_subcommand("prep", "Load and tokenize a dataset");
    prep_cmd->add_option("--dataset", prep.dataset, "Dataset workspace name")->required();
    prep_cmd->add_option("--format", prep.format, "subj_sent, newsgroups_bydate or trec")
        ->required()
        ->check(CLI::IsMember({"subj_sent", "newsgroups_bydate", "trec"}));
    prep_cmd->add_option("--input", prep.input, "Dataset directory");
    prep_cmd->add_option("--docs", prep.docs, "TREC SGML file or directory");
    prep_cmd->add_option("--topics", prep.topics, "TREC topics file");
    prep_cmd->add_option("--qrels", prep.qrels, "TREC qrels file");
    prep_cmd->add_flag("--strip-headers", prep.strip_headers, "20 Newsgroups: drop message headers");
    prep_cmd->add_flag("--strip-footers", prep.strip_footers, "20 Newsgroups: drop signature blocks");
    prep_cmd->add_flag("--strip-quotes", prep.strip_quotes, "20 Newsgroups: drop quoted lines");

    ModelOptions train_opts;
    auto* train_cmd = app.add_subcommand("train", "Train a representation and encode the corpus");
    add_dataset(train_cmd);
    train_opts.add(train_cmd, true);

    ModelOptions mix_opts;
    std::string family = "gmm";
    std::string embeddings;
    auto* mix_cmd = app.add_subcommand("fit-mixture", "Fit a GMM or moVMF on the cBoW word vectors");
    add_dataset(mix_cmd);
    mix_cmd->add_option("--family", family, "gmm or vmf")->check(CLI::IsMember({"gmm", "vmf"}))->capture_default_str();
    mix_cmd->add_option("--embeddings", embeddings, "Word vectors (default: the dataset's cbow model)");
    mix_opts.add(mix_cmd, false);

    ModelOptions fv_opts;
    auto* fv_cmd = app.add_subcommand("fv", "Encode the corpus as Fisher vectors");
    add_dataset(fv_cmd);
    fv_cmd->add_option("--family", family, "gmm or vmf")->check(CLI::IsMember({"gmm", "vmf"}))->capture_default_str();
    fv_opts.add(fv_cmd, false);

    ModelOptions cls_opts;
    ClassifyOptions cls;
    auto* cls_cmd = app.add_subcommand("classify", "Logistic regression under stratified 10-fold cross-validation");
    add_dataset(cls_cmd);
    cls_opts.add(cls_cmd, true);
    cls_cmd->add_option("--C", cls.c_grid, "Inverse regularization grid")->delimiter(',')->capture_default_str();
    cls_cmd->add_option("--epochs-grid", cls.epoch_grid, "Retrain at each epoch count (e.g. 1,5,10,20,50)")->delimiter(',');

    ModelOptions clu_opts;
    int k = 0;
    int runs = 10;
    bool raw = false;
    auto* clu_cmd = app.add_subcommand("cluster", "k-means clustering scored by ARI and NMI");
    add_dataset(clu_cmd);
    clu_opts.add(clu_cmd, true);
    clu_cmd->add_option("--k", k, "Clusters (default: number of classes)")->check(CLI::Range(0, 1000000));
    clu_cmd->add_option("--runs", runs, "Independent k-means runs")->check(CLI::Range(1, 10000))->capture_default_str();
    clu_cmd->add_flag("--raw", raw, "Cluster raw vectors instead of L2-normalized ones");

    auto* idx_cmd = app.add_subcommand("index", "Build the BM25 inverted index");
    add_dataset(idx_cmd);

    Bm25Params params;
    bool grid = false;
    unsigned threads = 0;
    std::size_t top = 1000;
    auto* search_cmd = app.add_subcommand("search", "BM25 retrieval and evaluation");
    add_dataset(search_cmd);
    search_cmd->add_option("--k1", params.k1, "BM25 k1")->check(CLI::Range(0.0, 1000.0))->capture_default_str();
    search_cmd->add_option("--b", params.b, "BM25 b")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    search_cmd->add_flag("--grid", grid, "Also scan k1 in [0,3] and b in [0,1] with step 0.05");
    search_cmd->add_option("--threads", threads, "Grid-scan workers (0 = all cores)");
    search_cmd->add_option("--top", top, "Documents retrieved per topic")->check(CLI::Range(1, 100000000))->capture_default_str();

    ModelOptions fuse_opts;
    bool lambda_scan = false;
    auto* fuse_cmd = app.add_subcommand("fuse", "Re-rank the BM25 pool with embedding cosine scores");
    add_dataset(fuse_cmd);
    fuse_opts.add(fuse_cmd, true);
    fuse_cmd->add_flag("--lambda-scan", lambda_scan, "Also evaluate lambda = 0, 0.1, ..., 1");

    auto* report_cmd = app.add_subcommand("report", "Collect reports into classification, clustering and retrieval tables");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::string message = e.what();
        if (app.get_subcommands().empty()) {
            for (const auto& extra : app.remaining()) {
                if (!extra.starts_with("-")) {
                    message = "unknown subcommand: " + extra;
                    break;
                }
            }
        }
        std::cerr << "error: " << message << "\n\n" << app.help();
        return 2;
    }

    set_log_level(g.log_level == "quiet" ? LogLevel::quiet : g.log_level == "info" ? LogLevel::info : LogLevel::warn);
    try {
        if (prep_cmd->parsed()) run_prep(g, prep);
        else if (train_cmd->parsed()) run_train(g, dataset, train_opts);
        else if (mix_cmd->parsed()) run_fit_mixture(g, dataset, family, embeddings, mix_opts);
        else if (fv_cmd->parsed()) run_fv(g, dataset, family, fv_opts);
        else if (cls_cmd->parsed()) run_classify(g, dataset, cls_opts, cls);
        else if (clu_cmd->parsed()) run_cluster(g, dataset, clu_opts, k, runs, raw);
        else if (idx_cmd->parsed()) run_index(g, dataset);
        else if (search_cmd->parsed()) run_search(g, dataset, params, grid, threads, top);
        else if (fuse_cmd->parsed()) run_fuse(g, dataset, fuse_opts, lambda_scan);
        else if (report_cmd->parsed()) run_report(g);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
