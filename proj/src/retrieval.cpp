#include "fisherdoc/retrieval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "fisherdoc/common.hpp"
#include "fisherdoc/container.hpp"

namespace fisherdoc {

InvertedIndex build_index(const TokenizedCorpus& corpus) {
    if (corpus.docs.empty()) throw Error("build_index: empty collection");
    std::vector<std::size_t> order(corpus.docs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return corpus.docs[a].id < corpus.docs[b].id; });
    InvertedIndex index;
    double total = 0.0;
    for (std::size_t r = 0; r < order.size(); ++r) {
        const auto& doc = corpus.docs[order[r]];
        if (r > 0 && doc.id == index.doc_ids.back()) throw Error("build_index: duplicate document id " + doc.id);
        index.doc_ids.push_back(doc.id);
        index.doc_length.push_back(static_cast<double>(doc.tokens.size()));
        total += static_cast<double>(doc.tokens.size());
        std::map<std::string, std::int64_t> tf;
        for (const auto& t : doc.tokens) ++tf[t];
        for (const auto& [term, f] : tf) index.postings[term].push_back({static_cast<std::int64_t>(r), f});
    }
    if (total == 0.0) throw Error("build_index: collection has no tokens");
    index.average_length = total / static_cast<double>(index.doc_ids.size());
    return index;
}

InvertedIndex build_index(std::span<const RawDocument> docs, const Stoplist& stoplist) {
    return build_index(preprocess(docs, stoplist));
}

void InvertedIndex::save(const std::filesystem::path& path) const {
    Container c(ContainerKind::inverted_index);
    c.put("doc_ids", doc_ids);
    c.put("doc_length", Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(doc_length.data(), static_cast<Eigen::Index>(doc_length.size()))));
    std::vector<std::string> terms;
    std::vector<std::int64_t> offsets{0};
    std::vector<std::int64_t> docs;
    std::vector<std::int64_t> tfs;
    for (const auto& [term, list] : postings) {
        terms.push_back(term);
        for (const auto& p : list) {
            docs.push_back(p.doc);
            tfs.push_back(p.tf);
        }
        offsets.push_back(static_cast<std::int64_t>(docs.size()));
    }
    c.put("terms", std::move(terms));
    c.put("offsets", std::move(offsets));
    c.put("postings_doc", std::move(docs));
    c.put("postings_tf", std::move(tfs));
    c.save(path);
}

InvertedIndex InvertedIndex::load(const std::filesystem::path& path) {
    const auto c = Container::load(path, ContainerKind::inverted_index);
    InvertedIndex index;
    index.doc_ids = c.strings("doc_ids");
    const Eigen::VectorXd lengths = c.vector("doc_length");
    index.doc_length.assign(lengths.data(), lengths.data() + lengths.size());
    if (index.doc_length.size() != index.doc_ids.size() || index.doc_ids.empty()) {
        throw Error(path.string() + ": inconsistent index");
    }
    index.average_length = std::accumulate(index.doc_length.begin(), index.doc_length.end(), 0.0) /
                           static_cast<double>(index.doc_length.size());
    const auto& terms = c.strings("terms");
    const auto& offsets = c.integers("offsets");
    const auto& docs = c.integers("postings_doc");
    const auto& tfs = c.integers("postings_tf");
    if (offsets.size() != terms.size() + 1 || docs.size() != tfs.size() ||
        (offsets.empty() ? 0 : offsets.back()) != static_cast<std::int64_t>(docs.size())) {
        throw Error(path.string() + ": inconsistent postings");
    }
    for (std::size_t t = 0; t < terms.size(); ++t) {
        auto& list = index.postings[terms[t]];
        for (auto i = offsets[t]; i < offsets[t + 1]; ++i) {
            const auto u = static_cast<std::size_t>(i);
            if (docs[u] < 0 || docs[u] >= static_cast<std::int64_t>(index.doc_ids.size())) {
                throw Error(path.string() + ": posting refers to an unknown document");
            }
            list.push_back({docs[u], tfs[u]});
        }
    }
    return index;
}

double bm25_idf(std::size_t documents, std::size_t document_frequency) {
    const double n = static_cast<double>(document_frequency);
    return std::log(1.0 + (static_cast<double>(documents) - n + 0.5) / (n + 0.5));
}

namespace {

struct QueryTerm {
    const std::vector<Posting>* postings;
    double weight;  // idf times occurrences in the query
};

std::vector<QueryTerm> prepare_query(const InvertedIndex& index, std::span<const std::string> query) {
    std::map<std::string, int> occurrences;
    for (const auto& t : query) ++occurrences[t];
    std::vector<QueryTerm> out;
    for (const auto& [term, count] : occurrences) {
        const auto it = index.postings.find(term);
        if (it == index.postings.end() || it->second.empty()) continue;
        out.push_back({&it->second, count * bm25_idf(index.size(), it->second.size())});
    }
    return out;
}

// Reusable score buffer; one per worker.
struct Accumulator {
    std::vector<double> score;
    std::vector<std::int64_t> touched;

    explicit Accumulator(std::size_t n) : score(n, 0.0) {}

    RankedList rank(const InvertedIndex& index, const std::vector<QueryTerm>& terms, const Bm25Params& params,
                    std::size_t top) {
        for (const auto& term : terms) {
            for (const auto& p : *term.postings) {
                const auto d = static_cast<std::size_t>(p.doc);
                if (score[d] == 0.0) touched.push_back(p.doc);
                const double f = static_cast<double>(p.tf);
                const double norm = params.k1 * (1.0 - params.b + params.b * index.doc_length[d] / index.average_length);
                // idf > 0 and f > 0, so every touched score is strictly positive.
                score[d] += term.weight * f / (f + norm);
            }
        }
        auto before = [&](std::int64_t a, std::int64_t b) {
            const double sa = score[static_cast<std::size_t>(a)];
            const double sb = score[static_cast<std::size_t>(b)];
            return sa != sb ? sa > sb : a < b;
        };
        const std::size_t keep = std::min(top, touched.size());
        std::partial_sort(touched.begin(), touched.begin() + static_cast<std::ptrdiff_t>(keep), touched.end(), before);
        RankedList list;
        list.reserve(keep);
        for (std::size_t i = 0; i < keep; ++i) {
            const auto d = static_cast<std::size_t>(touched[i]);
            list.push_back({index.doc_ids[d], score[d]});
        }
        for (auto d : touched) score[static_cast<std::size_t>(d)] = 0.0;
        touched.clear();
        return list;
    }
};

void check_params(const Bm25Params& params) {
    if (!(params.k1 >= 0.0)) throw Error("bm25: k1 must be >= 0");
    if (!(params.b >= 0.0 && params.b <= 1.0)) throw Error("bm25: b must lie in [0, 1]");
}

}  // namespace

RankedList bm25_search(const InvertedIndex& index, std::span<const std::string> query, const Bm25Params& params,
                       std::size_t top, bool* flagged) {
    check_params(params);
    const auto terms = prepare_query(index, query);
    if (flagged != nullptr) *flagged = terms.empty();
    if (terms.empty()) return {};
    Accumulator acc(index.size());
    return acc.rank(index, terms, params, top);
}

RankedRun bm25_run(const InvertedIndex& index, const std::map<std::string, std::vector<std::string>>& queries,
                   const Bm25Params& params, std::size_t top) {
    check_params(params);
    Accumulator acc(index.size());
    RankedRun run;
    std::size_t empty = 0;
    for (const auto& [topic, tokens] : queries) {
        const auto terms = prepare_query(index, tokens);
        if (terms.empty()) ++empty;
        run[topic] = acc.rank(index, terms, params, top);
    }
    if (empty > 0) warn(std::to_string(empty) + " topic(s) have no indexed query term");
    return run;
}

// ------------------------------------------------------------------ metrics

namespace {

bool relevant(const std::map<std::string, int>& judgments, const std::string& doc) {
    const auto it = judgments.find(doc);
    return it != judgments.end() && it->second > 0;
}

std::size_t relevant_count(const std::map<std::string, int>& judgments) {
    return static_cast<std::size_t>(
        std::count_if(judgments.begin(), judgments.end(), [](const auto& j) { return j.second > 0; }));
}

}  // namespace

double average_precision(const RankedList& list, const std::map<std::string, int>& judgments) {
    const std::size_t total = relevant_count(judgments);
    if (total == 0) return 0.0;
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t r = 0; r < list.size(); ++r) {
        if (relevant(judgments, list[r].doc)) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(r + 1);
        }
    }
    return sum / static_cast<double>(total);
}

double precision_at(const RankedList& list, const std::map<std::string, int>& judgments, std::size_t k) {
    if (k == 0) throw Error("precision_at: k must be >= 1");
    std::size_t hits = 0;
    for (std::size_t r = 0; r < std::min(k, list.size()); ++r) hits += relevant(judgments, list[r].doc);
    return static_cast<double>(hits) / static_cast<double>(k);
}

double ci95(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n < 2) return 0.0;
    const double m = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double v : values) ss += (v - m) * (v - m);
    const double s = std::sqrt(ss / static_cast<double>(n - 1));
    if (s == 0.0) return 0.0;
    const boost::math::students_t dist(static_cast<double>(n - 1));
    return boost::math::quantile(dist, 0.975) * s / std::sqrt(static_cast<double>(n));
}

RetrievalReport evaluate_run(const RankedRun& run, const Qrels& qrels) {
    RetrievalReport report;
    std::vector<double> ap;
    std::vector<double> p20;
    static const RankedList nothing;
    for (const auto& [topic, judgments] : qrels) {
        if (relevant_count(judgments) == 0) continue;
        const auto it = run.find(topic);
        const RankedList& list = it == run.end() ? nothing : it->second;
        TopicScore s{topic, average_precision(list, judgments), precision_at(list, judgments, 20)};
        ap.push_back(s.ap);
        p20.push_back(s.p20);
        report.topics.push_back(std::move(s));
    }
    if (!ap.empty()) {
        report.map = std::accumulate(ap.begin(), ap.end(), 0.0) / static_cast<double>(ap.size());
        report.p20 = std::accumulate(p20.begin(), p20.end(), 0.0) / static_cast<double>(p20.size());
    }
    report.map_ci = ci95(ap);
    report.p20_ci = ci95(p20);
    return report;
}

double map_metric(const RankedRun& run, const Qrels& qrels) { return evaluate_run(run, qrels).map; }

double p_at_20(const RankedRun& run, const Qrels& qrels) { return evaluate_run(run, qrels).p20; }

// ------------------------------------------------------------------ grid scan

std::vector<Bm25Params> bm25_grid() {
    std::vector<Bm25Params> grid;
    for (int i = 0; i <= 60; ++i) {
        for (int j = 0; j <= 20; ++j) grid.push_back({i / 20.0, j / 20.0});
    }
    return grid;
}

GridScan grid_scan(const InvertedIndex& index, const std::map<std::string, std::vector<std::string>>& queries,
                   const Qrels& qrels, std::span<const Bm25Params> grid, unsigned threads, std::size_t top) {
    if (grid.empty()) throw Error("grid_scan: empty grid");
    for (const auto& p : grid) check_params(p);
    std::vector<std::pair<std::string, std::vector<QueryTerm>>> prepared;
    for (const auto& [topic, tokens] : queries) prepared.emplace_back(topic, prepare_query(index, tokens));

    GridScan scan;
    scan.cells.resize(grid.size());
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(grid.size()));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        Accumulator acc(index.size());
        for (std::size_t c = next++; c < grid.size(); c = next++) {
            RankedRun run;
            for (const auto& [topic, terms] : prepared) run[topic] = acc.rank(index, terms, grid[c], top);
            const auto report = evaluate_run(run, qrels);
            scan.cells[c] = {grid[c], report.map, report.p20};
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    for (std::size_t c = 0; c < scan.cells.size(); ++c) {
        if (scan.cells[c].map > scan.cells[scan.best].map) scan.best = c;
        const auto& p = scan.cells[c].params;
        if (std::abs(p.k1 - 1.2) < 1e-12 && std::abs(p.b - 0.75) < 1e-12) scan.default_cell = c;
    }
    return scan;
}

// ------------------------------------------------------------------ fusion

std::vector<double> minmax_normalize(std::span<const double> scores) {
    std::vector<double> out(scores.size(), 0.0);
    if (scores.empty()) return out;
    const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
    const double range = *hi - *lo;
    if (!(range > 0.0)) {
        if (scores.size() > 1) warn("min-max normalization of a constant score list; mapping to zeros");
        return out;
    }
    for (std::size_t i = 0; i < scores.size(); ++i) out[i] = (scores[i] - *lo) / range;
    return out;
}

RankedList fuse(const RankedList& bm25, std::span<const double> cosine, double lambda) {
    if (cosine.size() != bm25.size()) throw Error("fuse: need one cosine score per pooled document");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error("fuse: lambda must lie in [0, 1]");
    std::vector<double> raw(bm25.size());
    for (std::size_t i = 0; i < bm25.size(); ++i) raw[i] = bm25[i].score;
    const auto nb = minmax_normalize(raw);
    const auto nc = minmax_normalize(cosine);
    std::vector<double> fused(bm25.size());
    for (std::size_t i = 0; i < bm25.size(); ++i) fused[i] = lambda * nb[i] + (1.0 - lambda) * nc[i];
    std::vector<std::size_t> order(bm25.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fused[a] > fused[b]; });
    RankedList out;
    out.reserve(order.size());
    for (auto i : order) out.push_back({bm25[i].doc, fused[i]});
    return out;
}

FusionResult fuse(const RankedRun& bm25, const DocumentVectors& docs, const DocumentVectors& queries, double lambda) {
    FusionResult result;
    for (const auto& [topic, list] : bm25) {
        const auto q = queries.find(topic);
        if (!q) throw Error("fuse: no query vector for topic " + topic);
        std::vector<double> cosine(list.size(), 0.0);
        for (std::size_t i = 0; i < list.size(); ++i) {
            const auto d = docs.find(list[i].doc);
            if (!d) {
                ++result.missing_vectors;
                continue;
            }
            cosine[i] = queries.cosine(*q, docs, *d);
        }
        result.run[topic] = fuse(list, cosine, lambda);
    }
    if (result.missing_vectors > 0) {
        warn(std::to_string(result.missing_vectors) + " pooled document(s) have no vector; cosine set to 0");
    }
    return result;
}

// ------------------------------------------------------------------ TREC runs

void write_run(const std::filesystem::path& path, const RankedRun& run, const std::string& tag) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    char buffer[64];
    for (const auto& [topic, list] : run) {
        for (std::size_t r = 0; r < list.size(); ++r) {
            std::snprintf(buffer, sizeof buffer, "%.6f", list[r].score);
            out << topic << " Q0 " << list[r].doc << ' ' << r + 1 << ' ' << buffer << ' ' << tag << '\n';
        }
    }
    if (!out) throw Error("write failed: " + path.string());
}

RankedRun read_run(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open run file " + path.string());
    std::map<std::string, std::vector<std::pair<long, ScoredDoc>>> rows;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        std::istringstream fields(line);
        std::string topic, q0, doc, tag;
        long rank = 0;
        double score = 0.0;
        if (!(fields >> topic)) continue;
        if (!(fields >> q0 >> doc >> rank >> score >> tag)) {
            throw Error(path.string() + ":" + std::to_string(number) + ": expected 6 columns");
        }
        rows[topic].push_back({rank, {doc, score}});
    }
    RankedRun run;
    for (auto& [topic, list] : rows) {
        std::stable_sort(list.begin(), list.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        auto& out = run[topic];
        for (auto& [rank, scored] : list) out.push_back(std::move(scored));
    }
    return run;
}

}  // namespace fisherdoc
