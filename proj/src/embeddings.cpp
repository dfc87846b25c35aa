#include "fisherdoc/embeddings.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fisherdoc/common.hpp"
#include "fisherdoc/container.hpp"

namespace fisherdoc {

namespace {

using RowMatrix = RowMajorMatrix;

constexpr std::size_t kTableSize = 1'000'000;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

struct Vocabulary {
    std::vector<std::string> terms;
    std::vector<std::int64_t> counts;
    std::unordered_map<std::string, int> id;
};

// Frequency-descending, ties lexicographic.
Vocabulary build_vocabulary(const TokenizedCorpus& corpus) {
    std::vector<std::pair<std::string, std::size_t>> items(corpus.vocab_counts.begin(), corpus.vocab_counts.end());
    std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    Vocabulary v;
    for (auto& [term, count] : items) {
        v.id.emplace(term, static_cast<int>(v.terms.size()));
        v.terms.push_back(term);
        v.counts.push_back(static_cast<std::int64_t>(count));
    }
    return v;
}

// Word2vec's unigram^0.75 table.
std::vector<int> unigram_table(const std::vector<std::int64_t>& counts) {
    std::vector<int> table(kTableSize);
    double total = 0.0;
    for (auto c : counts) total += std::pow(static_cast<double>(c), 0.75);
    std::size_t i = 0;
    double cumulative = std::pow(static_cast<double>(counts[0]), 0.75) / total;
    for (std::size_t a = 0; a < kTableSize; ++a) {
        table[a] = static_cast<int>(i);
        if (static_cast<double>(a) / static_cast<double>(kTableSize) > cumulative && i + 1 < counts.size()) {
            ++i;
            cumulative += std::pow(static_cast<double>(counts[i]), 0.75) / total;
        }
    }
    return table;
}

std::vector<std::vector<int>> encode(const TokenizedCorpus& corpus, const Vocabulary& vocab) {
    std::vector<std::vector<int>> docs;
    docs.reserve(corpus.docs.size());
    for (const auto& d : corpus.docs) {
        std::vector<int> ids;
        ids.reserve(d.tokens.size());
        for (const auto& t : d.tokens) ids.push_back(vocab.id.at(t));
        docs.push_back(std::move(ids));
    }
    return docs;
}

void validate(const Word2VecOptions& o, std::size_t vocab_size) {
    if (o.epochs < 1) throw Error("embeddings: epochs must be >= 1");
    if (o.dim < 1) throw Error("embeddings: dim must be >= 1");
    if (o.window < 1) throw Error("embeddings: window must be >= 1");
    if (o.negative < 1) throw Error("embeddings: negative must be >= 1");
    if (vocab_size < static_cast<std::size_t>(o.negative) + 1) {
        throw Error("embeddings: vocabulary of " + std::to_string(vocab_size) + " terms is smaller than negative+1 = " +
                    std::to_string(o.negative + 1));
    }
}

RowMatrix random_rows(Eigen::Index rows, Eigen::Index dim, Rng& rng) {
    RowMatrix m(rows, dim);
    const double scale = 1.0 / static_cast<double>(dim);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < dim; ++j) m(i, j) = (uniform01(rng) - 0.5) * scale;
    }
    return m;
}

class LearningRate {
public:
    LearningRate(const Word2VecOptions& o, double total_words)
        : start_(o.alpha), end_(o.min_alpha), total_(std::max(1.0, total_words)) {}
    double at(double processed) const { return std::max(end_, start_ - (start_ - end_) * processed / total_); }

private:
    double start_, end_, total_;
};

// One positive target plus `negative` sampled targets against `hidden`.
void train_pair_set(const double* hidden, int word, RowMatrix& output, const std::vector<int>& table, int negative,
                    double lr, double* hidden_step, Rng& rng) {
    const Eigen::Index dim = output.cols();
    for (int s = 0; s <= negative; ++s) {
        int target = word;
        double label = 1.0;
        if (s > 0) {
            target = table[uniform_index(rng, kTableSize)];
            if (target == word) continue;
            label = 0.0;
        }
        negative_sampling_update(hidden, output.row(target).data(), dim, label, lr, hidden_step);
    }
}

// Same draws as train_pair_set, output rows left untouched (inference).
void frozen_pair_set(const double* hidden, int word, const RowMatrix& output, const std::vector<int>& table,
                     int negative, double lr, double* hidden_step, Rng& rng) {
    const Eigen::Index dim = output.cols();
    for (int s = 0; s <= negative; ++s) {
        int target = word;
        double label = 1.0;
        if (s > 0) {
            target = table[uniform_index(rng, kTableSize)];
            if (target == word) continue;
            label = 0.0;
        }
        const double* row = output.row(target).data();
        double f = 0.0;
        for (Eigen::Index k = 0; k < dim; ++k) f += hidden[k] * row[k];
        const double g = (label - sigmoid(f)) * lr;
        for (Eigen::Index k = 0; k < dim; ++k) hidden_step[k] += g * row[k];
    }
}

EmbeddingMatrix to_embeddings(const Vocabulary& vocab, const RowMatrix& vectors, int epochs) {
    EmbeddingMatrix e;
    e.vocab = vocab.terms;
    e.vectors = vectors;
    e.trained_epochs = epochs;
    e.rebuild_index();
    return e;
}

}  // namespace

void negative_sampling_update(const double* hidden, double* output, Eigen::Index dim, double label, double lr,
                              double* hidden_step) {
    double f = 0.0;
    for (Eigen::Index k = 0; k < dim; ++k) f += hidden[k] * output[k];
    const double g = (label - sigmoid(f)) * lr;
    for (Eigen::Index k = 0; k < dim; ++k) hidden_step[k] += g * output[k];
    for (Eigen::Index k = 0; k < dim; ++k) output[k] += g * hidden[k];
}

NegativeSamplingLoss negative_sampling_loss(const Eigen::VectorXd& hidden, const Eigen::MatrixXd& outputs,
                                            std::span<const double> labels) {
    if (static_cast<Eigen::Index>(labels.size()) != outputs.rows()) throw Error("negative_sampling_loss: label count");
    NegativeSamplingLoss out;
    out.grad_hidden = Eigen::VectorXd::Zero(hidden.size());
    out.grad_outputs = Eigen::MatrixXd::Zero(outputs.rows(), outputs.cols());
    for (Eigen::Index j = 0; j < outputs.rows(); ++j) {
        const double f = outputs.row(j).dot(hidden);
        const double y = labels[static_cast<std::size_t>(j)];
        out.loss -= y * log_sigmoid(f) + (1.0 - y) * log_sigmoid(-f);
        const double dloss_df = sigmoid(f) - y;
        out.grad_hidden += dloss_df * outputs.row(j).transpose();
        out.grad_outputs.row(j) = dloss_df * hidden.transpose();
    }
    return out;
}

std::optional<Eigen::Index> EmbeddingMatrix::row(const std::string& term) const {
    const auto it = index.find(term);
    if (it == index.end()) return std::nullopt;
    return it->second;
}

void EmbeddingMatrix::rebuild_index() {
    index.clear();
    for (std::size_t i = 0; i < vocab.size(); ++i) index.emplace(vocab[i], static_cast<Eigen::Index>(i));
}

EmbeddingMatrix train_cbow(const TokenizedCorpus& corpus, const Word2VecOptions& options) {
    const auto vocab = build_vocabulary(corpus);
    validate(options, vocab.terms.size());
    const auto docs = encode(corpus, vocab);
    const auto table = unigram_table(vocab.counts);
    const Eigen::Index dim = options.dim;

    Rng rng(options.seed);
    RowMatrix input = random_rows(static_cast<Eigen::Index>(vocab.terms.size()), dim, rng);
    RowMatrix output = RowMatrix::Zero(input.rows(), dim);
    const LearningRate rate(options, static_cast<double>(options.epochs) * static_cast<double>(corpus.total_tokens()));

    Eigen::VectorXd hidden(dim);
    Eigen::VectorXd step(dim);
    double processed = 0.0;
    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        for (const auto& doc : docs) {
            const auto n = static_cast<int>(doc.size());
            for (int i = 0; i < n; ++i, processed += 1.0) {
                const int reduced = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(options.window)));
                const int span = options.window - reduced;
                hidden.setZero();
                int count = 0;
                for (int j = std::max(0, i - span); j <= std::min(n - 1, i + span); ++j) {
                    if (j == i) continue;
                    hidden += input.row(doc[static_cast<std::size_t>(j)]).transpose();
                    ++count;
                }
                if (count == 0) continue;
                hidden /= count;
                step.setZero();
                train_pair_set(hidden.data(), doc[static_cast<std::size_t>(i)], output, table, options.negative,
                               rate.at(processed), step.data(), rng);
                for (int j = std::max(0, i - span); j <= std::min(n - 1, i + span); ++j) {
                    if (j == i) continue;
                    input.row(doc[static_cast<std::size_t>(j)]) += step.transpose();
                }
            }
        }
    }
    return to_embeddings(vocab, input, options.epochs);
}

PvModel train_pv(const TokenizedCorpus& corpus, PvMode mode, const Word2VecOptions& options) {
    const auto vocab = build_vocabulary(corpus);
    validate(options, vocab.terms.size());
    const auto docs = encode(corpus, vocab);
    const auto table = unigram_table(vocab.counts);
    const Eigen::Index dim = options.dim;

    Rng rng(options.seed);
    RowMatrix input = random_rows(static_cast<Eigen::Index>(vocab.terms.size()), dim, rng);
    RowMatrix doc_vectors = random_rows(static_cast<Eigen::Index>(docs.size()), dim, rng);
    RowMatrix output = RowMatrix::Zero(input.rows(), dim);
    const LearningRate rate(options, static_cast<double>(options.epochs) * static_cast<double>(corpus.total_tokens()));

    Eigen::VectorXd hidden(dim);
    Eigen::VectorXd step(dim);
    double processed = 0.0;
    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        for (std::size_t d = 0; d < docs.size(); ++d) {
            const auto& doc = docs[d];
            const auto n = static_cast<int>(doc.size());
            auto dv = doc_vectors.row(static_cast<Eigen::Index>(d));
            for (int i = 0; i < n; ++i, processed += 1.0) {
                const double lr = rate.at(processed);
                step.setZero();
                if (mode == PvMode::dbow) {
                    hidden = dv.transpose();
                    train_pair_set(hidden.data(), doc[static_cast<std::size_t>(i)], output, table, options.negative, lr,
                                   step.data(), rng);
                    dv += step.transpose();
                    continue;
                }
                const int reduced = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(options.window)));
                const int span = options.window - reduced;
                hidden = dv.transpose();
                int count = 1;
                for (int j = std::max(0, i - span); j <= std::min(n - 1, i + span); ++j) {
                    if (j == i) continue;
                    hidden += input.row(doc[static_cast<std::size_t>(j)]).transpose();
                    ++count;
                }
                hidden /= count;
                train_pair_set(hidden.data(), doc[static_cast<std::size_t>(i)], output, table, options.negative, lr,
                               step.data(), rng);
                dv += step.transpose();
                for (int j = std::max(0, i - span); j <= std::min(n - 1, i + span); ++j) {
                    if (j == i) continue;
                    input.row(doc[static_cast<std::size_t>(j)]) += step.transpose();
                }
            }
        }
    }

    PvModel model;
    model.mode = mode;
    model.options = options;
    model.words = to_embeddings(vocab, input, mode == PvMode::dm ? options.epochs : 0);
    model.output = output;
    model.counts = vocab.counts;
    model.sampling_table = table;
    model.docs.mode = mode;
    model.docs.vectors = doc_vectors;
    for (const auto& d : corpus.docs) model.docs.ids.push_back(d.id);
    return model;
}

Eigen::VectorXd infer_pv(const PvModel& model, std::span<const std::string> tokens) {
    const Eigen::Index dim = model.output.cols();
    std::vector<int> doc;
    std::string joined;
    for (const auto& t : tokens) {
        if (const auto r = model.words.row(t)) {
            doc.push_back(static_cast<int>(*r));
            joined += t;
            joined += ' ';
        }
    }
    Rng rng(mix_seed(model.options.seed, fnv1a(joined)));
    RowMatrix vector = random_rows(1, dim, rng);
    if (doc.empty()) return vector.row(0).transpose();

    if (model.sampling_table.size() != kTableSize) throw Error("infer_pv: model has no sampling table");
    const int steps = std::max(1, model.inference_steps);
    const LearningRate rate(model.options, static_cast<double>(steps) * static_cast<double>(doc.size()));
    const auto n = static_cast<int>(doc.size());
    Eigen::VectorXd hidden(dim);
    Eigen::VectorXd step(dim);
    double processed = 0.0;
    for (int s = 0; s < steps; ++s) {
        for (int i = 0; i < n; ++i, processed += 1.0) {
            step.setZero();
            hidden = vector.row(0).transpose();
            int count = 1;
            int span = 0;
            if (model.mode == PvMode::dm) {
                span = model.options.window -
                       static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(model.options.window)));
                for (int j = std::max(0, i - span); j <= std::min(n - 1, i + span); ++j) {
                    if (j == i) continue;
                    hidden += model.words.vectors.row(doc[static_cast<std::size_t>(j)]).transpose();
                    ++count;
                }
                hidden /= count;
            }
            frozen_pair_set(hidden.data(), doc[static_cast<std::size_t>(i)], model.output, model.sampling_table,
                            model.options.negative, rate.at(processed), step.data(), rng);
            vector.row(0) += step.transpose();
        }
    }
    return vector.row(0).transpose();
}

void PvModel::save(const std::filesystem::path& path) const {
    Container c(ContainerKind::paragraph_vectors);
    c.put("mode", std::vector<std::string>{mode == PvMode::dbow ? "dbow" : "dm"});
    c.put("options", std::vector<std::int64_t>{options.dim, options.window, options.negative, options.epochs,
                                               static_cast<std::int64_t>(options.seed), inference_steps});
    c.put("rates", Eigen::VectorXd(Eigen::Vector2d(options.alpha, options.min_alpha)));
    c.put("vocab", words.vocab);
    c.put("counts", counts);
    c.put("word_vectors", words.vectors);
    c.put("output", Eigen::MatrixXd(output));
    c.put("doc_ids", docs.ids);
    c.put("doc_vectors", docs.vectors);
    c.save(path);
}

PvModel PvModel::load(const std::filesystem::path& path) {
    const auto c = Container::load(path, ContainerKind::paragraph_vectors);
    PvModel m;
    m.mode = c.strings("mode").at(0) == "dm" ? PvMode::dm : PvMode::dbow;
    const auto& o = c.integers("options");
    if (o.size() != 6) throw Error(path.string() + ": bad PV options entry");
    m.options.dim = static_cast<int>(o[0]);
    m.options.window = static_cast<int>(o[1]);
    m.options.negative = static_cast<int>(o[2]);
    m.options.epochs = static_cast<int>(o[3]);
    m.options.seed = static_cast<std::uint64_t>(o[4]);
    m.inference_steps = static_cast<int>(o[5]);
    const auto rates = c.vector("rates");
    m.options.alpha = rates[0];
    m.options.min_alpha = rates[1];
    m.words.vocab = c.strings("vocab");
    m.words.vectors = c.matrix("word_vectors");
    m.words.rebuild_index();
    m.counts = c.integers("counts");
    if (m.counts.empty()) throw Error(path.string() + ": empty PV vocabulary");
    m.sampling_table = unigram_table(m.counts);
    m.output = c.matrix("output");
    m.docs.ids = c.strings("doc_ids");
    m.docs.vectors = c.matrix("doc_vectors");
    m.docs.mode = m.mode;
    return m;
}

Eigen::VectorXd mean_pool(std::span<const std::string> tokens, const EmbeddingMatrix& embeddings) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(embeddings.dim());
    int count = 0;
    for (const auto& t : tokens) {
        if (const auto r = embeddings.row(t)) {
            sum += embeddings.vectors.row(*r).transpose();
            ++count;
        }
    }
    return count == 0 ? sum : Eigen::VectorXd(sum / count);
}

Eigen::MatrixXd document_word_vectors(std::span<const std::string> tokens, const EmbeddingMatrix& embeddings) {
    std::vector<Eigen::Index> rows;
    for (const auto& t : tokens) {
        if (const auto r = embeddings.row(t)) rows.push_back(*r);
    }
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), embeddings.dim());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = embeddings.vectors.row(rows[i]);
    return out;
}

void save_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& embeddings) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << embeddings.size() << ' ' << embeddings.dim() << '\n';
    char buffer[64];
    for (Eigen::Index i = 0; i < embeddings.size(); ++i) {
        out << embeddings.vocab[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < embeddings.dim(); ++j) {
            std::snprintf(buffer, sizeof buffer, " %.6f", embeddings.vectors(i, j));
            out << buffer;
        }
        out << '\n';
    }
}

namespace {

bool parse_double(std::string_view s, double& value) {
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, value);
    return ec == std::errc{} && ptr == end;
}

bool parse_size(std::string_view s, long long& value) {
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, value);
    return ec == std::errc{} && ptr == end && value >= 0;
}

std::vector<std::string_view> fields_of(std::string_view line) {
    std::vector<std::string_view> f;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
        if (j > i) f.push_back(line.substr(i, j - i));
        i = j;
    }
    return f;
}

}  // namespace

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("missing embeddings file " + path.string() + " (produce it with `fisherdoc train --model cbow`)");
    std::string line;
    const auto where = [&](std::size_t n) { return path.string() + ":" + std::to_string(n) + ": "; };
    if (!std::getline(in, line)) throw Error(where(1) + "empty file");
    const auto header = fields_of(line);
    long long rows = 0;
    long long dim = 0;
    if (header.size() != 2 || !parse_size(header[0], rows) || !parse_size(header[1], dim) || dim == 0) {
        throw Error(where(1) + "malformed header, expected `V d`");
    }
    EmbeddingMatrix e;
    e.vectors.resize(rows, dim);
    std::size_t n = 1;
    long long r = 0;
    while (std::getline(in, line)) {
        ++n;
        const auto f = fields_of(line);
        if (f.empty()) continue;
        if (r >= rows) throw Error(where(n) + "more rows than the header count " + std::to_string(rows));
        if (static_cast<long long>(f.size()) != dim + 1) {
            throw Error(where(n) + "expected a term and " + std::to_string(dim) + " values");
        }
        e.vocab.emplace_back(f[0]);
        for (long long j = 0; j < dim; ++j) {
            double v = 0.0;
            if (!parse_double(f[static_cast<std::size_t>(j + 1)], v)) throw Error(where(n) + "bad number");
            e.vectors(r, j) = v;
        }
        ++r;
    }
    if (r != rows) throw Error(path.string() + ": header declares " + std::to_string(rows) + " rows, body has " + std::to_string(r));
    e.rebuild_index();
    if (e.index.size() != e.vocab.size()) throw Error(path.string() + ": duplicate terms");
    return e;
}

}  // namespace fisherdoc
