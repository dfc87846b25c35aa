#include "fisherdoc/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <Eigen/SVD>

#include "fisherdoc/common.hpp"
#include "fisherdoc/container.hpp"

namespace fisherdoc {

// ---------------------------------------------------------------- TF-IDF

double smooth_idf(std::size_t documents, std::size_t document_frequency) {
    return std::log((1.0 + static_cast<double>(documents)) / (1.0 + static_cast<double>(document_frequency))) + 1.0;
}

TfidfModel fit_tfidf(const TokenizedCorpus& corpus, std::size_t max_features, TermSelection selection) {
    if (corpus.docs.empty()) throw Error("fit_tfidf: empty corpus");
    if (max_features == 0) throw Error("fit_tfidf: max_features must be positive");

    std::vector<std::string> terms;
    std::unordered_map<std::string, std::size_t> id;
    for (const auto& [term, count] : corpus.vocab_counts) {
        id.emplace(term, terms.size());
        terms.push_back(term);
    }
    if (terms.empty()) throw Error("fit_tfidf: corpus has no tokens");

    std::vector<std::size_t> df(terms.size(), 0);
    std::vector<std::map<std::size_t, double>> tf(corpus.docs.size());
    for (std::size_t d = 0; d < corpus.docs.size(); ++d) {
        for (const auto& t : corpus.docs[d].tokens) tf[d][id.at(t)] += 1.0;
        for (const auto& [term, count] : tf[d]) ++df[term];
    }
    std::vector<double> idf(terms.size());
    for (std::size_t t = 0; t < terms.size(); ++t) idf[t] = smooth_idf(corpus.docs.size(), df[t]);

    std::vector<double> score(terms.size(), 0.0);
    for (const auto& counts : tf) {
        double norm2 = 0.0;
        for (const auto& [term, count] : counts) norm2 += (count * idf[term]) * (count * idf[term]);
        if (norm2 == 0.0) continue;
        const double inv = 1.0 / std::sqrt(norm2);
        for (const auto& [term, count] : counts) {
            const double w = count * idf[term] * inv;
            score[term] = selection == TermSelection::max_weight ? std::max(score[term], w) : score[term] + w;
        }
    }

    std::vector<std::size_t> order(terms.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto keep = std::min(max_features, terms.size());
    // terms are already lexicographic, so index order breaks ties.
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                      [&](std::size_t a, std::size_t b) { return score[a] != score[b] ? score[a] > score[b] : a < b; });
    order.resize(keep);
    std::sort(order.begin(), order.end());

    TfidfModel model;
    model.idf.resize(static_cast<Eigen::Index>(keep));
    for (std::size_t k = 0; k < keep; ++k) {
        model.column.emplace(terms[order[k]], static_cast<Eigen::Index>(k));
        model.vocab.push_back(terms[order[k]]);
        model.idf[static_cast<Eigen::Index>(k)] = idf[order[k]];
    }
    return model;
}

SparseVector transform_tfidf(const TfidfModel& model, std::span<const std::string> tokens) {
    std::map<Eigen::Index, double> counts;
    for (const auto& t : tokens) {
        if (const auto it = model.column.find(t); it != model.column.end()) counts[it->second] += 1.0;
    }
    SparseVector v(model.size());
    double norm2 = 0.0;
    for (const auto& [col, count] : counts) norm2 += std::pow(count * model.idf[col], 2);
    if (norm2 == 0.0) return v;
    const double inv = 1.0 / std::sqrt(norm2);
    v.reserve(static_cast<Eigen::Index>(counts.size()));
    for (const auto& [col, count] : counts) v.insertBack(col) = count * model.idf[col] * inv;
    return v;
}

SparseRowMatrix transform_tfidf(const TfidfModel& model, const TokenizedCorpus& corpus) {
    std::vector<Eigen::Triplet<double>> triplets;
    for (std::size_t d = 0; d < corpus.docs.size(); ++d) {
        const auto v = transform_tfidf(model, corpus.docs[d].tokens);
        for (SparseVector::InnerIterator it(v); it; ++it) {
            triplets.emplace_back(static_cast<int>(d), static_cast<int>(it.index()), it.value());
        }
    }
    SparseRowMatrix m(static_cast<Eigen::Index>(corpus.docs.size()), model.size());
    m.setFromTriplets(triplets.begin(), triplets.end());
    m.makeCompressed();
    return m;
}

void TfidfModel::save(const std::filesystem::path& path) const {
    Container c(ContainerKind::tfidf);
    c.put("vocab", vocab);
    c.put("idf", idf);
    c.save(path);
}

namespace {

TfidfModel tfidf_from(const Container& c, const std::string& prefix) {
    TfidfModel m;
    m.vocab = c.strings(prefix + "vocab");
    m.idf = c.vector(prefix + "idf");
    for (std::size_t k = 0; k < m.vocab.size(); ++k) m.column.emplace(m.vocab[k], static_cast<Eigen::Index>(k));
    return m;
}

}  // namespace

TfidfModel TfidfModel::load(const std::filesystem::path& path) {
    return tfidf_from(Container::load(path, ContainerKind::tfidf), "");
}

// ---------------------------------------------------------------- LSI

namespace {

Eigen::Index numerical_rank(const Eigen::VectorXd& s, Eigen::Index rows, Eigen::Index cols) {
    if (s.size() == 0 || s[0] == 0.0) return 0;
    const double tol = static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon() * s[0];
    return static_cast<Eigen::Index>((s.array() > tol).count());
}

void fix_signs(Eigen::MatrixXd& v) {
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
        Eigen::Index at = 0;
        v.col(j).cwiseAbs().maxCoeff(&at);
        if (v(at, j) < 0) v.col(j) = -v.col(j);
    }
}

Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& y) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
    return qr.householderQ() * Eigen::MatrixXd::Identity(y.rows(), y.cols());
}

void check_rank(Eigen::Index rank, Eigen::Index d) {
    if (d > rank) {
        throw Error("LSI: requested d=" + std::to_string(d) + " exceeds the achievable rank " + std::to_string(rank));
    }
}

TruncatedSvd dense_svd(const Eigen::MatrixXd& a, Eigen::Index d) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinV);
    TruncatedSvd out;
    out.numerical_rank = numerical_rank(svd.singularValues(), a.rows(), a.cols());
    check_rank(out.numerical_rank, d);
    out.singular_values = svd.singularValues().head(d);
    out.right_vectors = svd.matrixV().leftCols(d);
    fix_signs(out.right_vectors);
    return out;
}

// Block subspace iteration on A^T A with a Rayleigh-Ritz step each sweep.
template <typename Matrix>
TruncatedSvd subspace_svd(const Matrix& a, Eigen::Index d, std::uint64_t seed) {
    const Eigen::Index m = a.cols();
    const Eigen::Index p = std::min<Eigen::Index>(d + 10, std::min(a.rows(), m));
    Rng rng(seed);
    Eigen::MatrixXd q(m, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        for (Eigen::Index i = 0; i < m; ++i) q(i, j) = standard_normal(rng);
    }
    q = orthonormalize(q);

    TruncatedSvd out;
    constexpr int kMaxSweeps = 500;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        const Eigen::MatrixXd b = a * q;
        Eigen::BDCSVD<Eigen::MatrixXd> small(b, Eigen::ComputeThinV);
        const Eigen::MatrixXd v = q * small.matrixV();
        const Eigen::VectorXd s = small.singularValues();
        out.singular_values = s;
        out.right_vectors = v;
        out.numerical_rank = numerical_rank(s, a.rows(), a.cols());

        // Residual of the leading d Ritz pairs of A^T A.
        const Eigen::Index k = std::min(d, out.numerical_rank);
        const Eigen::MatrixXd av = a * v.leftCols(k);
        const Eigen::MatrixXd r = Eigen::MatrixXd(a.transpose() * av) - v.leftCols(k) * s.head(k).array().square().matrix().asDiagonal();
        const double scale = s.size() > 0 ? s[0] * s[0] : 1.0;
        if (scale == 0.0 || r.colwise().norm().maxCoeff() <= 1e-12 * scale) break;
        if (sweep + 1 == kMaxSweeps) warn("LSI: subspace iteration stopped before reaching tolerance");
        q = orthonormalize(Eigen::MatrixXd(a.transpose() * b));
    }
    check_rank(out.numerical_rank, d);
    out.singular_values = out.singular_values.head(d).eval();
    out.right_vectors = out.right_vectors.leftCols(d).eval();
    fix_signs(out.right_vectors);
    return out;
}

bool use_dense(Eigen::Index rows, Eigen::Index cols, SvdMethod method) {
    if (method == SvdMethod::dense) return true;
    if (method == SvdMethod::subspace_iteration) return false;
    return static_cast<double>(rows) * static_cast<double>(cols) <= 4e6;
}

void check_d(Eigen::Index d, Eigen::Index rows, Eigen::Index cols) {
    if (d < 1) throw Error("LSI: d must be positive");
    if (d > std::min(rows, cols)) {
        throw Error("LSI: d=" + std::to_string(d) + " exceeds min(documents, terms)=" + std::to_string(std::min(rows, cols)));
    }
}

}  // namespace

TruncatedSvd truncated_svd(const SparseRowMatrix& matrix, Eigen::Index d, SvdMethod method, std::uint64_t seed) {
    check_d(d, matrix.rows(), matrix.cols());
    if (use_dense(matrix.rows(), matrix.cols(), method)) return dense_svd(Eigen::MatrixXd(matrix), d);
    return subspace_svd(matrix, d, seed);
}

TruncatedSvd truncated_svd(const Eigen::MatrixXd& matrix, Eigen::Index d, SvdMethod method, std::uint64_t seed) {
    check_d(d, matrix.rows(), matrix.cols());
    if (use_dense(matrix.rows(), matrix.cols(), method)) return dense_svd(matrix, d);
    return subspace_svd(matrix, d, seed);
}

LsiModel fit_lsi(const TokenizedCorpus& corpus, Eigen::Index d, std::size_t max_features, SvdMethod method) {
    LsiModel model;
    model.tfidf = fit_tfidf(corpus, max_features);
    const auto x = transform_tfidf(model.tfidf, corpus);
    auto svd = truncated_svd(x, d, method);
    model.projection = std::move(svd.right_vectors);
    model.singular_values = std::move(svd.singular_values);
    return model;
}

Eigen::VectorXd transform_lsi(const LsiModel& model, std::span<const std::string> tokens) {
    const SparseVector v = transform_tfidf(model.tfidf, tokens);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(model.dim());
    for (SparseVector::InnerIterator it(v); it; ++it) out += it.value() * model.projection.row(it.index()).transpose();
    return out;
}

void LsiModel::save(const std::filesystem::path& path) const {
    Container c(ContainerKind::lsi);
    c.put("tfidf.vocab", tfidf.vocab);
    c.put("tfidf.idf", tfidf.idf);
    c.put("projection", projection);
    c.put("singular_values", singular_values);
    c.save(path);
}

LsiModel LsiModel::load(const std::filesystem::path& path) {
    const auto c = Container::load(path, ContainerKind::lsi);
    LsiModel m;
    m.tfidf = tfidf_from(c, "tfidf.");
    m.projection = c.matrix("projection");
    m.singular_values = c.vector("singular_values");
    return m;
}

// ---------------------------------------------------------------- LDA

namespace {

struct GibbsState {
    int topics = 0;
    int vocab = 0;
    std::vector<int> words;          // flattened tokens
    std::vector<std::size_t> offset;  // doc d spans [offset[d], offset[d+1])
    std::vector<int> z;
    std::vector<int> doc_topic;   // D x K
    std::vector<int> word_topic;  // V x K
    std::vector<int> topic_total;
};

double joint_log_likelihood(const GibbsState& s, double alpha, double beta) {
    const int k = s.topics;
    const double vb = s.vocab * beta;
    double ll = 0.0;
    const double lg_beta = std::lgamma(beta);
    for (int t = 0; t < k; ++t) {
        ll += std::lgamma(vb) - std::lgamma(s.topic_total[static_cast<std::size_t>(t)] + vb);
    }
    for (int w = 0; w < s.vocab; ++w) {
        for (int t = 0; t < k; ++t) {
            const int n = s.word_topic[static_cast<std::size_t>(w) * k + t];
            if (n > 0) ll += std::lgamma(n + beta) - lg_beta;
        }
    }
    const double lg_alpha = std::lgamma(alpha);
    const std::size_t docs = s.offset.size() - 1;
    for (std::size_t d = 0; d < docs; ++d) {
        const auto len = static_cast<double>(s.offset[d + 1] - s.offset[d]);
        ll += std::lgamma(k * alpha) - std::lgamma(len + k * alpha);
        for (int t = 0; t < k; ++t) {
            const int n = s.doc_topic[d * static_cast<std::size_t>(k) + static_cast<std::size_t>(t)];
            if (n > 0) ll += std::lgamma(n + alpha) - lg_alpha;
        }
    }
    return ll;
}

int sample_topic(std::vector<double>& p, Rng& rng) {
    for (std::size_t i = 1; i < p.size(); ++i) p[i] += p[i - 1];
    const double u = uniform01(rng) * p.back();
    const auto it = std::upper_bound(p.begin(), p.end(), u);
    return static_cast<int>(std::min<std::ptrdiff_t>(it - p.begin(), static_cast<std::ptrdiff_t>(p.size()) - 1));
}

}  // namespace

LdaModel fit_lda(const TokenizedCorpus& corpus, const LdaOptions& options) {
    if (options.topics < 2) throw Error("LDA: need at least 2 topics");
    if (options.passes < 20 || options.passes > 100) throw Error("LDA: passes must lie in [20, 100]");
    if (options.chunk_size < 1) throw Error("LDA: chunk_size must be positive");

    LdaModel model;
    for (const auto& [term, count] : corpus.vocab_counts) {
        model.word_id.emplace(term, static_cast<int>(model.vocab.size()));
        model.vocab.push_back(term);
    }
    if (model.vocab.empty()) throw Error("LDA: corpus has no tokens");
    model.alpha = 1.0 / options.topics;
    model.beta = 0.01;
    model.inference_sweeps = options.inference_sweeps;
    model.seed = options.seed;

    GibbsState s;
    s.topics = options.topics;
    s.vocab = static_cast<int>(model.vocab.size());
    s.offset.push_back(0);
    for (const auto& d : corpus.docs) {
        for (const auto& t : d.tokens) s.words.push_back(model.word_id.at(t));
        s.offset.push_back(s.words.size());
    }
    const std::size_t k = static_cast<std::size_t>(options.topics);
    const std::size_t docs = corpus.docs.size();
    s.z.resize(s.words.size());
    s.doc_topic.assign(docs * k, 0);
    s.word_topic.assign(static_cast<std::size_t>(s.vocab) * k, 0);
    s.topic_total.assign(k, 0);

    Rng rng(options.seed);
    for (std::size_t d = 0; d < docs; ++d) {
        for (std::size_t i = s.offset[d]; i < s.offset[d + 1]; ++i) {
            const int t = static_cast<int>(uniform_index(rng, k));
            s.z[i] = t;
            ++s.doc_topic[d * k + static_cast<std::size_t>(t)];
            ++s.word_topic[static_cast<std::size_t>(s.words[i]) * k + static_cast<std::size_t>(t)];
            ++s.topic_total[static_cast<std::size_t>(t)];
        }
    }

    const double alpha = model.alpha;
    const double beta = model.beta;
    const double vb = s.vocab * beta;
    std::vector<double> p(k);
    const std::size_t chunk = static_cast<std::size_t>(options.chunk_size);
    for (int pass = 0; pass < options.passes; ++pass) {
        for (std::size_t start = 0; start < docs; start += chunk) {
            const std::size_t stop = std::min(docs, start + chunk);
            for (std::size_t d = start; d < stop; ++d) {
                int* dt = &s.doc_topic[d * k];
                for (std::size_t i = s.offset[d]; i < s.offset[d + 1]; ++i) {
                    int* wt = &s.word_topic[static_cast<std::size_t>(s.words[i]) * k];
                    const auto old = static_cast<std::size_t>(s.z[i]);
                    --dt[old];
                    --wt[old];
                    --s.topic_total[old];
                    for (std::size_t t = 0; t < k; ++t) {
                        p[t] = (dt[t] + alpha) * (wt[t] + beta) / (s.topic_total[t] + vb);
                    }
                    const auto nt = static_cast<std::size_t>(sample_topic(p, rng));
                    s.z[i] = static_cast<int>(nt);
                    ++dt[nt];
                    ++wt[nt];
                    ++s.topic_total[nt];
                }
            }
        }
        model.log_likelihood.push_back(joint_log_likelihood(s, alpha, beta));
    }

    model.topic_word.resize(options.topics, s.vocab);
    for (std::size_t t = 0; t < k; ++t) {
        const double denom = s.topic_total[t] + vb;
        for (int w = 0; w < s.vocab; ++w) {
            model.topic_word(static_cast<Eigen::Index>(t), w) =
                (s.word_topic[static_cast<std::size_t>(w) * k + t] + beta) / denom;
        }
    }
    return model;
}

Eigen::VectorXd infer_lda(const LdaModel& model, std::span<const std::string> tokens, bool* flagged) {
    const int k = model.topics();
    std::vector<int> words;
    std::string joined;
    for (const auto& t : tokens) {
        if (const auto it = model.word_id.find(t); it != model.word_id.end()) {
            words.push_back(it->second);
            joined += t;
            joined += ' ';
        }
    }
    if (flagged) *flagged = words.empty();
    if (words.empty()) return Eigen::VectorXd::Constant(k, 1.0 / k);

    Rng rng(mix_seed(model.seed, fnv1a(joined)));
    std::vector<int> z(words.size());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (auto& zi : z) {
        zi = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(k)));
        ++counts[static_cast<std::size_t>(zi)];
    }
    const int sweeps = std::max(2, model.inference_sweeps);
    const int burn_in = sweeps / 2;
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(k);
    std::vector<double> p(static_cast<std::size_t>(k));
    const double norm = static_cast<double>(words.size()) + k * model.alpha;
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        for (std::size_t i = 0; i < words.size(); ++i) {
            --counts[static_cast<std::size_t>(z[i])];
            for (int t = 0; t < k; ++t) {
                p[static_cast<std::size_t>(t)] = (counts[static_cast<std::size_t>(t)] + model.alpha) * model.topic_word(t, words[i]);
            }
            z[i] = sample_topic(p, rng);
            ++counts[static_cast<std::size_t>(z[i])];
        }
        if (sweep >= burn_in) {
            for (int t = 0; t < k; ++t) theta[t] += (counts[static_cast<std::size_t>(t)] + model.alpha) / norm;
        }
    }
    return theta / theta.sum();
}

void LdaModel::save(const std::filesystem::path& path) const {
    Container c(ContainerKind::lda);
    c.put("vocab", vocab);
    c.put("topic_word", topic_word);
    c.put_scalar("alpha", alpha);
    c.put_scalar("beta", beta);
    c.put("inference_sweeps", std::vector<std::int64_t>{inference_sweeps});
    c.put("seed", std::vector<std::int64_t>{static_cast<std::int64_t>(seed)});
    c.put("log_likelihood", Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(
                                log_likelihood.data(), static_cast<Eigen::Index>(log_likelihood.size()))));
    c.save(path);
}

LdaModel LdaModel::load(const std::filesystem::path& path) {
    const auto c = Container::load(path, ContainerKind::lda);
    LdaModel m;
    m.vocab = c.strings("vocab");
    for (std::size_t w = 0; w < m.vocab.size(); ++w) m.word_id.emplace(m.vocab[w], static_cast<int>(w));
    m.topic_word = c.matrix("topic_word");
    m.alpha = c.scalar("alpha");
    m.beta = c.scalar("beta");
    m.inference_sweeps = static_cast<int>(c.integers("inference_sweeps").at(0));
    m.seed = static_cast<std::uint64_t>(c.integers("seed").at(0));
    const auto ll = c.vector("log_likelihood");
    m.log_likelihood.assign(ll.data(), ll.data() + ll.size());
    return m;
}

}  // namespace fisherdoc
