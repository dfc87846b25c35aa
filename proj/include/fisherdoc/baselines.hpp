#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "fisherdoc/corpus.hpp"
#include "fisherdoc/docvectors.hpp"

namespace fisherdoc {

// ---------------------------------------------------------------- TF-IDF

/// How a term's weight is aggregated over documents when keeping the top
/// `max_features` terms.
enum class TermSelection { max_weight, sum_weight };

struct TfidfModel {
    std::vector<std::string> vocab;
    Eigen::VectorXd idf;
    std::unordered_map<std::string, Eigen::Index> column;

    Eigen::Index size() const { return static_cast<Eigen::Index>(vocab.size()); }

    void save(const std::filesystem::path& path) const;
    static TfidfModel load(const std::filesystem::path& path);
};

/// Smoothed idf: ln((1 + N) / (1 + df)) + 1.
double smooth_idf(std::size_t documents, std::size_t document_frequency);

/// Keeps the `max_features` terms with the largest aggregated L2-normalized
/// tf-idf weight; ties go to the lexicographically smaller term.
TfidfModel fit_tfidf(const TokenizedCorpus& corpus, std::size_t max_features = 5000,
                     TermSelection selection = TermSelection::max_weight);

/// Raw-count tf times idf, L2-normalized. Out-of-vocabulary tokens are
/// ignored; a document with none in vocabulary maps to the zero vector.
SparseVector transform_tfidf(const TfidfModel& model, std::span<const std::string> tokens);

SparseRowMatrix transform_tfidf(const TfidfModel& model, const TokenizedCorpus& corpus);

// ---------------------------------------------------------------- LSI

enum class SvdMethod { automatic, dense, subspace_iteration };

/// Top right-singular vectors of a (documents x terms) matrix.
struct TruncatedSvd {
    Eigen::VectorXd singular_values;  // descending
    Eigen::MatrixXd right_vectors;    // terms x d, orthonormal columns
    Eigen::Index numerical_rank = 0;  // among the computed values
};

TruncatedSvd truncated_svd(const SparseRowMatrix& matrix, Eigen::Index d, SvdMethod method = SvdMethod::automatic,
                           std::uint64_t seed = 0);
TruncatedSvd truncated_svd(const Eigen::MatrixXd& matrix, Eigen::Index d, SvdMethod method = SvdMethod::automatic,
                           std::uint64_t seed = 0);

struct LsiModel {
    TfidfModel tfidf;
    Eigen::MatrixXd projection;  // |tfidf vocab| x d
    Eigen::VectorXd singular_values;

    Eigen::Index dim() const { return projection.cols(); }

    void save(const std::filesystem::path& path) const;
    static LsiModel load(const std::filesystem::path& path);
};

/// Truncated SVD of the corpus TF-IDF matrix. Throws when `d` exceeds the
/// numerical rank, naming the achievable rank.
LsiModel fit_lsi(const TokenizedCorpus& corpus, Eigen::Index d, std::size_t max_features = 5000,
                 SvdMethod method = SvdMethod::automatic);

Eigen::VectorXd transform_lsi(const LsiModel& model, std::span<const std::string> tokens);

// ---------------------------------------------------------------- LDA

struct LdaOptions {
    int topics = 50;
    int chunk_size = 1000;
    int passes = 20;
    std::uint64_t seed = 0;
    /// Gibbs sweeps used by infer_lda for a single document.
    int inference_sweeps = 50;
};

struct LdaModel {
    std::vector<std::string> vocab;
    std::unordered_map<std::string, int> word_id;
    Eigen::MatrixXd topic_word;  // topics x V, rows on the simplex
    double alpha = 0.0;
    double beta = 0.01;
    int inference_sweeps = 50;
    std::uint64_t seed = 0;
    /// Joint log p(w, z) after each pass.
    std::vector<double> log_likelihood;

    int topics() const { return static_cast<int>(topic_word.rows()); }

    void save(const std::filesystem::path& path) const;
    static LdaModel load(const std::filesystem::path& path);
};

/// Collapsed Gibbs sampling with alpha = 1/topics and beta = 0.01. Documents
/// are swept in chunks of `chunk_size`; `passes` must lie in [20, 100].
LdaModel fit_lda(const TokenizedCorpus& corpus, const LdaOptions& options);

/// Topic proportions of one document, Gibbs-sampled against the fixed
/// topic-word matrix. Seeded by the model seed and the document content. An
/// empty (or all out-of-vocabulary) document gets the uniform vector and
/// `*flagged` is set.
Eigen::VectorXd infer_lda(const LdaModel& model, std::span<const std::string> tokens, bool* flagged = nullptr);

}  // namespace fisherdoc
