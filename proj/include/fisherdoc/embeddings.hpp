#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "fisherdoc/corpus.hpp"

namespace fisherdoc {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Vocabulary-indexed word vectors, one row per term.
struct EmbeddingMatrix {
    std::vector<std::string> vocab;
    std::unordered_map<std::string, Eigen::Index> index;
    Eigen::MatrixXd vectors;
    int trained_epochs = 0;

    Eigen::Index size() const { return vectors.rows(); }
    Eigen::Index dim() const { return vectors.cols(); }
    std::optional<Eigen::Index> row(const std::string& term) const;
    void rebuild_index();
};

struct Word2VecOptions {
    int dim = 50;
    int window = 5;
    int negative = 5;
    int epochs = 5;
    std::uint64_t seed = 1;
    double alpha = 0.025;
    double min_alpha = 1e-4;
};

/// Continuous bag-of-words with negative sampling. Every term is kept (no
/// min-count pruning, no subsampling). The context vector is the mean of the
/// window words; the learning rate decays linearly from `alpha` to
/// `min_alpha` over all epochs. Single-threaded and deterministic in `seed`.
EmbeddingMatrix train_cbow(const TokenizedCorpus& corpus, const Word2VecOptions& options);

enum class PvMode { dbow, dm };

struct DocEmbeddings {
    std::vector<std::string> ids;
    Eigen::MatrixXd vectors;
    PvMode mode = PvMode::dbow;
};

/// A trained paragraph-vector model: document vectors plus the frozen word
/// and output weights needed to infer vectors for unseen documents.
struct PvModel {
    PvMode mode = PvMode::dbow;
    Word2VecOptions options;
    EmbeddingMatrix words;           // input word vectors (trained in DM only)
    RowMajorMatrix output;           // negative-sampling output weights
    std::vector<std::int64_t> counts;  // term frequencies, row order of `words`
    std::vector<int> sampling_table;   // unigram^0.75 negative-sampling table
    DocEmbeddings docs;
    int inference_steps = 50;

    void save(const std::filesystem::path& path) const;
    static PvModel load(const std::filesystem::path& path);
};

/// PV-DBOW predicts each word from the document vector alone (no window);
/// PV-DM predicts the centre word from the mean of the document vector and
/// its window.
PvModel train_pv(const TokenizedCorpus& corpus, PvMode mode, const Word2VecOptions& options);

/// Vector for an unseen document: `model.inference_steps` passes over the
/// document with all weights but the new document vector frozen. Seeded by
/// the model seed and the document content.
Eigen::VectorXd infer_pv(const PvModel& model, std::span<const std::string> tokens);

/// Mean of the in-vocabulary word vectors; zero when there are none.
Eigen::VectorXd mean_pool(std::span<const std::string> tokens, const EmbeddingMatrix& embeddings);

/// Rows are the in-vocabulary token vectors in document order.
Eigen::MatrixXd document_word_vectors(std::span<const std::string> tokens, const EmbeddingMatrix& embeddings);

/// Text format: `V d` header, then `term v1 … vd` per line with `%.6f`.
void save_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& embeddings);
EmbeddingMatrix load_embeddings(const std::filesystem::path& path);

/// Negative-sampling loss for one hidden vector against output rows with
/// labels in {0, 1}: -sum_j [y_j log s(u_j.h) + (1 - y_j) log s(-u_j.h)].
struct NegativeSamplingLoss {
    double loss = 0.0;
    Eigen::VectorXd grad_hidden;
    Eigen::MatrixXd grad_outputs;
};

NegativeSamplingLoss negative_sampling_loss(const Eigen::VectorXd& hidden, const Eigen::MatrixXd& outputs,
                                            std::span<const double> labels);

/// The SGD kernel every trainer uses for one (hidden, output row) pair:
/// updates `output` in place and adds this pair's hidden-vector step into
/// `hidden_step`. Both steps equal -lr times the loss gradient.
void negative_sampling_update(const double* hidden, double* output, Eigen::Index dim, double label, double lr,
                              double* hidden_step);

}  // namespace fisherdoc
