#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "fisherdoc/common.hpp"
#include "fisherdoc/corpus.hpp"
#include "fisherdoc/docvectors.hpp"
#include "fisherdoc/embeddings.hpp"
#include "fisherdoc/mixtures.hpp"

namespace fisherdoc {

enum class FisherFamily { gmm, vmf };

struct FisherOptions {
    bool power_normalize = false;  // signed square root, applied before L2
    bool l2_normalize = true;
};

template <typename Scalar>
struct FisherVector {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> values;  // K blocks of d
    FisherFamily family = FisherFamily::gmm;
    bool power_normalized = false;
    bool l2_normalized = false;
};

template <typename Scalar>
void normalize_fisher(FisherVector<Scalar>& fv, const FisherOptions& options) {
    if (options.power_normalize) {
        fv.values = fv.values.unaryExpr([](Scalar v) { return v < 0 ? -std::sqrt(-v) : std::sqrt(v); });
        fv.power_normalized = true;
    }
    if (options.l2_normalize) {
        const Scalar n = fv.values.norm();
        if (n > 0) fv.values /= n;
        fv.l2_normalized = true;
    }
}

/// Gradient of the document log-likelihood w.r.t. the Gaussian means:
/// block i = (1/sqrt(w_i)) sum_t gamma_t(i) (x_t - mu_i) / sigma_i.
/// `words` holds one word vector per row.
template <typename Scalar>
FisherVector<Scalar> fv_gmm(detail::MatrixArg<Scalar> words, const GaussianMixture<Scalar>& gmm,
                            const FisherOptions& options = {}) {
    if (words.rows() == 0) throw Error("fv_gmm: empty document");
    if (words.cols() != gmm.dim()) throw Error("fv_gmm: word vector dimension does not match the mixture");
    const Eigen::Index k = gmm.components();
    const Eigen::Index d = gmm.dim();
    const detail::MatrixX<Scalar> gamma = responsibilities(gmm, words);
    FisherVector<Scalar> fv;
    fv.family = FisherFamily::gmm;
    fv.values.resize(k * d);
    for (Eigen::Index i = 0; i < k; ++i) {
        // sum_t g_t (x_t - mu) = G^T X - (sum_t g_t) mu
        const detail::VectorX<Scalar> weighted = words.transpose() * gamma.col(i) - gamma.col(i).sum() * gmm.means.row(i).transpose();
        fv.values.segment(i * d, d) =
            weighted.cwiseQuotient(gmm.variances.row(i).transpose().cwiseSqrt()) / std::sqrt(gmm.weights[i]);
    }
    normalize_fisher(fv, options);
    return fv;
}

/// Gradient-based encoding under a vMF mixture: words are projected to the
/// unit sphere, then block i = sum_t gamma_t(i) x_t d / (w_i kappa_i).
template <typename Scalar>
FisherVector<Scalar> fv_movmf(detail::MatrixArg<Scalar> words, const VmfMixture<Scalar>& vmf,
                              const FisherOptions& options = {}) {
    if (words.rows() == 0) throw Error("fv_movmf: empty document");
    if (words.cols() != vmf.dim()) throw Error("fv_movmf: word vector dimension does not match the mixture");
    const Eigen::Index k = vmf.components();
    const Eigen::Index d = vmf.dim();
    const detail::MatrixX<Scalar> unit = normalize_rows_l2<Scalar>(words);
    auto logp = log_joint(vmf, unit);
    detail::normalize_rows(logp);
    FisherVector<Scalar> fv;
    fv.family = FisherFamily::vmf;
    fv.values.resize(k * d);
    for (Eigen::Index i = 0; i < k; ++i) {
        fv.values.segment(i * d, d) =
            (unit.transpose() * logp.col(i)) * (static_cast<Scalar>(d) / (vmf.weights[i] * vmf.concentrations[i]));
    }
    normalize_fisher(fv, options);
    return fv;
}

/// Fisher vectors for every document of a corpus. Out-of-vocabulary tokens
/// are skipped; documents left without word vectors get a zero row and are
/// listed in `flagged`.
DocumentVectors encode_fisher(const TokenizedCorpus& corpus, const EmbeddingMatrix& embeddings,
                              const GaussianMixture<double>& gmm, const FisherOptions& options = {});
DocumentVectors encode_fisher(const TokenizedCorpus& corpus, const EmbeddingMatrix& embeddings,
                              const VmfMixture<double>& vmf, const FisherOptions& options = {});

/// Word vectors of the corpus vocabulary, one row per unique term that has
/// an embedding. Weights are 1, or the corpus term counts when
/// `token_weighted`.
struct MixtureTrainingSet {
    Eigen::MatrixXd points;
    Eigen::VectorXd weights;
};

MixtureTrainingSet mixture_training_set(const TokenizedCorpus& corpus, const EmbeddingMatrix& embeddings,
                                        bool token_weighted = false);

}  // namespace fisherdoc
