#include "fisherdoc/fisher.hpp"

namespace fisherdoc {

namespace {

template <typename Model>
DocumentVectors encode_all(const TokenizedCorpus& corpus, const EmbeddingMatrix& embeddings, const Model& model,
                           const FisherOptions& options, const std::string& method) {
    const Eigen::Index width = model.components() * model.dim();
    Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(corpus.docs.size()), width);
    std::vector<std::string> ids;
    ids.reserve(corpus.docs.size());
    std::vector<std::int64_t> flagged;
    for (std::size_t i = 0; i < corpus.docs.size(); ++i) {
        const auto& doc = corpus.docs[i];
        ids.push_back(doc.id);
        const Eigen::MatrixXd words = document_word_vectors(doc.tokens, embeddings);
        if (words.rows() == 0) {
            flagged.push_back(static_cast<std::int64_t>(i));
            continue;
        }
        if constexpr (std::is_same_v<Model, GaussianMixture<double>>) {
            rows.row(static_cast<Eigen::Index>(i)) = fv_gmm<double>(words, model, options).values.transpose();
        } else {
            rows.row(static_cast<Eigen::Index>(i)) = fv_movmf<double>(words, model, options).values.transpose();
        }
    }
    auto out = make_dense(std::move(ids), std::move(rows), method);
    out.flagged = std::move(flagged);
    return out;
}

}  // namespace

DocumentVectors encode_fisher(const TokenizedCorpus& corpus, const EmbeddingMatrix& embeddings,
                              const GaussianMixture<double>& gmm, const FisherOptions& options) {
    return encode_all(corpus, embeddings, gmm, options, "fv_gmm");
}

DocumentVectors encode_fisher(const TokenizedCorpus& corpus, const EmbeddingMatrix& embeddings,
                              const VmfMixture<double>& vmf, const FisherOptions& options) {
    return encode_all(corpus, embeddings, vmf, options, "fv_movmf");
}

MixtureTrainingSet mixture_training_set(const TokenizedCorpus& corpus, const EmbeddingMatrix& embeddings,
                                        bool token_weighted) {
    std::vector<Eigen::Index> rows;
    std::vector<double> weights;
    for (const auto& [term, count] : corpus.vocab_counts) {
        if (const auto r = embeddings.row(term)) {
            rows.push_back(*r);
            weights.push_back(token_weighted ? static_cast<double>(count) : 1.0);
        }
    }
    MixtureTrainingSet set;
    set.points.resize(static_cast<Eigen::Index>(rows.size()), embeddings.dim());
    set.weights.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        set.points.row(static_cast<Eigen::Index>(i)) = embeddings.vectors.row(rows[i]);
        set.weights[static_cast<Eigen::Index>(i)] = weights[i];
    }
    return set;
}

}  // namespace fisherdoc
