#include "fisherdoc/pipeline.hpp"

#include <algorithm>
#include <array>

#include "fisherdoc/common.hpp"

namespace fisherdoc {

namespace {

constexpr std::array<std::pair<Representation, std::string_view>, 8> kNames{{
    {Representation::tfidf, "tfidf"},
    {Representation::lsi, "lsi"},
    {Representation::lda, "lda"},
    {Representation::cbow, "cbow"},
    {Representation::pv_dbow, "pv_dbow"},
    {Representation::pv_dm, "pv_dm"},
    {Representation::fv_gmm, "fv_gmm"},
    {Representation::fv_movmf, "fv_movmf"},
}};

std::filesystem::path with_suffix(const std::filesystem::path& prefix, const std::string& suffix) {
    return prefix.string() + suffix;
}

template <typename Encode>
DocumentVectors encode_dense(const TokenizedCorpus& docs, Eigen::Index dim, const std::string& method, Encode encode) {
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(docs.docs.size()), dim);
    std::vector<std::string> ids;
    std::vector<std::int64_t> flagged;
    for (std::size_t i = 0; i < docs.docs.size(); ++i) {
        ids.push_back(docs.docs[i].id);
        bool flag = false;
        rows.row(static_cast<Eigen::Index>(i)) = encode(docs.docs[i].tokens, flag).transpose();
        if (flag) flagged.push_back(static_cast<std::int64_t>(i));
    }
    auto out = make_dense(std::move(ids), std::move(rows), method);
    // make_dense flags zero rows; add encoder-reported ones (e.g. uniform LDA rows).
    for (auto f : flagged) {
        if (std::find(out.flagged.begin(), out.flagged.end(), f) == out.flagged.end()) out.flagged.push_back(f);
    }
    std::sort(out.flagged.begin(), out.flagged.end());
    return out;
}

class TfidfRepresenter final : public Representer {
public:
    using Representer::Representer;

    void fit(const TokenizedCorpus& corpus) override {
        model_ = fit_tfidf(corpus, config_.max_features, config_.selection);
    }
    DocumentVectors encode(const TokenizedCorpus& docs) const override {
        std::vector<std::string> ids;
        for (const auto& d : docs.docs) ids.push_back(d.id);
        return make_sparse(std::move(ids), transform_tfidf(model_, docs), tag());
    }
    void save(const std::filesystem::path& prefix) const override { model_.save(files(prefix)[0]); }
    void load(const std::filesystem::path& prefix) override { model_ = TfidfModel::load(files(prefix)[0]); }
    std::vector<std::filesystem::path> files(const std::filesystem::path& prefix) const override {
        return {with_suffix(prefix, ".fdv")};
    }

private:
    TfidfModel model_;
};

class LsiRepresenter final : public Representer {
public:
    using Representer::Representer;

    void fit(const TokenizedCorpus& corpus) override {
        model_ = fit_lsi(corpus, config_.dim, config_.max_features);
    }
    DocumentVectors encode(const TokenizedCorpus& docs) const override {
        return encode_dense(docs, model_.dim(), tag(), [&](const std::vector<std::string>& tokens, bool&) {
            return transform_lsi(model_, tokens);
        });
    }
    void save(const std::filesystem::path& prefix) const override { model_.save(files(prefix)[0]); }
    void load(const std::filesystem::path& prefix) override { model_ = LsiModel::load(files(prefix)[0]); }
    std::vector<std::filesystem::path> files(const std::filesystem::path& prefix) const override {
        return {with_suffix(prefix, ".fdv")};
    }

private:
    LsiModel model_;
};

class LdaRepresenter final : public Representer {
public:
    using Representer::Representer;

    void fit(const TokenizedCorpus& corpus) override { model_ = fit_lda(corpus, config_.lda()); }
    DocumentVectors encode(const TokenizedCorpus& docs) const override {
        return encode_dense(docs, model_.topics(), tag(), [&](const std::vector<std::string>& tokens, bool& flag) {
            return infer_lda(model_, tokens, &flag);
        });
    }
    void save(const std::filesystem::path& prefix) const override { model_.save(files(prefix)[0]); }
    void load(const std::filesystem::path& prefix) override { model_ = LdaModel::load(files(prefix)[0]); }
    std::vector<std::filesystem::path> files(const std::filesystem::path& prefix) const override {
        return {with_suffix(prefix, ".fdv")};
    }

private:
    LdaModel model_;
};

class CbowRepresenter final : public Representer {
public:
    using Representer::Representer;

    void fit(const TokenizedCorpus& corpus) override { embeddings_ = train_cbow(corpus, config_.word2vec()); }
    DocumentVectors encode(const TokenizedCorpus& docs) const override {
        return encode_dense(docs, embeddings_.dim(), tag(), [&](const std::vector<std::string>& tokens, bool&) {
            return mean_pool(tokens, embeddings_);
        });
    }
    void save(const std::filesystem::path& prefix) const override { save_embeddings(files(prefix)[0], embeddings_); }
    void load(const std::filesystem::path& prefix) override { embeddings_ = load_embeddings(files(prefix)[0]); }
    std::vector<std::filesystem::path> files(const std::filesystem::path& prefix) const override {
        return {with_suffix(prefix, ".vec")};
    }

private:
    EmbeddingMatrix embeddings_;
};

class PvRepresenter final : public Representer {
public:
    using Representer::Representer;

    void fit(const TokenizedCorpus& corpus) override {
        const auto mode = config_.kind == Representation::pv_dm ? PvMode::dm : PvMode::dbow;
        model_ = train_pv(corpus, mode, config_.word2vec());
        model_.inference_steps = config_.inference_steps;
    }
    DocumentVectors training_vectors(const TokenizedCorpus& corpus) const override {
        if (corpus.docs.size() != model_.docs.ids.size()) {
            throw Error("paragraph vectors: corpus does not match the training documents");
        }
        for (std::size_t i = 0; i < corpus.docs.size(); ++i) {
            if (corpus.docs[i].id != model_.docs.ids[i]) {
                throw Error("paragraph vectors: document " + corpus.docs[i].id + " was not part of training");
            }
        }
        return make_dense(model_.docs.ids, model_.docs.vectors, tag());
    }
    DocumentVectors encode(const TokenizedCorpus& docs) const override {
        return encode_dense(docs, model_.output.cols(), tag(), [&](const std::vector<std::string>& tokens, bool&) {
            return infer_pv(model_, tokens);
        });
    }
    void save(const std::filesystem::path& prefix) const override { model_.save(files(prefix)[0]); }
    void load(const std::filesystem::path& prefix) override {
        model_ = PvModel::load(files(prefix)[0]);
        model_.inference_steps = config_.inference_steps;
    }
    std::vector<std::filesystem::path> files(const std::filesystem::path& prefix) const override {
        return {with_suffix(prefix, ".fdv")};
    }

private:
    PvModel model_;
};

class FisherRepresenter final : public Representer {
public:
    FisherRepresenter(RepresentationConfig config, std::optional<EmbeddingMatrix> embeddings)
        : Representer(std::move(config)), embeddings_(std::move(embeddings)) {}

    void fit(const TokenizedCorpus& corpus) override {
        if (!embeddings_) embeddings_ = train_cbow(corpus, config_.word2vec());
        const auto set = mixture_training_set(corpus, *embeddings_, config_.token_weighted);
        const Eigen::VectorXd* weights = config_.token_weighted ? &set.weights : nullptr;
        if (config_.kind == Representation::fv_gmm) {
            gmm_ = fit_gmm<double>(set.points, config_.mixture(), weights).model;
        } else {
            vmf_ = fit_movmf<double>(set.points, config_.mixture(), weights).model;
        }
    }
    DocumentVectors encode(const TokenizedCorpus& docs) const override {
        if (!embeddings_) throw Error("Fisher vectors: model not fitted");
        auto out = config_.kind == Representation::fv_gmm ? encode_fisher(docs, *embeddings_, gmm_, config_.fisher)
                                                          : encode_fisher(docs, *embeddings_, vmf_, config_.fisher);
        out.method = tag();
        return out;
    }
    void save(const std::filesystem::path& prefix) const override {
        const auto paths = files(prefix);
        save_embeddings(paths[0], *embeddings_);
        if (config_.kind == Representation::fv_gmm) save_mixture(paths[1], gmm_);
        else save_mixture(paths[1], vmf_);
    }
    void load(const std::filesystem::path& prefix) override {
        const auto paths = files(prefix);
        embeddings_ = load_embeddings(paths[0]);
        if (config_.kind == Representation::fv_gmm) gmm_ = load_gmm(paths[1]);
        else vmf_ = load_vmf(paths[1]);
    }
    std::vector<std::filesystem::path> files(const std::filesystem::path& prefix) const override {
        return {with_suffix(prefix, ".vec"), with_suffix(prefix, ".mixture.fdv")};
    }

private:
    std::optional<EmbeddingMatrix> embeddings_;
    GaussianMixture<double> gmm_;
    VmfMixture<double> vmf_;
};

}  // namespace

std::optional<Representation> parse_representation(std::string_view name) {
    for (const auto& [kind, text] : kNames) {
        if (text == name) return kind;
    }
    return std::nullopt;
}

std::string to_string(Representation kind) {
    for (const auto& [k, text] : kNames) {
        if (k == kind) return std::string(text);
    }
    return "unknown";
}

const std::vector<Representation>& all_representations() {
    static const std::vector<Representation> all = [] {
        std::vector<Representation> out;
        for (const auto& [kind, text] : kNames) out.push_back(kind);
        return out;
    }();
    return all;
}

bool has_epochs(Representation kind) {
    return kind == Representation::cbow || is_paragraph_vector(kind) || is_fisher(kind);
}

bool is_paragraph_vector(Representation kind) { return kind == Representation::pv_dbow || kind == Representation::pv_dm; }

bool is_fisher(Representation kind) { return kind == Representation::fv_gmm || kind == Representation::fv_movmf; }

Word2VecOptions RepresentationConfig::word2vec() const {
    Word2VecOptions o;
    o.dim = dim;
    o.window = window;
    o.negative = negative;
    o.epochs = epochs;
    o.seed = seed;
    return o;
}

MixtureOptions RepresentationConfig::mixture() const {
    MixtureOptions o;
    o.components = components;
    o.restarts = restarts;
    o.seed = seed;
    o.kappa = kappa;
    return o;
}

LdaOptions RepresentationConfig::lda() const {
    LdaOptions o;
    o.topics = dim;
    o.passes = lda_passes;
    o.chunk_size = lda_chunk_size;
    o.seed = seed;
    o.inference_sweeps = inference_steps;
    return o;
}

std::string representation_tag(const RepresentationConfig& config) {
    if (config.kind == Representation::tfidf) return "tfidf";
    return to_string(config.kind) + "-d" + std::to_string(config.dim);
}

std::string Representer::tag() const { return representation_tag(config_); }

std::unique_ptr<Representer> make_representer(const RepresentationConfig& config) {
    switch (config.kind) {
        case Representation::tfidf: return std::make_unique<TfidfRepresenter>(config);
        case Representation::lsi: return std::make_unique<LsiRepresenter>(config);
        case Representation::lda: return std::make_unique<LdaRepresenter>(config);
        case Representation::cbow: return std::make_unique<CbowRepresenter>(config);
        case Representation::pv_dbow:
        case Representation::pv_dm: return std::make_unique<PvRepresenter>(config);
        case Representation::fv_gmm:
        case Representation::fv_movmf: return std::make_unique<FisherRepresenter>(config, std::nullopt);
    }
    throw Error("unknown representation");
}

std::unique_ptr<Representer> make_fisher_representer(const RepresentationConfig& config, EmbeddingMatrix embeddings) {
    if (!is_fisher(config.kind)) throw Error("make_fisher_representer: not a Fisher-vector representation");
    return std::make_unique<FisherRepresenter>(config, std::move(embeddings));
}

TokenizedCorpus topic_corpus(std::span<const Topic> topics, TopicFields fields, const Stoplist& stoplist) {
    std::vector<RawDocument> raw;
    for (const auto& t : topics) raw.push_back({t.id, t.text(fields), std::nullopt});
    return preprocess(raw, stoplist);
}

}  // namespace fisherdoc
