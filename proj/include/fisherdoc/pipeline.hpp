#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fisherdoc/baselines.hpp"
#include "fisherdoc/corpus.hpp"
#include "fisherdoc/docvectors.hpp"
#include "fisherdoc/embeddings.hpp"
#include "fisherdoc/fisher.hpp"
#include "fisherdoc/mixtures.hpp"

namespace fisherdoc {

enum class Representation { tfidf, lsi, lda, cbow, pv_dbow, pv_dm, fv_gmm, fv_movmf };

std::optional<Representation> parse_representation(std::string_view name);
std::string to_string(Representation kind);
const std::vector<Representation>& all_representations();

/// Representations whose training has an epoch count.
bool has_epochs(Representation kind);
bool is_paragraph_vector(Representation kind);
bool is_fisher(Representation kind);

struct RepresentationConfig {
    Representation kind = Representation::tfidf;
    int dim = 50;
    std::uint64_t seed = 1;
    // TF-IDF / LSI
    std::size_t max_features = 5000;
    TermSelection selection = TermSelection::max_weight;
    // LDA
    int lda_passes = 20;
    int lda_chunk_size = 1000;
    // word2vec family
    int epochs = 5;
    int window = 5;
    int negative = 5;
    int inference_steps = 50;
    // Fisher vectors
    int components = 15;
    int restarts = 10;
    bool token_weighted = false;
    KappaEstimator kappa = KappaEstimator::banerjee;
    FisherOptions fisher;

    Word2VecOptions word2vec() const;
    MixtureOptions mixture() const;
    LdaOptions lda() const;
};

/// A trainable document representation.
///
/// `fit` learns from a corpus. `training_vectors` returns vectors for the
/// documents the model was fitted on (paragraph vectors return their trained
/// document vectors; the others encode the corpus). `encode` maps unseen
/// documents or queries.
class Representer {
public:
    explicit Representer(RepresentationConfig config) : config_(std::move(config)) {}
    virtual ~Representer() = default;

    virtual void fit(const TokenizedCorpus& corpus) = 0;
    virtual DocumentVectors training_vectors(const TokenizedCorpus& corpus) const { return encode(corpus); }
    virtual DocumentVectors encode(const TokenizedCorpus& docs) const = 0;

    /// Writes the model next to `prefix` (one or more files with suffixes).
    virtual void save(const std::filesystem::path& prefix) const = 0;
    virtual void load(const std::filesystem::path& prefix) = 0;
    /// Files written by `save`, for existence checks.
    virtual std::vector<std::filesystem::path> files(const std::filesystem::path& prefix) const = 0;

    const RepresentationConfig& config() const { return config_; }
    std::string tag() const;

protected:
    RepresentationConfig config_;
};

/// Artifact name of a configuration, e.g. "tfidf" or "cbow-d50".
std::string representation_tag(const RepresentationConfig& config);

std::unique_ptr<Representer> make_representer(const RepresentationConfig& config);

/// Fisher-vector representer built from pre-trained word vectors, fitting
/// only the mixture.
std::unique_ptr<Representer> make_fisher_representer(const RepresentationConfig& config, EmbeddingMatrix embeddings);

/// Topics as a pseudo-document corpus (id = topic id).
TokenizedCorpus topic_corpus(std::span<const Topic> topics, TopicFields fields, const Stoplist& stoplist = english_stopwords());

}  // namespace fisherdoc
