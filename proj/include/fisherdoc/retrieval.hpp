#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fisherdoc/corpus.hpp"
#include "fisherdoc/docvectors.hpp"

namespace fisherdoc {

struct Posting {
    std::int64_t doc = 0;  // index into InvertedIndex::doc_ids
    std::int64_t tf = 0;
};

/// Documents are stored in ascending id order, so posting lists sorted by
/// document index are also sorted by id.
struct InvertedIndex {
    std::vector<std::string> doc_ids;
    std::vector<double> doc_length;
    double average_length = 0.0;
    std::map<std::string, std::vector<Posting>> postings;

    std::size_t size() const { return doc_ids.size(); }

    void save(const std::filesystem::path& path) const;
    static InvertedIndex load(const std::filesystem::path& path);
};

/// Throws on an empty collection or one with no tokens at all.
InvertedIndex build_index(const TokenizedCorpus& corpus);
InvertedIndex build_index(std::span<const RawDocument> docs, const Stoplist& stoplist = english_stopwords());

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

/// ln(1 + (N - n + 0.5) / (n + 0.5)).
double bm25_idf(std::size_t documents, std::size_t document_frequency);

struct ScoredDoc {
    std::string doc;
    double score = 0.0;
};

/// Scores are non-increasing; equal scores are ordered by doc id.
using RankedList = std::vector<ScoredDoc>;
/// topic id -> ranked list.
using RankedRun = std::map<std::string, RankedList>;

/// Every occurrence of a term in the query contributes its own summand.
/// A query with no indexed term yields an empty list and sets `flagged`.
RankedList bm25_search(const InvertedIndex& index, std::span<const std::string> query, const Bm25Params& params = {},
                       std::size_t top = 1000, bool* flagged = nullptr);

RankedRun bm25_run(const InvertedIndex& index, const std::map<std::string, std::vector<std::string>>& queries,
                   const Bm25Params& params = {}, std::size_t top = 1000);

// ------------------------------------------------------------------ metrics

/// AP over all judged-relevant (grade > 0) documents; 0 when there are none.
double average_precision(const RankedList& list, const std::map<std::string, int>& judgments);
/// Relevant documents among the first k ranks, divided by k.
double precision_at(const RankedList& list, const std::map<std::string, int>& judgments, std::size_t k);

struct TopicScore {
    std::string topic;
    double ap = 0.0;
    double p20 = 0.0;
};

struct RetrievalReport {
    std::vector<TopicScore> topics;
    double map = 0.0;
    double p20 = 0.0;
    double map_ci = 0.0;
    double p20_ci = 0.0;
    Bm25Params params;
};

/// Scores every qrels topic with at least one relevant document; topics
/// absent from the run score 0.
RetrievalReport evaluate_run(const RankedRun& run, const Qrels& qrels);
double map_metric(const RankedRun& run, const Qrels& qrels);
double p_at_20(const RankedRun& run, const Qrels& qrels);

/// Half-width t_{0.975, n-1} * s / sqrt(n) with the sample standard
/// deviation; 0 for fewer than two values.
double ci95(std::span<const double> values);

// ------------------------------------------------------------------ grid scan

struct GridCell {
    Bm25Params params;
    double map = 0.0;
    double p20 = 0.0;
};

struct GridScan {
    std::vector<GridCell> cells;  // k1-major
    std::size_t best = 0;         // highest MAP, earliest cell on ties
    std::size_t default_cell = 0; // k1 = 1.2, b = 0.75
};

/// k1 = i/20 for i in [0, 60], b = j/20 for j in [0, 20].
std::vector<Bm25Params> bm25_grid();

/// Evaluates every grid cell, spreading cells over `threads` workers
/// (0 = hardware concurrency). Results do not depend on the thread count.
GridScan grid_scan(const InvertedIndex& index, const std::map<std::string, std::vector<std::string>>& queries,
                   const Qrels& qrels, std::span<const Bm25Params> grid, unsigned threads = 0, std::size_t top = 1000);

// ------------------------------------------------------------------ fusion

/// (s - min) / (max - min). A constant list maps to zeros (with a warning
/// when it has more than one element).
std::vector<double> minmax_normalize(std::span<const double> scores);

/// Re-ranks the BM25 pool by lambda * minmax(bm25) + (1 - lambda) *
/// minmax(cosine). `cosine[i]` belongs to `bm25[i]`. Ties keep the BM25 order.
RankedList fuse(const RankedList& bm25, std::span<const double> cosine, double lambda = 0.5);

struct FusionResult {
    RankedRun run;
    std::size_t missing_vectors = 0;  // pool documents without a vector
};

/// Cosine between each topic's query vector (row id = topic id in
/// `queries`) and the pool documents' vectors in `docs`.
FusionResult fuse(const RankedRun& bm25, const DocumentVectors& docs, const DocumentVectors& queries, double lambda = 0.5);

// ------------------------------------------------------------------ TREC runs

/// `topic Q0 docno rank score tag`, ranks from 1.
void write_run(const std::filesystem::path& path, const RankedRun& run, const std::string& tag);
RankedRun read_run(const std::filesystem::path& path);

}  // namespace fisherdoc
