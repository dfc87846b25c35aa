#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace fisherdoc {

struct RawDocument {
    std::string id;
    std::string text;
    std::optional<int> label;
};

struct TokenizedDocument {
    std::string id;
    std::vector<std::string> tokens;
    std::optional<int> label;
};

/// Documents as token sequences plus corpus term frequencies.
///
/// `vocab_counts` is derived from `docs`; call `recount()` after editing docs
/// by hand. `label_names[i]` names class id `i` when the source had classes.
struct TokenizedCorpus {
    std::vector<TokenizedDocument> docs;
    std::map<std::string, std::size_t> vocab_counts;
    std::vector<std::string> label_names;

    void recount();
    std::size_t total_tokens() const;
    std::size_t empty_documents() const;
    std::vector<int> labels() const;
    TokenizedCorpus subset(std::span<const std::size_t> rows) const;
};

using Stoplist = std::unordered_set<std::string>;

/// Lowercased runs of letters. Any non-letter code point (punctuation, digits,
/// whitespace) separates tokens. Bytes that are not valid UTF-8 are read as
/// Latin-1.
std::vector<std::string> tokenize(std::string_view text);

std::vector<std::string> remove_stopwords(std::span<const std::string> tokens, const Stoplist& stoplist);

/// The bundled 179-word English list (data/stopwords_en.txt).
const Stoplist& english_stopwords();

/// One word per line; blank lines and `#` comments ignored.
Stoplist load_stoplist(const std::filesystem::path& path);

/// tokenize + remove_stopwords over a document collection.
TokenizedCorpus preprocess(std::span<const RawDocument> docs, const Stoplist& stoplist = english_stopwords());

/// Decodes UTF-8, falling back to Latin-1 for invalid sequences. The number
/// of reinterpreted bytes is added to `replaced` when non-null.
std::string normalize_utf8(std::string_view bytes, std::size_t* replaced = nullptr);

enum class LabeledFormat { subj_sent, newsgroups_bydate };

std::optional<LabeledFormat> parse_labeled_format(std::string_view name);

struct LoadOptions {
    // 20 Newsgroups only. All three default to keeping the text.
    bool strip_headers = false;
    bool strip_footers = false;
    bool strip_quotes = false;
};

struct LabeledCollection {
    std::vector<RawDocument> docs;
    std::vector<std::string> label_names;
};

/// subj/sent: a directory holding one file per class, one document per line.
/// Known file names (the Cornell distributions) get their canonical labels;
/// otherwise the two files are labelled 0 and 1 in lexicographic order.
///
/// newsgroups_bydate: either the parent of `20news-bydate-train` and
/// `20news-bydate-test` (both merged) or a single directory of per-class
/// subdirectories. Class ids follow the sorted directory names.
LabeledCollection read_labeled_collection(const std::filesystem::path& path, LabeledFormat format,
                                          const LoadOptions& options = {});

TokenizedCorpus load_labeled_corpus(const std::filesystem::path& path, LabeledFormat format,
                                     const LoadOptions& options = {},
                                     const Stoplist& stoplist = english_stopwords());

enum class TopicFields { title, description, title_description };

std::optional<TopicFields> parse_topic_fields(std::string_view name);

struct Topic {
    std::string id;
    std::string title;
    std::string description;

    std::string text(TopicFields fields) const;
};

/// topic id -> doc id -> relevance grade.
using Qrels = std::map<std::string, std::map<std::string, int>>;

struct TrecCollection {
    std::vector<RawDocument> docs;
    std::vector<Topic> topics;
    Qrels qrels;
    std::size_t skipped_blocks = 0;
};

/// `path` may be a single SGML file or a directory scanned recursively in
/// lexicographic order. Blocks without a closing tag or a DOCNO are skipped
/// and counted in `skipped`.
std::vector<RawDocument> read_trec_documents(const std::filesystem::path& path, std::size_t* skipped = nullptr);
std::vector<Topic> read_trec_topics(const std::filesystem::path& path);
Qrels read_qrels(const std::filesystem::path& path);

TrecCollection load_trec_collection(const std::filesystem::path& doc_path, const std::filesystem::path& topic_path,
                                    const std::filesystem::path& qrels_path);

/// Tab-separated `id<TAB>label<TAB>space-joined tokens`; label `-` when absent.
/// The first line carries the label names when present: `#labels<TAB>a<TAB>b…`.
void write_corpus(const std::filesystem::path& path, const TokenizedCorpus& corpus);
TokenizedCorpus read_corpus(const std::filesystem::path& path);

void write_topics(const std::filesystem::path& path, std::span<const Topic> topics);
std::vector<Topic> read_topics_tsv(const std::filesystem::path& path);
void write_qrels(const std::filesystem::path& path, const Qrels& qrels);

}  // namespace fisherdoc
