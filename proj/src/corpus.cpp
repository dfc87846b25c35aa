#include "fisherdoc/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "fisherdoc/common.hpp"

namespace fisherdoc {

namespace fs = std::filesystem;

namespace {

// Decodes one code point starting at `i`. Invalid or truncated sequences
// consume a single byte which is taken as Latin-1.
char32_t next_code_point(std::string_view s, std::size_t& i, bool& replaced) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    replaced = false;
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    int extra = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) {
        extra = 1;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        extra = 2;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        extra = 3;
        cp = b0 & 0x07;
    } else {
        ++i;
        replaced = true;
        return b0;
    }
    if (i + static_cast<std::size_t>(extra) >= s.size()) {
        ++i;
        replaced = true;
        return b0;
    }
    for (int k = 1; k <= extra; ++k) {
        const auto b = static_cast<unsigned char>(s[i + k]);
        if ((b & 0xC0) != 0x80) {
            ++i;
            replaced = true;
            return b0;
        }
        cp = (cp << 6) | (b & 0x3F);
    }
    static constexpr char32_t min_value[] = {0, 0x80, 0x800, 0x10000};
    if (cp < min_value[extra] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
        ++i;
        replaced = true;
        return b0;
    }
    i += static_cast<std::size_t>(extra) + 1;
    return cp;
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

bool in(char32_t c, char32_t lo, char32_t hi) { return c >= lo && c <= hi; }

// Letter classes for Latin, Greek, Cyrillic, Hebrew, Arabic and the main CJK
// blocks. Other scripts are treated as separators.
bool is_letter(char32_t c) {
    if (c < 0x80) return in(c, 'a', 'z') || in(c, 'A', 'Z');
    if (c == 0xAA || c == 0xB5 || c == 0xBA) return true;
    if (in(c, 0xC0, 0x24F)) return c != 0xD7 && c != 0xF7;
    if (in(c, 0x370, 0x3FF)) return c == 0x386 || in(c, 0x388, 0x3FF);
    if (in(c, 0x400, 0x52F)) return in(c, 0x400, 0x481) || in(c, 0x48A, 0x52F);
    return in(c, 0x5D0, 0x5EA) || in(c, 0x620, 0x64A) || in(c, 0x1E00, 0x1EFF) || in(c, 0x3041, 0x30FF) ||
           in(c, 0x4E00, 0x9FFF) || in(c, 0xAC00, 0xD7A3);
}

char32_t to_lower(char32_t c) {
    if (in(c, 'A', 'Z')) return c + 32;
    if (c < 0xC0) return c;
    if (in(c, 0xC0, 0xDE) && c != 0xD7) return c + 32;
    if (c == 0x130) return 'i';
    if (c == 0x178) return 0xFF;
    const bool even = (c % 2) == 0;
    if ((in(c, 0x100, 0x137) || in(c, 0x14A, 0x177)) && even) return c + 1;
    if ((in(c, 0x139, 0x148) || in(c, 0x179, 0x17E)) && !even) return c + 1;
    if (in(c, 0x391, 0x3AB) && c != 0x3A2) return c + 32;
    if (c == 0x386) return 0x3AC;
    if (in(c, 0x388, 0x38A)) return c + 37;
    if (c == 0x38C) return 0x3CC;
    if (in(c, 0x38E, 0x38F)) return c + 63;
    if (in(c, 0x410, 0x42F)) return c + 32;
    if (in(c, 0x400, 0x40F)) return c + 80;
    if ((in(c, 0x460, 0x481) || in(c, 0x48A, 0x4BF)) && even) return c + 1;
    if ((in(c, 0x1E00, 0x1E95) || in(c, 0x1EA0, 0x1EFF)) && even) return c + 1;
    return c;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        start = end + 1;
    }
    return lines;
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    bool space = false;
    for (char c : trim(s)) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            space = true;
            continue;
        }
        if (space && !out.empty()) out.push_back(' ');
        space = false;
        out.push_back(c);
    }
    return out;
}

std::vector<std::string> split_ws(std::string_view line) {
    std::vector<std::string> fields;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
        if (j > i) fields.emplace_back(line.substr(i, j - i));
        i = j;
    }
    return fields;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto tab = line.find('\t', start);
        if (tab == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

std::string strip_newsgroup_header(const std::string& text) {
    const auto pos = text.find("\n\n");
    return pos == std::string::npos ? std::string{} : text.substr(pos + 2);
}

std::string strip_newsgroup_quoting(const std::string& text) {
    static constexpr std::string_view markers[] = {"writes in", "writes:", "wrote:", "says:", "said:"};
    std::string out;
    for (auto line : split_lines(text)) {
        bool quoted = line.starts_with(">") || line.starts_with("|") || line.starts_with("In article") ||
                      line.starts_with("Quoted from");
        for (auto m : markers) quoted = quoted || line.find(m) != std::string_view::npos;
        if (quoted) continue;
        out.append(line);
        out.push_back('\n');
    }
    return out;
}

std::string strip_newsgroup_footer(const std::string& text) {
    const auto lines = split_lines(trim(text));
    std::size_t n = lines.size();
    for (std::size_t k = n; k-- > 0;) {
        if (lines[k].find_first_not_of('-') == std::string_view::npos) {
            if (k == 0) return text;
            std::string out;
            for (std::size_t j = 0; j < k; ++j) {
                out.append(lines[j]);
                if (j + 1 < k) out.push_back('\n');
            }
            return out;
        }
    }
    return text;
}

std::vector<fs::path> sorted_entries(const fs::path& dir, bool directories) {
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (directories ? entry.is_directory() : entry.is_regular_file()) out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

int known_subj_sent_label(const std::string& name) {
    if (name.starts_with("plot.tok") || name == "rt-polarity.neg") return 0;
    if (name.starts_with("quote.tok") || name == "rt-polarity.pos") return 1;
    return -1;
}

LabeledCollection read_subj_sent(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw Error("expected a directory with one file per class: " + dir.string());
    auto files = sorted_entries(dir, false);
    std::erase_if(files, [](const fs::path& p) { return p.filename().string().starts_with("."); });
    if (files.size() != 2) {
        throw Error("expected exactly two class files in " + dir.string() + ", found " + std::to_string(files.size()));
    }
    int l0 = known_subj_sent_label(files[0].filename().string());
    int l1 = known_subj_sent_label(files[1].filename().string());
    if (l0 < 0 || l1 < 0 || l0 == l1) {
        l0 = 0;
        l1 = 1;
    }
    LabeledCollection out;
    out.label_names.resize(2);
    std::size_t replaced_total = 0;
    for (int f = 0; f < 2; ++f) {
        const int label = f == 0 ? l0 : l1;
        const auto& path = files[static_cast<std::size_t>(f)];
        out.label_names[static_cast<std::size_t>(label)] = path.filename().string();
        const std::string bytes = read_file(path);
        const auto lines = split_lines(bytes);
        std::size_t count = 0;
        for (std::size_t n = 0; n < lines.size(); ++n) {
            if (lines[n].find('\0') != std::string_view::npos) {
                throw Error(path.string() + ":" + std::to_string(n + 1) + ": malformed line (NUL byte)");
            }
            std::size_t replaced = 0;
            out.docs.push_back({path.filename().string() + ":" + std::to_string(n + 1),
                                normalize_utf8(lines[n], &replaced), label});
            replaced_total += replaced;
            ++count;
        }
        if (count == 0) throw Error("no documents in " + path.string());
    }
    if (replaced_total > 0) {
        warn("reinterpreted " + std::to_string(replaced_total) + " non-UTF-8 bytes as Latin-1 in " + dir.string());
    }
    return out;
}

LabeledCollection read_newsgroups(const fs::path& dir, const LoadOptions& options) {
    if (!fs::is_directory(dir)) throw Error("not a directory: " + dir.string());
    std::vector<fs::path> roots;
    for (const char* split : {"20news-bydate-train", "20news-bydate-test"}) {
        if (fs::is_directory(dir / split)) roots.push_back(dir / split);
    }
    if (roots.empty()) roots.push_back(dir);

    std::vector<std::string> names;
    for (const auto& root : roots) {
        for (const auto& cls : sorted_entries(root, true)) names.push_back(cls.filename().string());
    }
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());

    LabeledCollection out;
    out.label_names = names;
    std::size_t replaced_total = 0;
    for (const auto& root : roots) {
        for (const auto& cls : sorted_entries(root, true)) {
            const auto name = cls.filename().string();
            const int label = static_cast<int>(std::lower_bound(names.begin(), names.end(), name) - names.begin());
            for (const auto& file : sorted_entries(cls, false)) {
                std::size_t replaced = 0;
                std::string text = normalize_utf8(read_file(file), &replaced);
                replaced_total += replaced;
                if (options.strip_headers) text = strip_newsgroup_header(text);
                if (options.strip_footers) text = strip_newsgroup_footer(text);
                if (options.strip_quotes) text = strip_newsgroup_quoting(text);
                out.docs.push_back({root.filename().string() + "/" + name + "/" + file.filename().string(),
                                    std::move(text), label});
            }
        }
    }
    if (out.docs.empty()) throw Error("no documents under " + dir.string());
    if (replaced_total > 0) {
        warn("reinterpreted " + std::to_string(replaced_total) + " non-UTF-8 bytes as Latin-1 in " + dir.string());
    }
    return out;
}

std::string decode_entities(std::string_view s) {
    static constexpr std::pair<std::string_view, char> entities[] = {
        {"&amp;", '&'}, {"&lt;", '<'}, {"&gt;", '>'}, {"&quot;", '"'}, {"&apos;", '\''}};
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size();) {
        bool matched = false;
        if (s[i] == '&') {
            for (auto [name, ch] : entities) {
                if (s.substr(i, name.size()) == name) {
                    out.push_back(ch);
                    i += name.size();
                    matched = true;
                    break;
                }
            }
        }
        if (!matched) out.push_back(s[i++]);
    }
    return out;
}

std::string strip_tags(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_tag = false;
    for (char c : s) {
        if (c == '<') {
            in_tag = true;
            out.push_back(' ');
        } else if (c == '>' && in_tag) {
            in_tag = false;
        } else if (!in_tag) {
            out.push_back(c);
        }
    }
    return decode_entities(out);
}

// Case-insensitive search for an ASCII tag.
std::size_t find_tag(std::string_view hay, std::string_view tag, std::size_t from = 0) {
    if (tag.size() > hay.size()) return std::string_view::npos;
    for (std::size_t i = from; i + tag.size() <= hay.size(); ++i) {
        bool ok = true;
        for (std::size_t k = 0; k < tag.size() && ok; ++k) {
            char a = hay[i + k];
            if (a >= 'A' && a <= 'Z') a = static_cast<char>(a + 32);
            char b = tag[k];
            if (b >= 'A' && b <= 'Z') b = static_cast<char>(b + 32);
            ok = a == b;
        }
        if (ok) return i;
    }
    return std::string_view::npos;
}

void parse_sgml_file(const std::string& bytes, const std::string& origin, std::vector<RawDocument>& out,
                     std::size_t& skipped) {
    std::string_view s(bytes);
    std::size_t pos = 0;
    while (true) {
        const auto open = find_tag(s, "<DOC>", pos);
        if (open == std::string_view::npos) break;
        const auto body_start = open + 5;
        const auto close = find_tag(s, "</DOC>", body_start);
        const auto next_open = find_tag(s, "<DOC>", body_start);
        if (close == std::string_view::npos || (next_open != std::string_view::npos && next_open < close)) {
            ++skipped;
            warn("skipping unterminated <DOC> block in " + origin);
            if (next_open == std::string_view::npos) break;
            pos = next_open;
            continue;
        }
        const auto block = s.substr(body_start, close - body_start);
        pos = close + 6;
        const auto no_open = find_tag(block, "<DOCNO>");
        const auto no_close = no_open == std::string_view::npos ? no_open : find_tag(block, "</DOCNO>", no_open);
        if (no_open == std::string_view::npos || no_close == std::string_view::npos) {
            ++skipped;
            warn("skipping <DOC> block without DOCNO in " + origin);
            continue;
        }
        std::string id(trim(block.substr(no_open + 7, no_close - no_open - 7)));
        if (id.empty()) {
            ++skipped;
            warn("skipping <DOC> block with empty DOCNO in " + origin);
            continue;
        }
        std::string text = strip_tags(block.substr(0, no_open));
        text += ' ';
        text += strip_tags(block.substr(no_close + 8));
        out.push_back({std::move(id), normalize_utf8(text), std::nullopt});
    }
}

// Text after `tag` up to the next '<'.
std::string field_after(std::string_view block, std::string_view tag) {
    const auto at = find_tag(block, tag);
    if (at == std::string_view::npos) return {};
    const auto start = at + tag.size();
    const auto end = block.find('<', start);
    return collapse_whitespace(block.substr(start, end == std::string_view::npos ? block.size() - start : end - start));
}

std::string drop_prefix(std::string s, std::string_view prefix) {
    if (find_tag(s, prefix) == 0) s = collapse_whitespace(std::string_view(s).substr(prefix.size()));
    return s;
}

}  // namespace

std::string normalize_utf8(std::string_view bytes, std::size_t* replaced) {
    std::string out;
    out.reserve(bytes.size());
    std::size_t i = 0;
    std::size_t count = 0;
    while (i < bytes.size()) {
        bool bad = false;
        const std::size_t before = i;
        const char32_t cp = next_code_point(bytes, i, bad);
        if (bad) {
            ++count;
            append_utf8(out, cp);
        } else {
            out.append(bytes.substr(before, i - before));
        }
    }
    if (replaced) *replaced += count;
    return out;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    std::size_t i = 0;
    while (i < text.size()) {
        bool bad = false;
        const char32_t cp = next_code_point(text, i, bad);
        if (is_letter(cp)) {
            append_utf8(current, to_lower(cp));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::vector<std::string> remove_stopwords(std::span<const std::string> tokens, const Stoplist& stoplist) {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) {
        if (!stoplist.contains(t)) out.push_back(t);
    }
    return out;
}

Stoplist load_stoplist(const fs::path& path) {
    Stoplist words;
    const std::string bytes = read_file(path);
    for (auto line : split_lines(bytes)) {
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        words.emplace(line);
    }
    return words;
}

TokenizedCorpus preprocess(std::span<const RawDocument> docs, const Stoplist& stoplist) {
    TokenizedCorpus corpus;
    corpus.docs.reserve(docs.size());
    for (const auto& d : docs) {
        if (d.id.empty()) throw Error("document with empty id");
        corpus.docs.push_back({d.id, remove_stopwords(tokenize(d.text), stoplist), d.label});
    }
    corpus.recount();
    return corpus;
}

void TokenizedCorpus::recount() {
    vocab_counts.clear();
    for (const auto& d : docs) {
        for (const auto& t : d.tokens) ++vocab_counts[t];
    }
}

std::size_t TokenizedCorpus::total_tokens() const {
    std::size_t n = 0;
    for (const auto& d : docs) n += d.tokens.size();
    return n;
}

std::size_t TokenizedCorpus::empty_documents() const {
    return static_cast<std::size_t>(std::count_if(docs.begin(), docs.end(), [](const auto& d) { return d.tokens.empty(); }));
}

std::vector<int> TokenizedCorpus::labels() const {
    std::vector<int> out;
    out.reserve(docs.size());
    for (const auto& d : docs) {
        if (!d.label) throw Error("document " + d.id + " has no label");
        out.push_back(*d.label);
    }
    return out;
}

TokenizedCorpus TokenizedCorpus::subset(std::span<const std::size_t> rows) const {
    TokenizedCorpus out;
    out.label_names = label_names;
    out.docs.reserve(rows.size());
    for (auto r : rows) out.docs.push_back(docs.at(r));
    out.recount();
    return out;
}

std::optional<LabeledFormat> parse_labeled_format(std::string_view name) {
    if (name == "subj_sent" || name == "subj" || name == "sent") return LabeledFormat::subj_sent;
    if (name == "newsgroups_bydate" || name == "20ng") return LabeledFormat::newsgroups_bydate;
    return std::nullopt;
}

LabeledCollection read_labeled_collection(const fs::path& path, LabeledFormat format, const LoadOptions& options) {
    if (!fs::exists(path)) throw Error("missing dataset path " + path.string());
    return format == LabeledFormat::subj_sent ? read_subj_sent(path) : read_newsgroups(path, options);
}

TokenizedCorpus load_labeled_corpus(const fs::path& path, LabeledFormat format, const LoadOptions& options,
                                     const Stoplist& stoplist) {
    auto collection = read_labeled_collection(path, format, options);
    auto corpus = preprocess(collection.docs, stoplist);
    corpus.label_names = std::move(collection.label_names);
    if (const auto empty = corpus.empty_documents(); empty > 0) {
        info(std::to_string(empty) + " documents are empty after preprocessing");
    }
    return corpus;
}

std::optional<TopicFields> parse_topic_fields(std::string_view name) {
    if (name == "title") return TopicFields::title;
    if (name == "desc" || name == "description") return TopicFields::description;
    if (name == "title+desc" || name == "title_description" || name == "both") return TopicFields::title_description;
    return std::nullopt;
}

std::string Topic::text(TopicFields fields) const {
    switch (fields) {
        case TopicFields::title: return title;
        case TopicFields::description: return description;
        case TopicFields::title_description: return title + " " + description;
    }
    return {};
}

std::vector<RawDocument> read_trec_documents(const fs::path& path, std::size_t* skipped) {
    if (!fs::exists(path)) throw Error("missing TREC document path " + path.string());
    std::vector<fs::path> files;
    if (fs::is_directory(path)) {
        for (const auto& e : fs::recursive_directory_iterator(path)) {
            if (e.is_regular_file()) files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
    } else {
        files.push_back(path);
    }
    std::vector<RawDocument> docs;
    std::size_t bad = 0;
    for (const auto& f : files) parse_sgml_file(read_file(f), f.string(), docs, bad);
    if (bad > 0) warn("skipped " + std::to_string(bad) + " unparseable SGML blocks");
    if (skipped) *skipped += bad;
    return docs;
}

std::vector<Topic> read_trec_topics(const fs::path& path) {
    const std::string bytes = read_file(path);
    std::string_view s(bytes);
    std::vector<Topic> topics;
    std::size_t pos = 0;
    while (true) {
        const auto open = find_tag(s, "<top>", pos);
        if (open == std::string_view::npos) break;
        auto close = find_tag(s, "</top>", open);
        if (close == std::string_view::npos) close = s.size();
        const auto block = s.substr(open + 5, close - open - 5);
        pos = close;
        Topic t;
        std::string num = field_after(block, "<num>");
        num = drop_prefix(num, "Number:");
        t.id = num;
        t.title = drop_prefix(field_after(block, "<title>"), "Topic:");
        t.description = drop_prefix(field_after(block, "<desc>"), "Description:");
        if (t.id.empty()) throw Error(path.string() + ": topic without <num>");
        topics.push_back(std::move(t));
    }
    if (topics.empty()) throw Error("no topics in " + path.string());
    return topics;
}

Qrels read_qrels(const fs::path& path) {
    if (!fs::exists(path)) throw Error("missing qrels file " + path.string());
    const std::string bytes = read_file(path);
    Qrels qrels;
    const auto lines = split_lines(bytes);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        if (trim(lines[n]).empty()) continue;
        const auto f = split_ws(lines[n]);
        const auto where = path.string() + ":" + std::to_string(n + 1);
        if (f.size() != 4) throw Error(where + ": expected `topic iter docno rel`");
        int rel = 0;
        try {
            std::size_t used = 0;
            rel = std::stoi(f[3], &used);
            if (used != f[3].size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw Error(where + ": relevance is not an integer");
        }
        if (rel < 0) throw Error(where + ": negative relevance");
        qrels[f[0]][f[2]] = rel;
    }
    return qrels;
}

TrecCollection load_trec_collection(const fs::path& doc_path, const fs::path& topic_path, const fs::path& qrels_path) {
    TrecCollection c;
    c.docs = read_trec_documents(doc_path, &c.skipped_blocks);
    c.topics = read_trec_topics(topic_path);
    c.qrels = read_qrels(qrels_path);
    for (const auto& [topic, judged] : c.qrels) {
        const bool known = std::any_of(c.topics.begin(), c.topics.end(), [&](const Topic& t) { return t.id == topic; });
        if (!known) throw Error("qrels reference unknown topic " + topic);
    }
    return c;
}

void write_corpus(const fs::path& path, const TokenizedCorpus& corpus) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    if (!corpus.label_names.empty()) {
        out << "#labels";
        for (const auto& n : corpus.label_names) out << '\t' << n;
        out << '\n';
    }
    for (const auto& d : corpus.docs) {
        if (d.id.find_first_of("\t\n") != std::string::npos) throw Error("document id contains a tab or newline: " + d.id);
        out << d.id << '\t';
        if (d.label) out << *d.label; else out << '-';
        out << '\t';
        for (std::size_t i = 0; i < d.tokens.size(); ++i) {
            if (i) out << ' ';
            out << d.tokens[i];
        }
        out << '\n';
    }
}

TokenizedCorpus read_corpus(const fs::path& path) {
    if (!fs::exists(path)) throw Error("missing corpus file " + path.string() + " (produce it with `fisherdoc prep`)");
    const std::string bytes = read_file(path);
    TokenizedCorpus corpus;
    const auto lines = split_lines(bytes);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        const auto line = lines[n];
        if (line.empty()) continue;
        const auto fields = split_tabs(line);
        if (n == 0 && line.starts_with("#labels")) {
            for (std::size_t k = 1; k < fields.size(); ++k) corpus.label_names.emplace_back(fields[k]);
            continue;
        }
        if (fields.size() != 3 || fields[0].empty()) {
            throw Error(path.string() + ":" + std::to_string(n + 1) + ": expected `id<TAB>label<TAB>tokens`");
        }
        TokenizedDocument d;
        d.id = std::string(fields[0]);
        if (fields[1] != "-") {
            try {
                d.label = std::stoi(std::string(fields[1]));
            } catch (const std::exception&) {
                throw Error(path.string() + ":" + std::to_string(n + 1) + ": bad label");
            }
        }
        d.tokens = split_ws(fields[2]);
        corpus.docs.push_back(std::move(d));
    }
    corpus.recount();
    return corpus;
}

void write_topics(const fs::path& path, std::span<const Topic> topics) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    for (const auto& t : topics) {
        out << t.id << '\t' << collapse_whitespace(t.title) << '\t' << collapse_whitespace(t.description) << '\n';
    }
}

std::vector<Topic> read_topics_tsv(const fs::path& path) {
    if (!fs::exists(path)) throw Error("missing topics file " + path.string() + " (produce it with `fisherdoc prep`)");
    const std::string bytes = read_file(path);
    std::vector<Topic> topics;
    const auto lines = split_lines(bytes);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        if (lines[n].empty()) continue;
        const auto f = split_tabs(lines[n]);
        if (f.size() != 3) throw Error(path.string() + ":" + std::to_string(n + 1) + ": expected `id<TAB>title<TAB>desc`");
        topics.push_back({std::string(f[0]), std::string(f[1]), std::string(f[2])});
    }
    return topics;
}

void write_qrels(const fs::path& path, const Qrels& qrels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    for (const auto& [topic, judged] : qrels) {
        for (const auto& [doc, rel] : judged) out << topic << " 0 " << doc << ' ' << rel << '\n';
    }
}

}  // namespace fisherdoc
