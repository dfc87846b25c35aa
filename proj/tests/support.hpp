#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include <Eigen/Dense>

#include "fisherdoc/corpus.hpp"

namespace testing {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = fs::temp_directory_path() /
                ("fisherdoc-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

inline void write_file(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << text;
}

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Corpus from token lists; ids are d0, d1, ...
inline fisherdoc::TokenizedCorpus make_corpus(const std::vector<std::vector<std::string>>& docs,
                                              const std::vector<int>& labels = {}) {
    fisherdoc::TokenizedCorpus c;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        fisherdoc::TokenizedDocument d;
        d.id = "d" + std::to_string(i);
        d.tokens = docs[i];
        if (!labels.empty()) d.label = labels[i];
        c.docs.push_back(std::move(d));
    }
    c.recount();
    return c;
}

/// Documents drawn from `topics` disjoint vocabularies of `words` terms each,
/// with `noise` probability of a shared filler word.
inline fisherdoc::TokenizedCorpus topic_corpus(int docs, int topics, int words, int length, double noise,
                                               unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::vector<std::string>> tokens;
    std::vector<int> labels;
    for (int d = 0; d < docs; ++d) {
        const int t = d % topics;
        std::vector<std::string> doc;
        for (int i = 0; i < length; ++i) {
            const int w = static_cast<int>(u(rng) * words);
            doc.push_back(u(rng) < noise ? "filler" + std::to_string(w) : "t" + std::to_string(t) + "w" + std::to_string(w));
        }
        tokens.push_back(std::move(doc));
        labels.push_back(t);
    }
    return make_corpus(tokens, labels);
}

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937& rng, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = n(rng);
    }
    return m;
}

}  // namespace testing
