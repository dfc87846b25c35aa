// Acceptance runner: one PASS/FAIL/SKIP line per criterion.
//
//   fisherdoc_acceptance [c1 c2 ...]
//
// c1-c4 read datasets below $FISHERDOC_DATA (see README) and are skipped when
// they are absent. Exit status: 1 if any criterion failed, 77 if every
// requested criterion was skipped, 0 otherwise.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fisherdoc/baselines.hpp"
#include "fisherdoc/corpus.hpp"
#include "fisherdoc/evalx.hpp"
#include "fisherdoc/fisher.hpp"
#include "fisherdoc/mixtures.hpp"
#include "fisherdoc/pipeline.hpp"
#include "fisherdoc/retrieval.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace fisherdoc;
namespace fs = std::filesystem;

namespace {

enum class Outcome { pass, fail, skip };

struct Verdict {
    Outcome outcome;
    std::string detail;
};

Verdict skip(std::string why) { return {Outcome::skip, std::move(why)}; }
Verdict judge(bool ok, std::string detail) { return {ok ? Outcome::pass : Outcome::fail, std::move(detail)}; }

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::optional<fs::path> data_root() {
    const char* env = std::getenv("FISHERDOC_DATA");
    if (!env || !*env) return std::nullopt;
    return fs::path(env);
}

std::optional<fs::path> dataset_dir(const std::string& name) {
    const auto root = data_root();
    if (!root || !fs::is_directory(*root / name)) return std::nullopt;
    return *root / name;
}

std::vector<int> labels_of(const TokenizedCorpus& corpus) {
    std::vector<int> y;
    for (const auto& d : corpus.docs) y.push_back(d.label.value_or(-1));
    return y;
}

TokenizedCorpus load_labeled(const fs::path& dir, const char* format) {
    return load_labeled_corpus(dir, *parse_labeled_format(format));
}

double best_accuracy(const DocumentVectors& x, const std::vector<int>& y) {
    return best_report(scan_C(x, y, default_c_grid(), 1)).mean * 100.0;
}

double tfidf_accuracy(const TokenizedCorpus& corpus) {
    RepresentationConfig config;
    auto rep = make_representer(config);
    rep->fit(corpus);
    return best_accuracy(rep->training_vectors(corpus), labels_of(corpus));
}

// ------------------------------------------------------------------ c1

Verdict c1() {
    const auto subj = dataset_dir("subj");
    const auto sent = dataset_dir("sent");
    if (!subj || !sent) return skip("needs $FISHERDOC_DATA/subj and $FISHERDOC_DATA/sent");
    const double a = tfidf_accuracy(load_labeled(*subj, "subj_sent"));
    const double b = tfidf_accuracy(load_labeled(*sent, "subj_sent"));
    return judge(std::abs(a - 89.3) <= 1.5 && std::abs(b - 75.9) <= 2.0,
                 "tfidf subj " + fmt("%.2f", a) + " (target 89.3 +- 1.5), sent " + fmt("%.2f", b) +
                     " (target 75.9 +- 2.0)");
}

// ------------------------------------------------------------------ c2

Verdict c2() {
    const auto subj = dataset_dir("subj");
    if (!subj) return skip("needs $FISHERDOC_DATA/subj");
    const auto corpus = load_labeled(*subj, "subj_sent");
    const auto y = labels_of(corpus);
    double best = 0.0;
    int best_epochs = 0;
    for (int e : default_epoch_grid()) {
        RepresentationConfig config;
        config.kind = Representation::cbow;
        config.dim = 50;
        config.epochs = e;
        auto rep = make_representer(config);
        rep->fit(corpus);
        const double acc = best_accuracy(rep->training_vectors(corpus), y);
        if (acc > best) {
            best = acc;
            best_epochs = e;
        }
    }
    return judge(std::abs(best - 89.0) <= 2.5,
                 "cbow d=50 subj " + fmt("%.2f", best) + " at epochs=" + std::to_string(best_epochs) +
                     " (target 89.0 +- 2.5)");
}

// ------------------------------------------------------------------ c3

ClusterReport cluster(const DocumentVectors& x, const std::vector<int>& truth, const std::string& tag) {
    const int k = static_cast<int>(std::set<int>(truth.begin(), truth.end()).size());
    return cluster_report(tag, kmeans_runs(l2_normalized(x), k, 10, 1), truth);
}

Verdict c3() {
    const auto ng = dataset_dir("20news-bydate");
    if (!ng) return skip("needs $FISHERDOC_DATA/20news-bydate");
    const auto corpus = load_labeled(*ng, "newsgroups_bydate");
    const auto truth = labels_of(corpus);

    RepresentationConfig pv;
    pv.kind = Representation::pv_dbow;
    pv.dim = 50;
    auto dbow = make_representer(pv);
    dbow->fit(corpus);
    const auto pv_report = cluster(dbow->training_vectors(corpus), truth, "pv_dbow");

    RepresentationConfig fv;
    fv.kind = Representation::fv_movmf;
    fv.dim = 50;
    auto movmf = make_representer(fv);
    movmf->fit(corpus);
    const auto fv_report = cluster(movmf->training_vectors(corpus), truth, "fv_movmf");

    const double pv_nmi = pv_report.nmi_mean * 100.0;
    const double fv_nmi = fv_report.nmi_mean * 100.0;
    const double fv_ari = fv_report.ari_mean * 100.0;
    return judge(std::abs(pv_nmi - 66.1) <= 4.0 && fv_nmi < 20.0 && fv_ari < 5.0,
                 "pv_dbow NMI " + fmt("%.2f", pv_nmi) + " (target 66.1 +- 4); fv_movmf NMI " + fmt("%.2f", fv_nmi) +
                     " (< 20), ARI " + fmt("%.2f", fv_ari) + " (< 5)");
}

// ------------------------------------------------------------------ c4

Verdict c4() {
    const auto dir = dataset_dir("robust04");
    if (!dir) return skip("needs $FISHERDOC_DATA/robust04 (docs, topics, qrels)");
    const auto collection = load_trec_collection(*dir / "docs", *dir / "topics", *dir / "qrels");
    const auto index = build_index(collection.docs);
    std::map<std::string, std::vector<std::string>> queries;
    for (const auto& d : topic_corpus(collection.topics, TopicFields::title_description).docs) queries[d.id] = d.tokens;
    const auto report = evaluate_run(bm25_run(index, queries), collection.qrels);
    const double map = report.map * 100.0;
    const double p20 = report.p20 * 100.0;
    return judge(std::abs(map - 22.80) <= 1.0 && std::abs(p20 - 33.21) <= 1.5,
                 "bm25 MAP " + fmt("%.2f", map) + " (target 22.80 +- 1.0), P@20 " + fmt("%.2f", p20) +
                     " (target 33.21 +- 1.5)");
}

// ------------------------------------------------------------------ c5

struct Part {
    std::string name;
    double worst = 0.0;
    int cases = 0;
    bool ok = true;
};

Part fv_oracles(std::mt19937& rng) {
    Part part{"a"};
    std::uniform_int_distribution<int> K(1, 3), D(2, 8), T(1, 5);
    std::uniform_real_distribution<double> u(0.2, 1.0);
    FisherOptions raw;
    raw.l2_normalize = false;
    for (int c = 0; c < 200; ++c) {
        const int k = K(rng), d = D(rng), t = T(rng);
        const Eigen::MatrixXd words = testing::random_matrix(t, d, rng);
        Eigen::VectorXd w(k);
        for (int i = 0; i < k; ++i) w[i] = u(rng);
        w /= w.sum();

        GaussianMixture<double> gmm;
        gmm.weights = w;
        gmm.means = testing::random_matrix(k, d, rng);
        gmm.variances = Eigen::MatrixXd::NullaryExpr(k, d, [&] { return u(rng) + 0.3; });
        const auto got = fv_gmm<double>(words, gmm, raw).values;
        const auto expect = oracle::fv_gmm(words, w, gmm.means, gmm.variances);

        VmfMixture<double> vmf;
        vmf.weights = w;
        vmf.directions = testing::random_matrix(k, d, rng).rowwise().normalized();
        vmf.concentrations = Eigen::VectorXd::NullaryExpr(k, [&] { return 4.0 * u(rng); });
        const auto got_v = fv_movmf<double>(words, vmf, raw).values;
        const auto expect_v = oracle::fv_movmf(words, w, vmf.directions, vmf.concentrations);

        for (Eigen::Index j = 0; j < got.size(); ++j) {
            part.worst = std::max(part.worst, std::abs(got[j] - expect[static_cast<std::size_t>(j)]));
            part.worst = std::max(part.worst, std::abs(got_v[j] - expect_v[static_cast<std::size_t>(j)]));
        }
        ++part.cases;
    }
    part.ok = part.worst <= 1e-10;
    return part;
}

Part em_monotone(std::mt19937& rng) {
    Part part{"b"};
    auto scan = [&](const FitTrace& t) {
        for (std::size_t i = 1; i < t.log_likelihood.size(); ++i) {
            if (std::find(t.reinitialized.begin(), t.reinitialized.end(), i) != t.reinitialized.end()) continue;
            part.worst = std::max(part.worst, t.log_likelihood[i - 1] - t.log_likelihood[i]);
        }
    };
    std::uniform_int_distribution<int> K(2, 4), D(2, 6), N(30, 80);
    for (int c = 0; c < 100; ++c) {
        MixtureOptions o;
        o.components = K(rng);
        o.restarts = 2;
        o.seed = static_cast<std::uint64_t>(c);
        const int d = D(rng);
        Eigen::MatrixXd x = testing::random_matrix(N(rng), d, rng);
        const Eigen::MatrixXd centers = 3.0 * testing::random_matrix(o.components, d, rng);
        for (Eigen::Index r = 0; r < x.rows(); ++r) x.row(r) += centers.row(r % o.components);
        for (const auto& t : fit_gmm<double>(x, o).restarts) scan(t);
        for (const auto& t : fit_movmf<double>(x, o).restarts) scan(t);
        part.cases += 2;
    }
    part.ok = part.worst <= 1e-8;
    return part;
}

Part logreg_gradient(std::mt19937& rng) {
    Part part{"c"};
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int c = 0; c < 50; ++c) {
        const int n = 20 + c % 10, d = 2 + c % 6;
        const Eigen::MatrixXd x = testing::random_matrix(n, d, rng);
        std::vector<int> y(static_cast<std::size_t>(n));
        for (auto& v : y) v = static_cast<int>(rng() % 2);
        const Eigen::VectorXd at = Eigen::VectorXd::NullaryExpr(d + 1, [&] { return u(rng); });
        const double C = std::pow(10.0, 2.0 * u(rng));
        const auto objective = logistic_objective(x, std::span<const int>(y), at, C);
        Eigen::VectorXd fd(d + 1);
        for (int j = 0; j <= d; ++j) {
            const double h = 1e-6;
            Eigen::VectorXd lo = at, hi = at;
            lo[j] -= h;
            hi[j] += h;
            fd[j] = (logistic_objective(x, std::span<const int>(y), hi, C).value -
                     logistic_objective(x, std::span<const int>(y), lo, C).value) /
                    (2.0 * h);
        }
        part.worst = std::max(part.worst, (objective.gradient - fd).norm() / std::max(fd.norm(), 1e-12));
        ++part.cases;
    }
    part.ok = part.worst < 1e-5;
    return part;
}

Part metric_oracles(std::mt19937& rng) {
    Part part{"d"};
    for (int c = 0; c < 150; ++c) {
        const int n = 5 + static_cast<int>(rng() % 40);
        std::vector<std::string> docs;
        RankedList list;
        std::map<std::string, int> judged;
        for (int i = 0; i < n; ++i) {
            docs.push_back("d" + std::to_string(i));
            list.push_back({docs.back(), static_cast<double>(n - i)});
            if (rng() % 3 == 0) judged[docs.back()] = static_cast<int>(rng() % 3);
        }
        // Relevant documents the run never retrieved.
        for (int i = 0; i < static_cast<int>(rng() % 3); ++i) judged["missing" + std::to_string(i)] = 1;
        part.worst = std::max(part.worst, std::abs(average_precision(list, judged) - oracle::average_precision(docs, judged)));
        part.worst = std::max(part.worst, std::abs(precision_at(list, judged, 20) - oracle::precision_at(docs, judged, 20)));

        const int m = 2 + static_cast<int>(rng() % 30);
        const int ka = 1 + static_cast<int>(rng() % 5), kb = 1 + static_cast<int>(rng() % 5);
        std::vector<int> a(static_cast<std::size_t>(m)), b(static_cast<std::size_t>(m));
        for (auto& v : a) v = static_cast<int>(rng() % static_cast<unsigned>(ka));
        for (auto& v : b) v = static_cast<int>(rng() % static_cast<unsigned>(kb));
        part.worst = std::max(part.worst, std::abs(adjusted_rand_index(a, b) - oracle::ari(a, b)));
        part.worst = std::max(part.worst, std::abs(normalized_mutual_information(a, b) - oracle::nmi(a, b)));
        ++part.cases;
    }
    part.ok = part.worst <= 1e-9;
    return part;
}

Part bm25_hand_values() {
    Part part{"e"};
    // D1 = apple apple banana, D2 = banana cherry; avgdl 2.5, k1 1.2, b 0.75.
    const auto index = build_index(testing::make_corpus({{"apple", "apple", "banana"}, {"banana", "cherry"}}));
    const double idf_apple = std::log(1.0 + (2.0 - 1.0 + 0.5) / (1.0 + 0.5));
    const double idf_banana = std::log(1.0 + (2.0 - 2.0 + 0.5) / (2.0 + 0.5));
    auto term = [](double tf, double dl, double idf) {
        return idf * tf / (tf + 1.2 * (1.0 - 0.75 + 0.75 * dl / 2.5));
    };
    const std::vector<std::string> q1{"apple"};
    const std::vector<std::string> q2{"apple", "banana"};
    const auto apple = bm25_search(index, q1);
    const auto both = bm25_search(index, q2);
    const std::vector<std::pair<double, double>> pairs{
        {apple.at(0).score, term(2, 3, idf_apple)},
        {apple.at(0).score, 0.4101462606863582},
        {both.at(0).score, term(2, 3, idf_apple) + term(1, 3, idf_banana)},
        {both.at(1).score, term(1, 2, idf_banana)},
    };
    for (const auto& [got, expect] : pairs) part.worst = std::max(part.worst, std::abs(got - expect));
    part.cases = static_cast<int>(pairs.size());
    part.ok = part.worst <= 1e-9 && apple.size() == 1 && both.size() == 2 && both[0].doc == "d0";
    return part;
}

Part fusion_identity(std::mt19937& rng) {
    Part part{"f"};
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int c = 0; c < 200; ++c) {
        RankedList pool;
        const int n = 1 + static_cast<int>(rng() % 30);
        double s = 10.0;
        for (int i = 0; i < n; ++i) {
            if (rng() % 4 != 0) s -= u(rng);  // keep some ties
            pool.push_back({"d" + std::to_string(i), s});
        }
        std::vector<double> cosine(static_cast<std::size_t>(n));
        for (auto& v : cosine) v = 2.0 * u(rng) - 1.0;
        const auto fused = fuse(pool, cosine, 1.0);
        bool same = fused.size() == pool.size();
        for (std::size_t i = 0; same && i < pool.size(); ++i) same = fused[i].doc == pool[i].doc;
        if (!same) part.ok = false;
        ++part.cases;
    }
    return part;
}

Verdict c5() {
    const auto start = std::chrono::steady_clock::now();
    std::mt19937 rng(20);
    const std::vector<Part> parts{fv_oracles(rng),      em_monotone(rng),   logreg_gradient(rng),
                                  metric_oracles(rng),  bm25_hand_values(), fusion_identity(rng)};
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool ok = seconds < 120.0;
    std::ostringstream detail;
    for (const auto& p : parts) {
        ok = ok && p.ok;
        detail << '(' << p.name << ") " << (p.ok ? "ok" : "FAILED") << ' ' << p.cases << " cases";
        if (p.name != "f") detail << " worst " << fmt("%.2e", p.worst);
        detail << "; ";
    }
    detail << fmt("%.1f", seconds) << " s";
    return judge(ok, detail.str());
}

// ------------------------------------------------------------------ c6

Verdict c6() {
    std::ostringstream detail;
    bool ok = true;
    std::mt19937 rng(6);

    const auto corpus = testing::topic_corpus(60, 4, 20, 30, 0.2, 6);
    for (int d : {20, 50, 100}) {
        EmbeddingMatrix emb;
        for (const auto& [term, count] : corpus.vocab_counts) emb.vocab.push_back(term);
        emb.vectors = testing::random_matrix(static_cast<Eigen::Index>(emb.vocab.size()), d, rng);
        emb.rebuild_index();
        for (auto kind : {Representation::fv_gmm, Representation::fv_movmf}) {
            RepresentationConfig config;
            config.kind = kind;
            config.dim = d;
            config.restarts = 1;
            auto rep = make_fisher_representer(config, emb);
            rep->fit(corpus);
            const auto x = rep->encode(corpus);
            const bool right = x.dim() == 15 * d;
            ok = ok && right;
            detail << to_string(kind) << " d=" << d << ": " << x.dim() << (right ? "" : " (expected 15*d)") << "; ";
        }
    }

    // More distinct terms than the vocabulary cap.
    std::vector<std::vector<std::string>> docs;
    for (int i = 0; i < 400; ++i) {
        std::vector<std::string> doc;
        for (int j = 0; j < 30; ++j) doc.push_back("term" + std::to_string(rng() % 9000));
        docs.push_back(doc);
    }
    docs.push_back({});
    for (int j = 0; j < 6000; ++j) docs.back().push_back("term" + std::to_string(j));
    const auto wide = testing::make_corpus(docs);
    const auto model = fit_tfidf(wide);
    const auto tfidf = transform_tfidf(model, wide);
    Eigen::Index widest = 0;
    for (Eigen::Index r = 0; r < tfidf.rows(); ++r) widest = std::max(widest, tfidf.row(r).nonZeros());
    ok = ok && widest <= 5000 && tfidf.cols() <= 5000;
    detail << "tfidf max nnz " << widest << " of " << wide.vocab_counts.size() << " terms; ";

    const auto grid = bm25_grid();
    const auto small = testing::make_corpus({{"a", "b"}, {"b", "c"}});
    const auto scan = grid_scan(build_index(small), {{"q", {"b"}}}, {{"q", {{"d1", 1}}}}, grid, 2);
    ok = ok && grid.size() == 1281 && scan.cells.size() == 1281;
    detail << "grid cells " << scan.cells.size();
    return judge(ok, detail.str());
}

}  // namespace

int main(int argc, char** argv) {
    const std::map<std::string, std::function<Verdict()>> criteria{
        {"c1", c1}, {"c2", c2}, {"c3", c3}, {"c4", c4}, {"c5", c5}, {"c6", c6}};
    std::vector<std::string> wanted(argv + 1, argv + argc);
    if (wanted.empty()) {
        for (const auto& [name, fn] : criteria) wanted.push_back(name);
    }
    set_log_level(LogLevel::quiet);
    int failed = 0, skipped = 0;
    for (const auto& name : wanted) {
        const auto it = criteria.find(name);
        if (it == criteria.end()) {
            std::cerr << "unknown criterion " << name << '\n';
            return 2;
        }
        Verdict v;
        try {
            v = it->second();
        } catch (const std::exception& e) {
            v = {Outcome::fail, std::string("error: ") + e.what()};
        }
        const char* word = v.outcome == Outcome::pass ? "PASS" : v.outcome == Outcome::fail ? "FAIL" : "SKIP";
        std::cout << word << ' ' << name << ": " << v.detail << std::endl;
        failed += v.outcome == Outcome::fail;
        skipped += v.outcome == Outcome::skip;
    }
    if (failed > 0) return 1;
    if (skipped == static_cast<int>(wanted.size())) return 77;
    return 0;
}
