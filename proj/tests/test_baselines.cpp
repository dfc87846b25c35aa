#include <cmath>
#include <map>
#include <array>
#include <random>
#include <set>

#include "doctest.h"
#include "fisherdoc/baselines.hpp"
#include "fisherdoc/common.hpp"
#include "support.hpp"

using namespace fisherdoc;
using doctest::Approx;

namespace {

// Independent TF-IDF: smooth idf, raw counts, L2 norm.
std::map<std::string, double> tfidf_oracle(const TokenizedCorpus& c, const std::vector<std::string>& doc) {
    std::map<std::string, std::size_t> df;
    for (const auto& d : c.docs) {
        std::set<std::string> seen(d.tokens.begin(), d.tokens.end());
        for (const auto& t : seen) ++df[t];
    }
    const double n = static_cast<double>(c.docs.size());
    std::map<std::string, double> w;
    for (const auto& t : doc) {
        if (!df.contains(t)) continue;
        w[t] += std::log((1.0 + n) / (1.0 + static_cast<double>(df[t]))) + 1.0;
    }
    double norm = 0.0;
    for (const auto& [t, v] : w) norm += v * v;
    for (auto& [t, v] : w) v /= std::sqrt(norm);
    return w;
}

}  // namespace

TEST_CASE("smoothed idf") {
    const auto c = testing::make_corpus({{"a", "b"}, {"a"}});
    const auto m = fit_tfidf(c);
    CHECK(m.idf[m.column.at("a")] == Approx(1.0).epsilon(1e-12));
    CHECK(m.idf[m.column.at("b")] == Approx(std::log(1.5) + 1.0).epsilon(1e-12));
    CHECK(smooth_idf(2, 1) == Approx(1.4054651081081644));
}

TEST_CASE("top-term selection") {
    const auto c = testing::make_corpus({{"a", "b"}, {"a"}});
    // Max normalized weight: "a" reaches 1 in document 2, "b" reaches
    // 1.405/sqrt(1 + 1.405^2) = 0.815 in document 1.
    const auto m = fit_tfidf(c, 1);
    REQUIRE(m.vocab.size() == 1);
    CHECK(m.vocab[0] == "a");

    // Sum over documents: "a" 0.579 + 1, "b" 0.815.
    CHECK(fit_tfidf(c, 1, TermSelection::sum_weight).vocab[0] == "a");

    // Symmetric terms tie and the lexicographically smaller one wins.
    const auto tie = testing::make_corpus({{"zeta", "alpha"}, {"zeta", "alpha"}});
    CHECK(fit_tfidf(tie, 1).vocab[0] == "alpha");

    const auto big = testing::topic_corpus(300, 3, 4000, 40, 0.0, 1);
    const auto m5000 = fit_tfidf(big);
    CHECK(m5000.size() == 5000);
    const auto x = transform_tfidf(m5000, big);
    for (Eigen::Index r = 0; r < x.rows(); ++r) CHECK(x.row(r).nonZeros() <= 5000);

    CHECK_THROWS_AS(fit_tfidf(testing::make_corpus({{}, {}})), Error);
}

TEST_CASE("tf-idf transform matches an independent computation") {
    std::mt19937 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const auto c = testing::topic_corpus(12, 2, 6, 5, 0.3, static_cast<unsigned>(trial));
        const auto m = fit_tfidf(c);
        for (const auto& d : c.docs) {
            const auto v = transform_tfidf(m, d.tokens);
            const auto expect = tfidf_oracle(c, d.tokens);
            CHECK(v.nonZeros() == static_cast<Eigen::Index>(expect.size()));
            for (const auto& [t, w] : expect) CHECK(v.coeff(m.column.at(t)) == Approx(w).epsilon(1e-12));
            const double norm = v.norm();
            CHECK((norm == 0.0 || std::abs(norm - 1.0) < 1e-9));
        }
    }
}

TEST_CASE("tf-idf edge cases") {
    const auto c = testing::make_corpus({{"a", "b"}, {"a"}, {"c", "c"}});
    const auto m = fit_tfidf(c);
    const auto one = transform_tfidf(m, std::vector<std::string>{"b"});
    CHECK(one.nonZeros() == 1);
    CHECK(one.coeff(m.column.at("b")) == Approx(1.0));
    CHECK(transform_tfidf(m, std::vector<std::string>{"zzz"}).nonZeros() == 0);

    // Two-term document by hand: weights 1 (a) and 1 + ln 2 (c).
    const double wa = std::log(4.0 / 3.0) + 1.0;
    const double wc = std::log(4.0 / 2.0) + 1.0;
    const auto two = transform_tfidf(m, std::vector<std::string>{"a", "c"});
    CHECK(two.coeff(m.column.at("a")) == Approx(wa / std::hypot(wa, wc)));
    CHECK(two.coeff(m.column.at("c")) == Approx(wc / std::hypot(wa, wc)));

    const auto same = testing::make_corpus({{"x", "y"}, {"x", "y"}, {"x", "y"}});
    const auto sm = fit_tfidf(same);
    const auto rows = transform_tfidf(sm, same);
    CHECK((Eigen::MatrixXd(rows.row(0)) - Eigen::MatrixXd(rows.row(2))).norm() == 0.0);
}

TEST_CASE("truncated SVD matches a dense oracle") {
    std::mt19937 rng(11);
    const Eigen::MatrixXd a = testing::random_matrix(20, 10, rng);
    const Eigen::JacobiSVD<Eigen::MatrixXd> oracle(a, Eigen::ComputeThinV);
    for (auto method : {SvdMethod::dense, SvdMethod::subspace_iteration}) {
        const auto svd = truncated_svd(a, 3, method, 5);
        const Eigen::MatrixXd v = svd.right_vectors;
        CHECK((v.transpose() * v - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-6);
        for (int i = 0; i < 3; ++i) CHECK(svd.singular_values[i] == Approx(oracle.singularValues()[i]).epsilon(1e-8));
        // Principal angles between the subspaces: cosines are the singular
        // values of V^T V_oracle.
        const Eigen::MatrixXd overlap = v.transpose() * oracle.matrixV().leftCols(3);
        const Eigen::VectorXd cosines = Eigen::JacobiSVD<Eigen::MatrixXd>(overlap).singularValues();
        for (int i = 0; i < 3; ++i) CHECK(std::acos(std::min(1.0, cosines[i])) < 1e-4);
    }
}

TEST_CASE("LSI") {
    const auto c = testing::topic_corpus(60, 3, 10, 12, 0.2, 4);
    const auto m = fit_lsi(c, 5);
    const Eigen::MatrixXd& p = m.projection;
    CHECK((p.transpose() * p - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-6);
    for (Eigen::Index i = 1; i < m.singular_values.size(); ++i) {
        CHECK(m.singular_values[i] <= m.singular_values[i - 1]);
    }
    CHECK(m.singular_values.minCoeff() > 0.0);

    SUBCASE("rank-1 corpus") {
        const auto same = testing::make_corpus({{"x", "y", "y"}, {"x", "y", "y"}, {"x", "y", "y"}});
        const auto r1 = fit_lsi(same, 1);
        const auto v0 = transform_lsi(r1, same.docs[0].tokens);
        const auto v2 = transform_lsi(r1, same.docs[2].tokens);
        CHECK(std::abs(v0[0]) == Approx(std::abs(v2[0])));
        CHECK_THROWS_WITH_AS(fit_lsi(same, 2), doctest::Contains("rank 1"), Error);
    }
    SUBCASE("exact reconstruction at full rank") {
        const auto small = testing::make_corpus({{"a", "b"}, {"b", "c", "c"}, {"a", "d"}, {"d", "d", "e"}});
        const auto tfidf = fit_tfidf(small);
        const Eigen::MatrixXd x = Eigen::MatrixXd(transform_tfidf(tfidf, small));
        const auto full = fit_lsi(small, 4);
        const Eigen::MatrixXd recon = x * full.projection * full.projection.transpose();
        CHECK((recon - x).norm() <= 1e-6);
    }
    SUBCASE("save and load") {
        testing::TempDir dir;
        m.save(dir / "lsi.fdv");
        const auto back = LsiModel::load(dir / "lsi.fdv");
        CHECK(back.projection == m.projection);
        CHECK(back.tfidf.vocab == m.tfidf.vocab);
    }
}

TEST_CASE("LDA recovers disjoint topics") {
    const auto c = testing::topic_corpus(80, 2, 8, 20, 0.0, 9);
    LdaOptions o;
    o.topics = 2;
    o.passes = 30;
    o.seed = 3;
    const auto m = fit_lda(c, o);
    CHECK(m.alpha == Approx(0.5));
    CHECK(m.beta == Approx(0.01));
    for (int k = 0; k < 2; ++k) {
        CHECK(m.topic_word.row(k).sum() == Approx(1.0).epsilon(1e-9));
        CHECK(m.topic_word.row(k).minCoeff() >= 0.0);
    }

    // Purity: each true class maps mostly to one dominant inferred topic.
    int pure = 0;
    std::map<int, std::array<int, 2>> votes;
    for (const auto& d : c.docs) {
        const auto theta = infer_lda(m, d.tokens);
        CHECK(theta.sum() == Approx(1.0).epsilon(1e-9));
        Eigen::Index top = 0;
        theta.maxCoeff(&top);
        ++votes[*d.label][static_cast<std::size_t>(top)];
    }
    for (const auto& [label, v] : votes) pure += std::max(v[0], v[1]);
    CHECK(static_cast<double>(pure) / static_cast<double>(c.docs.size()) > 0.9);

    // Likelihood trend: mean over each later 5-pass window is not lower.
    const auto& ll = m.log_likelihood;
    REQUIRE(ll.size() == 30);
    auto window = [&](std::size_t start) {
        double s = 0.0;
        for (std::size_t i = start; i < start + 5; ++i) s += ll[i];
        return s / 5.0;
    };
    CHECK(window(25) >= window(0));

    bool flagged = false;
    const auto empty = infer_lda(m, std::vector<std::string>{}, &flagged);
    CHECK(flagged);
    CHECK(empty[0] == Approx(0.5));
    CHECK(empty[1] == Approx(0.5));

    // Seeded and content-keyed: repeated inference is identical.
    CHECK(infer_lda(m, c.docs[3].tokens) == infer_lda(m, c.docs[3].tokens));

    testing::TempDir dir;
    m.save(dir / "lda.fdv");
    const auto back = LdaModel::load(dir / "lda.fdv");
    CHECK(back.topic_word == m.topic_word);
    CHECK(infer_lda(back, c.docs[3].tokens) == infer_lda(m, c.docs[3].tokens));
}

TEST_CASE("LDA pass bounds") {
    const auto c = testing::topic_corpus(10, 2, 4, 5, 0.0, 1);
    LdaOptions o;
    o.topics = 2;
    o.passes = 19;
    CHECK_THROWS_AS(fit_lda(c, o), Error);
    o.passes = 101;
    CHECK_THROWS_AS(fit_lda(c, o), Error);
}

TEST_CASE("tf-idf model round-trip") {
    const auto c = testing::topic_corpus(20, 2, 5, 6, 0.2, 2);
    const auto m = fit_tfidf(c);
    testing::TempDir dir;
    m.save(dir / "t.fdv");
    const auto back = TfidfModel::load(dir / "t.fdv");
    CHECK(back.vocab == m.vocab);
    CHECK(back.idf == m.idf);
}
