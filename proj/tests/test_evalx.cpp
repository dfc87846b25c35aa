#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "doctest.h"
#include "fisherdoc/common.hpp"
#include "fisherdoc/evalx.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace fisherdoc;
using doctest::Approx;

namespace {

struct Problem {
    Eigen::MatrixXd x;
    std::vector<int> y;
};

Problem noisy_problem(int n, int d, std::mt19937& rng) {
    Problem p{testing::random_matrix(n, d, rng), {}};
    const Eigen::VectorXd w = testing::random_matrix(d, 1, rng);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
        const double prob = 1.0 / (1.0 + std::exp(-p.x.row(i).dot(w)));
        p.y.push_back(u(rng) < prob ? 1 : 0);
    }
    return p;
}

DocumentVectors dense(const Eigen::MatrixXd& x) {
    std::vector<std::string> ids;
    for (Eigen::Index i = 0; i < x.rows(); ++i) ids.push_back("d" + std::to_string(i));
    return make_dense(std::move(ids), x, "test");
}

double objective(const Eigen::MatrixXd& x, const std::vector<int>& y, const Eigen::VectorXd& params, double c) {
    return logistic_objective(x, std::span<const int>(y), params, c).value;
}

}  // namespace

TEST_CASE("logistic gradient matches finite differences") {
    std::mt19937 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const auto p = noisy_problem(30, 5, rng);
        const Eigen::VectorXd at = testing::random_matrix(6, 1, rng);
        const double c = std::pow(10.0, trial % 5 - 2);
        const auto o = logistic_objective(p.x, std::span<const int>(p.y), at, c);
        Eigen::VectorXd fd(6);
        for (int i = 0; i < 6; ++i) {
            const double h = 1e-6;
            Eigen::VectorXd up = at, down = at;
            up[i] += h;
            down[i] -= h;
            fd[i] = (objective(p.x, p.y, up, c) - objective(p.x, p.y, down, c)) / (2 * h);
        }
        CHECK((fd - o.gradient).norm() / std::max(1e-12, fd.norm()) < 1e-5);

        // Sparse features give the same objective.
        const SparseRowMatrix sx = p.x.sparseView();
        const auto so = logistic_objective(sx, std::span<const int>(p.y), at, c);
        CHECK(so.value == Approx(o.value).epsilon(1e-12));
        CHECK((so.gradient - o.gradient).norm() < 1e-9);
    }
}

TEST_CASE("logistic regression training") {
    SUBCASE("separable pair") {
        Eigen::MatrixXd x(2, 1);
        x << -1, 1;
        const std::vector<int> y{0, 1};
        LogregOptions o;
        o.C = 1e4;
        const auto m = train_logreg(x, std::span<const int>(y), o);
        CHECK(accuracy(predict_logreg(m, x), y) == 1.0);
    }
    SUBCASE("strong regularization drives weights to zero") {
        std::mt19937 rng(1);
        const auto p = noisy_problem(50, 4, rng);
        LogregOptions o;
        o.C = 1e-6;
        const auto m = train_logreg(p.x, std::span<const int>(p.y), o);
        CHECK(m.weights.norm() < 1e-3);
    }
    SUBCASE("optimum satisfies the tolerance and beats the origin") {
        std::mt19937 rng(2);
        const auto p = noisy_problem(200, 6, rng);
        const auto m = train_logreg(p.x, std::span<const int>(p.y));
        CHECK(m.converged);
        Eigen::VectorXd params(7);
        params << m.weights, m.intercept;
        const auto at = logistic_objective(p.x, std::span<const int>(p.y), params, 1.0);
        CHECK(at.gradient.norm() < 1e-5);
        CHECK(at.value <= objective(p.x, p.y, Eigen::VectorXd::Zero(7), 1.0));
    }
    SUBCASE("labels must be binary") {
        const Eigen::MatrixXd x = Eigen::MatrixXd::Ones(2, 1);
        const std::vector<int> y{0, 2};
        CHECK_THROWS_AS(train_logreg(x, std::span<const int>(y)), Error);
    }
}

TEST_CASE("stratified folds partition the data") {
    std::vector<int> labels;
    for (int i = 0; i < 103; ++i) labels.push_back(i % 3 == 0 ? 1 : 0);
    const auto folds = stratified_folds(labels, 10, 5);
    CHECK(folds.size() == labels.size());
    std::vector<int> size(10, 0), pos(10, 0);
    for (std::size_t i = 0; i < folds.size(); ++i) {
        REQUIRE(folds[i] >= 0);
        REQUIRE(folds[i] < 10);
        ++size[static_cast<std::size_t>(folds[i])];
        pos[static_cast<std::size_t>(folds[i])] += labels[i];
    }
    CHECK(*std::max_element(size.begin(), size.end()) - *std::min_element(size.begin(), size.end()) <= 1);
    CHECK(*std::max_element(pos.begin(), pos.end()) - *std::min_element(pos.begin(), pos.end()) <= 1);
    CHECK(stratified_folds(labels, 10, 5) == folds);
    CHECK(stratified_folds(labels, 10, 6) != folds);
}

TEST_CASE("cross-validation") {
    std::mt19937 rng(9);
    SUBCASE("perfect feature") {
        std::vector<int> y;
        Eigen::MatrixXd x(100, 1);
        for (int i = 0; i < 100; ++i) {
            y.push_back(i % 2);
            x(i, 0) = i % 2 == 0 ? -1.0 : 1.0;
        }
        const auto r = cv10(dense(x), y, 100.0, 1);
        CHECK(r.fold_accuracy.size() == 10);
        CHECK(r.mean == 1.0);
        CHECK(r.std == 0.0);
    }
    SUBCASE("shuffled labels sit at chance") {
        auto p = noisy_problem(1000, 5, rng);
        for (std::size_t i = 0; i < p.y.size(); ++i) p.y[i] = static_cast<int>(i % 2);
        std::shuffle(p.y.begin(), p.y.end(), rng);
        const auto r = cv10(dense(p.x), p.y, 1.0, 3);
        CHECK(std::abs(r.mean - 0.5) < 0.05);
        for (double a : r.fold_accuracy) CHECK((a >= 0.0 && a <= 1.0));
        // Deterministic in the seed.
        CHECK(cv10(dense(p.x), p.y, 1.0, 3).fold_accuracy == r.fold_accuracy);
    }
    SUBCASE("C scan") {
        const auto p = noisy_problem(200, 5, rng);
        const auto x = dense(p.x);
        const auto curve = scan_C(x, p.y, default_c_grid(), 2);
        REQUIRE(curve.size() == default_c_grid().size());
        const auto& best = best_report(curve);
        for (const auto& r : curve) CHECK(best.mean >= r.mean);
        for (std::size_t i = 0; i < curve.size(); ++i) {
            CHECK(curve[i].C == default_c_grid()[i]);
            const auto single = cv10(x, p.y, curve[i].C, 2);
            CHECK(single.fold_accuracy == curve[i].fold_accuracy);
        }
        const auto epochs = scan_epochs(default_epoch_grid(), [&](int e) {
            auto r = cv10(x, p.y, 1.0, 2);
            r.epochs = e;
            return r;
        });
        CHECK(epochs.size() == 5);
        CHECK(epochs.back().epochs == 50);
    }
    SUBCASE("population standard deviation") {
        const std::vector<double> v{0.8, 0.9, 1.0};
        CHECK(population_std(v) == Approx(std::sqrt(0.02 / 3.0)).epsilon(1e-12));
        CHECK(mean(v) == Approx(0.9));
    }
}

TEST_CASE("k-means") {
    std::mt19937 rng(6);
    Eigen::MatrixXd x(80, 2);
    std::vector<int> truth;
    const Eigen::MatrixXd noise = testing::random_matrix(80, 2, rng, 0.3);
    for (int i = 0; i < 80; ++i) {
        truth.push_back(i < 40 ? 0 : 1);
        x.row(i) = noise.row(i) + (i < 40 ? Eigen::RowVector2d(-5, 0) : Eigen::RowVector2d(5, 0));
    }
    KMeansOptions o;
    o.k = 2;
    o.seed = 3;
    const auto r = kmeans(x, o);
    CHECK(adjusted_rand_index(r.labels, truth) == 1.0);
    CHECK(r.converged);
    for (std::size_t i = 1; i < r.inertia.size(); ++i) CHECK(r.inertia[i] <= r.inertia[i - 1] + 1e-9);

    o.k = 1;
    const auto one = kmeans(x, o);
    CHECK(std::all_of(one.labels.begin(), one.labels.end(), [](int l) { return l == 0; }));

    o.k = 81;
    CHECK_THROWS_AS(kmeans(x, o), Error);

    // Inertia trend on a harder problem.
    const Eigen::MatrixXd cloud = testing::random_matrix(300, 5, rng);
    o.k = 8;
    const auto hard = kmeans(cloud, o);
    for (std::size_t i = 1; i < hard.inertia.size(); ++i) CHECK(hard.inertia[i] <= hard.inertia[i - 1] + 1e-9);
    CHECK(hard.iterations <= 300);

    const auto runs = kmeans_runs(dense(x), 2, 10, 1);
    CHECK(runs.size() == 10);
    const auto report = cluster_report("t", runs, truth);
    CHECK(report.ari.size() == 10);
    CHECK(report.ari_mean == Approx(1.0));
    CHECK(report.nmi_mean == Approx(1.0));

    const SparseRowMatrix sx = x.sparseView();
    o.k = 2;
    CHECK(kmeans(sx, o).labels == r.labels);
}

TEST_CASE("ARI and NMI") {
    const std::vector<int> a{0, 0, 1, 1, 2, 2};
    CHECK(adjusted_rand_index(a, a) == 1.0);
    CHECK(normalized_mutual_information(a, a) == Approx(1.0));
    const std::vector<int> constant(6, 0);
    CHECK(adjusted_rand_index(constant, a) == 0.0);
    CHECK(normalized_mutual_information(constant, a) == 0.0);
    const std::vector<int> b{0, 0, 0, 1, 1, 1};
    CHECK(adjusted_rand_index(a, b) == Approx(oracle::ari(a, b)).epsilon(1e-12));
    CHECK(normalized_mutual_information(a, b) == Approx(oracle::nmi(a, b)).epsilon(1e-12));

    std::mt19937 rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + rng() % 30;
        std::vector<int> u(n), v(n);
        for (std::size_t i = 0; i < n; ++i) {
            u[i] = static_cast<int>(rng() % 4);
            v[i] = static_cast<int>(rng() % 3);
        }
        const double ari = adjusted_rand_index(u, v);
        CHECK(ari == Approx(oracle::ari(u, v)).epsilon(1e-9));
        CHECK(ari == Approx(adjusted_rand_index(v, u)).epsilon(1e-12));
        CHECK((ari >= -1.0 && ari <= 1.0));
        const double nmi = normalized_mutual_information(u, v);
        CHECK(nmi == Approx(oracle::nmi(u, v)).epsilon(1e-9));
        CHECK(nmi == Approx(normalized_mutual_information(v, u)).epsilon(1e-12));
        CHECK((nmi >= 0.0 && nmi <= 1.0 + 1e-12));
        // Relabeling does not matter.
        std::vector<int> w(n);
        for (std::size_t i = 0; i < n; ++i) w[i] = 10 - 3 * u[i];
        CHECK(adjusted_rand_index(w, v) == Approx(ari).epsilon(1e-12));
        CHECK(normalized_mutual_information(w, v) == Approx(nmi).epsilon(1e-12));
    }
}
