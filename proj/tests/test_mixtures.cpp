#include <cmath>
#include <random>

#include <boost/math/special_functions/bessel.hpp>

#include "doctest.h"
#include "fisherdoc/mixtures.hpp"
#include "fisherdoc/special.hpp"
#include "support.hpp"

using namespace fisherdoc;
using doctest::Approx;

namespace {

MixtureOptions options(int k, std::uint64_t seed = 1, int restarts = 3) {
    MixtureOptions o;
    o.components = k;
    o.restarts = restarts;
    o.seed = seed;
    return o;
}

void check_monotone(const FitTrace& t) {
    for (std::size_t i = 1; i < t.log_likelihood.size(); ++i) {
        if (std::find(t.reinitialized.begin(), t.reinitialized.end(), i) != t.reinitialized.end()) continue;
        CHECK(t.log_likelihood[i] >= t.log_likelihood[i - 1] - 1e-8);
    }
}

Eigen::MatrixXd blobs(const Eigen::MatrixXd& centers, int per, double spread, std::mt19937& rng) {
    Eigen::MatrixXd x(centers.rows() * per, centers.cols());
    for (Eigen::Index c = 0; c < centers.rows(); ++c) {
        const Eigen::MatrixXd noise = testing::random_matrix(per, centers.cols(), rng, spread);
        for (int i = 0; i < per; ++i) x.row(c * per + i) = centers.row(c) + noise.row(i);
    }
    return x;
}

}  // namespace

TEST_CASE("log Bessel function against Boost") {
    for (double nu : {0.0, 0.5, 1.0, 4.0, 9.0, 24.0}) {
        for (double x : {1e-3, 0.1, 1.0, 5.0, 30.0, 200.0}) {
            const double expect = std::log(boost::math::cyl_bessel_i(nu, x));
            CHECK(log_bessel_i(nu, x) == Approx(expect).epsilon(1e-9));
        }
    }
    // Far outside double range for I itself.
    for (int d : {2, 20, 50, 100, 300, 1024}) {
        for (double kappa : {1e-6, 1e-2, 1.0, 1e2, 1e4, kKappaMax}) {
            CHECK(std::isfinite(log_vmf_normalizer(d, kappa)));
        }
    }
    // d = 3: C(k) = k / (4 pi sinh k).
    CHECK(log_vmf_normalizer(3, 2.0) == Approx(std::log(2.0 / (4 * M_PI * std::sinh(2.0)))).epsilon(1e-12));
    CHECK(bessel_ratio(3, 2.0) == Approx(1.0 / std::tanh(2.0) - 0.5).epsilon(1e-12));
}

TEST_CASE("concentration estimate") {
    CHECK(estimate_kappa(0.0, 50) == kKappaFloor);
    CHECK(estimate_kappa(0.5, 50) == Approx(33.1666666667).epsilon(1e-10));
    const double high = estimate_kappa(0.999, 50);
    CHECK(high > 1e4);
    CHECK(high <= kKappaMax);
    CHECK(estimate_kappa(1.0, 50) == kKappaMax);
    CHECK(estimate_kappa(1.5, 50) == kKappaMax);
    // Newton refinement solves A_d(k) = r.
    const double k = refine_kappa(0.5, 50, estimate_kappa(0.5, 50), 20);
    CHECK(bessel_ratio(50, k) == Approx(0.5).epsilon(1e-9));
}

TEST_CASE("GMM responsibilities") {
    GaussianMixture<double> one;
    one.weights = Eigen::VectorXd::Ones(1);
    one.means = Eigen::MatrixXd::Zero(1, 2);
    one.variances = Eigen::MatrixXd::Ones(1, 2);
    CHECK(responsibilities(one, Eigen::VectorXd(Eigen::Vector2d(3, -1)))[0] == 1.0);

    GaussianMixture<double> two;
    two.weights = Eigen::Vector2d(0.5, 0.5);
    two.means.resize(2, 1);
    two.means << -1, 1;
    two.variances = Eigen::MatrixXd::Ones(2, 1);
    const auto mid = responsibilities(two, Eigen::VectorXd::Zero(1));
    CHECK(mid[0] == Approx(0.5));
    CHECK(mid[1] == Approx(0.5));

    // Hand density ratio with unequal weights and variances.
    two.weights = Eigen::Vector2d(0.3, 0.7);
    two.variances << 0.5, 2.0;
    const double x = 0.4;
    auto density = [](double x, double m, double v) { return std::exp(-(x - m) * (x - m) / (2 * v)) / std::sqrt(2 * M_PI * v); };
    const double a = 0.3 * density(x, -1, 0.5);
    const double b = 0.7 * density(x, 1, 2.0);
    const auto g = responsibilities(two, Eigen::VectorXd::Constant(1, x));
    CHECK(g[0] == Approx(a / (a + b)).epsilon(1e-12));
    CHECK(g.sum() == Approx(1.0).epsilon(1e-12));
    // Far in the tail the log-space computation stays a probability vector.
    const auto tail = responsibilities(two, Eigen::VectorXd::Constant(1, 1e4));
    CHECK(tail.allFinite());
    CHECK(tail.sum() == Approx(1.0));
}

TEST_CASE("GMM fitting") {
    std::mt19937 rng(4);
    SUBCASE("one component is the sample moments") {
        const Eigen::MatrixXd x = testing::random_matrix(50, 3, rng, 2.0);
        const auto fit = fit_gmm<double>(x, options(1));
        const Eigen::RowVectorXd mean = x.colwise().mean();
        const Eigen::RowVectorXd var = (x.rowwise() - mean).array().square().colwise().mean();
        CHECK((fit.model.means.row(0) - mean).norm() < 1e-9);
        CHECK((fit.model.variances.row(0) - var).norm() < 1e-9);
        CHECK(fit.model.weights[0] == Approx(1.0));
    }
    SUBCASE("separated blobs are recovered") {
        Eigen::MatrixXd centers(2, 2);
        centers << -5, 0, 5, 1;
        const auto x = blobs(centers, 200, 0.5, rng);
        const auto fit = fit_gmm<double>(x, options(2));
        for (Eigen::Index c = 0; c < 2; ++c) {
            const double best = std::min((fit.model.means.row(0) - centers.row(c)).norm(),
                                         (fit.model.means.row(1) - centers.row(c)).norm());
            CHECK(best < 0.1);
        }
        CHECK(fit.model.weights.sum() == Approx(1.0).epsilon(1e-9));
        for (const auto& t : fit.restarts) check_monotone(t);
        // Best restart by final log-likelihood.
        for (const auto& t : fit.restarts) CHECK(t.log_likelihood.back() <= fit.log_likelihood + 1e-12);
    }
    SUBCASE("variance floor") {
        Eigen::MatrixXd x = testing::random_matrix(30, 2, rng);
        x.col(1).setConstant(3.0);
        const auto fit = fit_gmm<double>(x, options(2));
        CHECK(fit.model.variances.minCoeff() >= kVarianceFloor);
    }
    SUBCASE("preconditions") {
        const Eigen::MatrixXd x = testing::random_matrix(3, 2, rng);
        CHECK_THROWS_AS(fit_gmm<double>(x, options(3)), Error);
    }
    SUBCASE("deterministic in the seed") {
        const Eigen::MatrixXd x = testing::random_matrix(60, 4, rng);
        const auto a = fit_gmm<double>(x, options(3, 9));
        const auto b = fit_gmm<double>(x, options(3, 9));
        CHECK(a.model.means == b.model.means);
        CHECK(a.log_likelihood == b.log_likelihood);
    }
    SUBCASE("float scalar") {
        const Eigen::MatrixXf x = testing::random_matrix(40, 2, rng).cast<float>();
        const auto fit = fit_gmm<float>(x, options(2));
        CHECK(fit.model.weights.sum() == Approx(1.0).epsilon(1e-5));
    }
}

TEST_CASE("moVMF fitting") {
    std::mt19937 rng(8);
    SUBCASE("points around e1") {
        Eigen::MatrixXd x = testing::random_matrix(100, 5, rng, 0.1);
        x.col(0).array() += 1.0;
        const auto fit = fit_movmf<double>(x, options(1));
        CHECK(fit.model.directions(0, 0) > 0.99);
        CHECK(fit.model.directions.row(0).norm() == Approx(1.0).epsilon(1e-9));
        CHECK(fit.model.concentrations[0] > 10.0);
    }
    SUBCASE("antipodal pairs have no resultant") {
        const Eigen::MatrixXd half = testing::random_matrix(20, 4, rng);
        Eigen::MatrixXd x(40, 4);
        x << half, -half;
        const auto fit = fit_movmf<double>(x, options(1));
        CHECK(fit.model.concentrations[0] < 1e-3);
    }
    SUBCASE("two directions") {
        Eigen::MatrixXd centers(2, 3);
        centers << 1, 0, 0, 0, 1, 0;
        const auto x = blobs(centers * 10.0, 100, 0.5, rng);
        const auto fit = fit_movmf<double>(x, options(2));
        for (Eigen::Index c = 0; c < 2; ++c) {
            CHECK(fit.model.directions.row(c).norm() == Approx(1.0).epsilon(1e-9));
            CHECK(fit.model.concentrations[c] <= kKappaMax);
        }
        const double best = std::max(fit.model.directions(0, 0), fit.model.directions(1, 0));
        CHECK(best > 0.99);
        for (const auto& t : fit.restarts) check_monotone(t);
        const auto g = responsibilities(fit.model, Eigen::MatrixXd(x));
        for (Eigen::Index i = 0; i < g.rows(); ++i) CHECK(g.row(i).sum() == Approx(1.0).epsilon(1e-9));
        // Scaling a point leaves its responsibilities unchanged.
        const Eigen::VectorXd p = x.row(3).transpose();
        CHECK((responsibilities(fit.model, p) - responsibilities(fit.model, Eigen::VectorXd(7.5 * p))).norm() < 1e-12);
    }
    SUBCASE("identical points") {
        Eigen::MatrixXd x(10, 3);
        x.rowwise() = Eigen::RowVector3d(0, 2, 0);
        const auto fit = fit_movmf<double>(x, options(2));
        CHECK(fit.model.concentrations[0] == kKappaMax);
        CHECK(fit.model.directions(0, 1) == Approx(1.0));
    }
    SUBCASE("zero rows are ignored") {
        Eigen::MatrixXd x = testing::random_matrix(30, 3, rng);
        x.row(4).setZero();
        CHECK_NOTHROW(fit_movmf<double>(x, options(2)));
    }
}

TEST_CASE("weighted fitting matches duplicated points") {
    std::mt19937 rng(12);
    const Eigen::MatrixXd x = testing::random_matrix(20, 2, rng);
    Eigen::VectorXd w = Eigen::VectorXd::Ones(20);
    w[0] = 3;
    Eigen::MatrixXd dup(22, 2);
    dup << x, x.row(0), x.row(0);
    const auto a = fit_gmm<double>(x, options(1), &w);
    const auto b = fit_gmm<double>(dup, options(1));
    CHECK((a.model.means - b.model.means).norm() < 1e-12);
    CHECK((a.model.variances - b.model.variances).norm() < 1e-12);
}

TEST_CASE("mixture files") {
    std::mt19937 rng(1);
    const Eigen::MatrixXd x = testing::random_matrix(40, 3, rng);
    const auto g = fit_gmm<double>(x, options(2)).model;
    const auto v = fit_movmf<double>(x, options(2)).model;
    testing::TempDir dir;
    save_mixture(dir / "g.fdv", g);
    save_mixture(dir / "v.fdv", v);
    CHECK(mixture_family(dir / "g.fdv") == MixtureFamily::gmm);
    CHECK(mixture_family(dir / "v.fdv") == MixtureFamily::vmf);
    const auto bytes = testing::read_file(dir / "g.fdv");
    CHECK(bytes.substr(0, 4) == "FDV1");
    CHECK(bytes[5] == 0x01);
    CHECK(testing::read_file(dir / "v.fdv")[5] == 0x02);
    const auto g2 = load_gmm(dir / "g.fdv");
    CHECK(g2.means == g.means);
    CHECK(g2.variances == g.variances);
    CHECK(g2.weights == g.weights);
    const auto v2 = load_vmf(dir / "v.fdv");
    CHECK(v2.directions == v.directions);
    CHECK(v2.concentrations == v.concentrations);
    CHECK_THROWS_AS(load_vmf(dir / "g.fdv"), Error);
}

TEST_CASE("a component that collapses twice is an error") {
    // A far point with negligible weight attracts a k-means++ seed; its
    // component keeps weight ~1e-13 before and after the reset.
    std::mt19937 rng(1);
    std::normal_distribution<double> n;
    Eigen::MatrixXd x(21, 2);
    for (int i = 0; i < 20; ++i) x.row(i) << n(rng), n(rng);
    x.row(20) << 1e6, 0;
    Eigen::VectorXd w = Eigen::VectorXd::Ones(21);
    w[20] = 1e-12;
    MixtureOptions o = options(2, 0, 1);
    CHECK_THROWS_WITH_AS(fit_gmm<double>(x, o, &w), doctest::Contains("collapsed again"), Error);
}
