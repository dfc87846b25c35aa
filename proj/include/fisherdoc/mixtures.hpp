#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "fisherdoc/common.hpp"
#include "fisherdoc/special.hpp"

namespace fisherdoc {

inline constexpr double kVarianceFloor = 1e-6;
inline constexpr double kDegenerateWeight = 1e-8;

enum class KappaEstimator { banerjee, newton };

struct MixtureOptions {
    int components = 15;
    int restarts = 10;
    std::uint64_t seed = 0;
    /// Stop when |ll_new - ll_old| <= tolerance * |ll_old|.
    double tolerance = 1e-4;
    int max_iterations = 200;
    KappaEstimator kappa = KappaEstimator::banerjee;
    /// Lloyd sweeps of spherical k-means used to initialise the vMF fit.
    int init_iterations = 10;
};

/// Diagonal-covariance Gaussian mixture. Row i of `means`/`variances` belongs
/// to component i.
template <typename Scalar>
struct GaussianMixture {
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    Vector weights;
    Matrix means;
    Matrix variances;

    Eigen::Index components() const { return weights.size(); }
    Eigen::Index dim() const { return means.cols(); }
};

/// Mixture of von Mises-Fisher distributions on the unit sphere.
template <typename Scalar>
struct VmfMixture {
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    Vector weights;
    Matrix directions;  // unit rows
    Vector concentrations;

    Eigen::Index components() const { return weights.size(); }
    Eigen::Index dim() const { return directions.cols(); }
};

/// Per-restart EM record. `log_likelihood[i]` is the weighted data
/// log-likelihood of the parameters after i M-steps; entries listed in
/// `reinitialized` follow a component reset and are exempt from the ascent
/// guarantee.
struct FitTrace {
    std::vector<double> log_likelihood;
    std::vector<std::size_t> reinitialized;
    bool converged = false;
    bool failed = false;
};

template <typename Model>
struct MixtureFit {
    Model model;
    std::vector<FitTrace> restarts;
    std::size_t best = 0;
    double log_likelihood = -std::numeric_limits<double>::infinity();
};

namespace detail {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
// Non-deduced, so the scalar type always comes from the model argument.
template <typename Scalar>
using MatrixArg = std::type_identity_t<const Eigen::Ref<const MatrixX<Scalar>>&>;

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// Row-wise log-sum-exp; returns the per-row normalizer and turns `logp` into
// normalized responsibilities in place.
template <typename Scalar>
VectorX<Scalar> normalize_rows(MatrixX<Scalar>& logp) {
    VectorX<Scalar> lse(logp.rows());
    for (Eigen::Index i = 0; i < logp.rows(); ++i) {
        const Scalar m = logp.row(i).maxCoeff();
        if (!std::isfinite(static_cast<double>(m))) {
            logp.row(i).setConstant(Scalar(1) / static_cast<Scalar>(logp.cols()));
            lse[i] = m;
            continue;
        }
        logp.row(i) = (logp.row(i).array() - m).exp();
        const Scalar s = logp.row(i).sum();
        logp.row(i) /= s;
        lse[i] = m + std::log(s);
    }
    return lse;
}

template <typename Scalar>
VectorX<Scalar> unit_weights(const VectorX<Scalar>* weights, Eigen::Index n) {
    if (weights == nullptr) return VectorX<Scalar>::Ones(n);
    if (weights->size() != n) throw Error("mixture fit: weight count does not match the number of points");
    if ((weights->array() < 0).any()) throw Error("mixture fit: negative point weight");
    return *weights;
}

// Weighted k-means++ seeding. `distance(i, c)` is the squared distance (or
// cosine dissimilarity) between point i and chosen center c.
template <typename Distance>
std::vector<Eigen::Index> seed_plus_plus(const Eigen::Ref<const Eigen::VectorXd>& w, int k, Rng& rng, Distance distance) {
    const Eigen::Index n = w.size();
    std::vector<Eigen::Index> centers;
    auto pick = [&](const Eigen::VectorXd& mass) {
        const double total = mass.sum();
        if (!(total > 0.0)) return static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::uint64_t>(n)));
        double u = uniform01(rng) * total;
        for (Eigen::Index i = 0; i < n; ++i) {
            u -= mass[i];
            if (u < 0.0) return i;
        }
        return n - 1;
    };
    centers.push_back(pick(w));
    Eigen::VectorXd nearest(n);
    for (Eigen::Index i = 0; i < n; ++i) nearest[i] = distance(i, centers.back());
    while (static_cast<int>(centers.size()) < k) {
        const Eigen::VectorXd mass = w.cwiseProduct(nearest);
        centers.push_back(pick(mass));
        for (Eigen::Index i = 0; i < n; ++i) nearest[i] = std::min(nearest[i], distance(i, centers.back()));
    }
    return centers;
}

// Point with the lowest log-likelihood under the current model.
template <typename Scalar>
Eigen::Index worst_explained(const VectorX<Scalar>& lse, const VectorX<Scalar>& w) {
    Eigen::Index at = 0;
    Scalar low = std::numeric_limits<Scalar>::infinity();
    for (Eigen::Index i = 0; i < lse.size(); ++i) {
        if (w[i] > 0 && lse[i] < low) {
            low = lse[i];
            at = i;
        }
    }
    return at;
}

}  // namespace detail

// ------------------------------------------------------------------ GMM

/// log(w_i) + log N(x | mu_i, diag(var_i)) for every point (rows) and component.
template <typename Scalar>
detail::MatrixX<Scalar> log_joint(const GaussianMixture<Scalar>& gmm, detail::MatrixArg<Scalar> points) {
    const Eigen::Index n = points.rows();
    const Eigen::Index k = gmm.components();
    const Eigen::Index d = gmm.dim();
    detail::MatrixX<Scalar> out(n, k);
    for (Eigen::Index c = 0; c < k; ++c) {
        const auto inv = gmm.variances.row(c).array().inverse().eval();
        const Scalar constant = std::log(gmm.weights[c]) -
                                Scalar(0.5) * (static_cast<Scalar>(d * detail::kLog2Pi) + gmm.variances.row(c).array().log().sum());
        for (Eigen::Index i = 0; i < n; ++i) {
            const Scalar q = ((points.row(i) - gmm.means.row(c)).array().square() * inv).sum();
            out(i, c) = constant - Scalar(0.5) * q;
        }
    }
    return out;
}

/// Soft assignments gamma(i) = p(i | x), one row per point.
template <typename Scalar>
detail::MatrixX<Scalar> responsibilities(const GaussianMixture<Scalar>& gmm, detail::MatrixArg<Scalar> points) {
    auto logp = log_joint(gmm, points);
    detail::normalize_rows(logp);
    return logp;
}

/// Single point given as a column vector.
template <typename Scalar, typename Derived>
    requires(Derived::ColsAtCompileTime == 1)
detail::VectorX<Scalar> responsibilities(const GaussianMixture<Scalar>& gmm, const Eigen::MatrixBase<Derived>& x) {
    const detail::MatrixX<Scalar> row = x.transpose().template cast<Scalar>();
    return responsibilities(gmm, row).row(0).transpose();
}

template <typename Scalar>
double log_likelihood(const GaussianMixture<Scalar>& gmm, detail::MatrixArg<Scalar> points,
                      const detail::VectorX<Scalar>* weights = nullptr) {
    auto logp = log_joint(gmm, points);
    const auto lse = detail::normalize_rows(logp);
    const auto w = detail::unit_weights(weights, points.rows());
    return static_cast<double>(lse.dot(w));
}

namespace detail {

template <typename Scalar>
GaussianMixture<Scalar> gmm_from_hard_assignment(const MatrixX<Scalar>& x, const VectorX<Scalar>& w,
                                                 const std::vector<Eigen::Index>& seeds) {
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    const auto k = static_cast<Eigen::Index>(seeds.size());
    const Scalar total = w.sum();
    const VectorX<Scalar> global_mean = (x.transpose() * w) / total;
    VectorX<Scalar> global_var = ((x.rowwise() - global_mean.transpose()).array().square().matrix().transpose() * w) / total;
    global_var = global_var.cwiseMax(static_cast<Scalar>(kVarianceFloor));

    GaussianMixture<Scalar> g;
    g.weights = VectorX<Scalar>::Zero(k);
    g.means = MatrixX<Scalar>::Zero(k, d);
    g.variances = MatrixX<Scalar>::Zero(k, d);
    std::vector<Eigen::Index> label(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index best = 0;
        Scalar best_d = std::numeric_limits<Scalar>::infinity();
        for (Eigen::Index c = 0; c < k; ++c) {
            const Scalar dist = (x.row(i) - x.row(seeds[static_cast<std::size_t>(c)])).squaredNorm();
            if (dist < best_d) {
                best_d = dist;
                best = c;
            }
        }
        label[static_cast<std::size_t>(i)] = best;
        g.weights[best] += w[i];
        g.means.row(best) += w[i] * x.row(i);
    }
    for (Eigen::Index c = 0; c < k; ++c) {
        if (g.weights[c] > 0) g.means.row(c) /= g.weights[c];
        else g.means.row(c) = x.row(seeds[static_cast<std::size_t>(c)]);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto c = label[static_cast<std::size_t>(i)];
        g.variances.row(c) += w[i] * (x.row(i) - g.means.row(c)).array().square().matrix();
    }
    for (Eigen::Index c = 0; c < k; ++c) {
        if (g.weights[c] > 0) {
            g.variances.row(c) = (g.variances.row(c) / g.weights[c]).cwiseMax(static_cast<Scalar>(kVarianceFloor));
        } else {
            g.variances.row(c) = global_var.transpose();
            g.weights[c] = total / static_cast<Scalar>(n);
        }
    }
    g.weights /= g.weights.sum();
    return g;
}

template <typename Scalar>
FitTrace run_gmm_em(const MatrixX<Scalar>& x, const VectorX<Scalar>& w, const MixtureOptions& options, Rng& rng,
                    GaussianMixture<Scalar>& g) {
    const Eigen::Index k = options.components;
    const Eigen::Index d = x.cols();
    const Scalar total = w.sum();
    auto seeds = seed_plus_plus(w.template cast<double>(), options.components, rng, [&](Eigen::Index i, Eigen::Index c) {
        return static_cast<double>((x.row(i) - x.row(c)).squaredNorm());
    });
    g = gmm_from_hard_assignment(x, w, seeds);

    FitTrace trace;
    std::vector<bool> reset(static_cast<std::size_t>(k), false);
    MatrixX<Scalar> gamma = log_joint(g, x);
    VectorX<Scalar> lse = normalize_rows(gamma);
    trace.log_likelihood.push_back(static_cast<double>(lse.dot(w)));
    for (int it = 1; it <= options.max_iterations; ++it) {
        bool reinitialized = false;
        const MatrixX<Scalar> weighted = gamma.array().colwise() * w.array();
        const VectorX<Scalar> mass = weighted.colwise().sum().transpose();
        for (Eigen::Index c = 0; c < k; ++c) {
            if (mass[c] / total < static_cast<Scalar>(kDegenerateWeight)) {
                if (reset[static_cast<std::size_t>(c)]) {
                    throw Error("GMM: component " + std::to_string(c) + " collapsed again after reinitialization");
                }
                reset[static_cast<std::size_t>(c)] = true;
                reinitialized = true;
                g.means.row(c) = x.row(worst_explained(lse, w));
                const VectorX<Scalar> mean = (x.transpose() * w) / total;
                g.variances.row(c) = (((x.rowwise() - mean.transpose()).array().square().matrix().transpose() * w) / total)
                                         .cwiseMax(static_cast<Scalar>(kVarianceFloor))
                                         .transpose();
                g.weights[c] = Scalar(1) / static_cast<Scalar>(k);
                continue;
            }
            g.weights[c] = mass[c] / total;
            g.means.row(c) = (weighted.col(c).transpose() * x) / mass[c];
            VectorX<Scalar> var = VectorX<Scalar>::Zero(d);
            for (Eigen::Index i = 0; i < x.rows(); ++i) {
                var += weighted(i, c) * (x.row(i) - g.means.row(c)).array().square().matrix().transpose();
            }
            g.variances.row(c) = (var / mass[c]).cwiseMax(static_cast<Scalar>(kVarianceFloor)).transpose();
        }
        g.weights /= g.weights.sum();

        gamma = log_joint(g, x);
        lse = normalize_rows(gamma);
        const double ll = static_cast<double>(lse.dot(w));
        const double previous = trace.log_likelihood.back();
        trace.log_likelihood.push_back(ll);
        if (reinitialized) {
            trace.reinitialized.push_back(trace.log_likelihood.size() - 1);
            continue;
        }
        if (std::abs(ll - previous) <= options.tolerance * std::abs(previous)) {
            trace.converged = true;
            break;
        }
    }
    return trace;
}

template <typename Model, typename Run>
MixtureFit<Model> best_of_restarts(const MixtureOptions& options, const char* family, Run run) {
    if (options.restarts < 1) throw Error(std::string(family) + ": restarts must be >= 1");
    MixtureFit<Model> fit;
    std::string last_error;
    bool have_best = false;
    for (int r = 0; r < options.restarts; ++r) {
        Rng rng(options.seed + static_cast<std::uint64_t>(r));
        Model model;
        FitTrace trace;
        try {
            trace = run(rng, model);
        } catch (const Error& e) {
            last_error = e.what();
            warn(std::string(family) + " restart " + std::to_string(r) + " failed: " + e.what());
            trace.failed = true;
            fit.restarts.push_back(std::move(trace));
            continue;
        }
        const double ll = trace.log_likelihood.back();
        if (!have_best || ll > fit.log_likelihood) {
            have_best = true;
            fit.model = std::move(model);
            fit.log_likelihood = ll;
            fit.best = fit.restarts.size();
        }
        fit.restarts.push_back(std::move(trace));
    }
    if (std::all_of(fit.restarts.begin(), fit.restarts.end(), [](const FitTrace& t) { return t.failed; })) {
        throw Error(std::string(family) + ": every restart failed; last error: " + last_error);
    }
    return fit;
}

}  // namespace detail

/// EM for a diagonal Gaussian mixture: k-means++ seeding, best of
/// `options.restarts` runs by final log-likelihood. Restart r is seeded with
/// seed + r. Optional per-point weights turn the data into a
/// weighted sample (token-frequency weighting).
template <typename Scalar>
MixtureFit<GaussianMixture<Scalar>> fit_gmm(const detail::MatrixX<Scalar>& points, const MixtureOptions& options,
                                            const detail::VectorX<Scalar>* weights = nullptr) {
    if (options.components < 1) throw Error("GMM: need at least one component");
    if (points.rows() <= options.components) {
        throw Error("GMM: need more points (" + std::to_string(points.rows()) + ") than components (" +
                    std::to_string(options.components) + ")");
    }
    const auto w = detail::unit_weights(weights, points.rows());
    return detail::best_of_restarts<GaussianMixture<Scalar>>(options, "GMM", [&](Rng& rng, GaussianMixture<Scalar>& g) {
        return detail::run_gmm_em(points, w, options, rng, g);
    });
}

// ------------------------------------------------------------------ moVMF

template <typename Scalar>
detail::MatrixX<Scalar> normalize_rows_l2(const detail::MatrixX<Scalar>& points) {
    detail::MatrixX<Scalar> out = points;
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        const Scalar n = out.row(i).norm();
        if (n > 0) out.row(i) /= n;
    }
    return out;
}

/// log(w_i) + log C_d(kappa_i) + kappa_i mu_i.x for unit rows of `points`.
template <typename Scalar>
detail::MatrixX<Scalar> log_joint(const VmfMixture<Scalar>& vmf, detail::MatrixArg<Scalar> points) {
    const auto d = static_cast<int>(vmf.dim());
    detail::MatrixX<Scalar> out = points * vmf.directions.transpose();
    for (Eigen::Index c = 0; c < vmf.components(); ++c) {
        const double kappa = static_cast<double>(vmf.concentrations[c]);
        const auto constant = static_cast<Scalar>(std::log(static_cast<double>(vmf.weights[c])) + log_vmf_normalizer(d, kappa));
        out.col(c) = (out.col(c).array() * vmf.concentrations[c] + constant).matrix();
    }
    return out;
}

/// Soft assignments; rows are L2-normalized first, so any positive rescaling
/// of a point leaves its responsibilities unchanged.
template <typename Scalar>
detail::MatrixX<Scalar> responsibilities(const VmfMixture<Scalar>& vmf, detail::MatrixArg<Scalar> points) {
    auto logp = log_joint(vmf, normalize_rows_l2<Scalar>(points));
    detail::normalize_rows(logp);
    return logp;
}

/// Single point given as a column vector.
template <typename Scalar, typename Derived>
    requires(Derived::ColsAtCompileTime == 1)
detail::VectorX<Scalar> responsibilities(const VmfMixture<Scalar>& vmf, const Eigen::MatrixBase<Derived>& x) {
    const detail::MatrixX<Scalar> row = x.transpose().template cast<Scalar>();
    return responsibilities(vmf, row).row(0).transpose();
}

template <typename Scalar>
double log_likelihood(const VmfMixture<Scalar>& vmf, detail::MatrixArg<Scalar> points,
                      const detail::VectorX<Scalar>* weights = nullptr) {
    auto logp = log_joint(vmf, normalize_rows_l2<Scalar>(points));
    const auto lse = detail::normalize_rows(logp);
    const auto w = detail::unit_weights(weights, points.rows());
    return static_cast<double>(lse.dot(w));
}

namespace detail {

inline double kappa_update(double r_bar, int d, KappaEstimator estimator) {
    const double k = estimate_kappa_quiet(r_bar, d);
    return estimator == KappaEstimator::newton ? refine_kappa(r_bar, d, k) : k;
}

// Expected complete-data log-likelihood of one component as a function of
// kappa, per unit mass: log C_d(kappa) + kappa * r_bar.
inline double kappa_objective(double kappa, double r_bar, int d) { return log_vmf_normalizer(d, kappa) + kappa * r_bar; }

template <typename Scalar>
VmfMixture<Scalar> spherical_kmeans_init(const MatrixX<Scalar>& x, const VectorX<Scalar>& w, const MixtureOptions& options,
                                         Rng& rng) {
    const Eigen::Index k = options.components;
    const Eigen::Index n = x.rows();
    const int d = static_cast<int>(x.cols());
    const auto seeds = seed_plus_plus(w.template cast<double>(), options.components, rng, [&](Eigen::Index i, Eigen::Index c) {
        return std::max(0.0, 1.0 - static_cast<double>(x.row(i).dot(x.row(c))));
    });
    MatrixX<Scalar> mu(k, x.cols());
    for (Eigen::Index c = 0; c < k; ++c) mu.row(c) = x.row(seeds[static_cast<std::size_t>(c)]);

    std::vector<Eigen::Index> label(static_cast<std::size_t>(n), 0);
    MatrixX<Scalar> sums;
    VectorX<Scalar> mass;
    for (int it = 0; it < std::max(1, options.init_iterations); ++it) {
        const MatrixX<Scalar> cos = x * mu.transpose();
        sums = MatrixX<Scalar>::Zero(k, x.cols());
        mass = VectorX<Scalar>::Zero(k);
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::Index best = 0;
            cos.row(i).maxCoeff(&best);
            label[static_cast<std::size_t>(i)] = best;
            sums.row(best) += w[i] * x.row(i);
            mass[best] += w[i];
        }
        for (Eigen::Index c = 0; c < k; ++c) {
            const Scalar norm = sums.row(c).norm();
            if (mass[c] > 0 && norm > 0) mu.row(c) = sums.row(c) / norm;
        }
    }
    VmfMixture<Scalar> v;
    v.directions = mu;
    v.weights = VectorX<Scalar>(k);
    v.concentrations = VectorX<Scalar>(k);
    const Scalar total = w.sum();
    for (Eigen::Index c = 0; c < k; ++c) {
        const double m = static_cast<double>(mass[c]);
        const double r_bar = m > 0 ? std::min(1.0, static_cast<double>(sums.row(c).norm()) / m) : 0.0;
        v.concentrations[c] = static_cast<Scalar>(kappa_update(r_bar, d, options.kappa));
        v.weights[c] = m > 0 ? static_cast<Scalar>(m) / total : total / static_cast<Scalar>(n);
    }
    v.weights /= v.weights.sum();
    return v;
}

template <typename Scalar>
FitTrace run_vmf_em(const MatrixX<Scalar>& x, const VectorX<Scalar>& w, const MixtureOptions& options, Rng& rng,
                    VmfMixture<Scalar>& v) {
    const Eigen::Index k = options.components;
    const int d = static_cast<int>(x.cols());
    const Scalar total = w.sum();
    v = spherical_kmeans_init(x, w, options, rng);

    FitTrace trace;
    std::vector<bool> reset(static_cast<std::size_t>(k), false);
    MatrixX<Scalar> gamma = log_joint(v, x);
    VectorX<Scalar> lse = normalize_rows(gamma);
    trace.log_likelihood.push_back(static_cast<double>(lse.dot(w)));
    for (int it = 1; it <= options.max_iterations; ++it) {
        bool reinitialized = false;
        const MatrixX<Scalar> weighted = gamma.array().colwise() * w.array();
        const VectorX<Scalar> mass = weighted.colwise().sum().transpose();
        const MatrixX<Scalar> resultant = weighted.transpose() * x;
        for (Eigen::Index c = 0; c < k; ++c) {
            if (mass[c] / total < static_cast<Scalar>(kDegenerateWeight)) {
                if (reset[static_cast<std::size_t>(c)]) {
                    throw Error("moVMF: component " + std::to_string(c) + " collapsed again after reinitialization");
                }
                reset[static_cast<std::size_t>(c)] = true;
                reinitialized = true;
                v.directions.row(c) = x.row(worst_explained(lse, w));
                v.concentrations[c] = v.concentrations.mean();
                v.weights[c] = Scalar(1) / static_cast<Scalar>(k);
                continue;
            }
            v.weights[c] = mass[c] / total;
            const Scalar norm = resultant.row(c).norm();
            if (norm > 0) v.directions.row(c) = resultant.row(c) / norm;
            const double r_bar = std::min(1.0, static_cast<double>(norm / mass[c]));
            // Generalized M-step: the closed-form kappa is only kept when it
            // does not lower the component's expected log-likelihood.
            const double old_kappa = static_cast<double>(v.concentrations[c]);
            const double new_kappa = kappa_update(r_bar, d, options.kappa);
            if (kappa_objective(new_kappa, r_bar, d) >= kappa_objective(old_kappa, r_bar, d)) {
                v.concentrations[c] = static_cast<Scalar>(new_kappa);
            }
        }
        v.weights /= v.weights.sum();

        gamma = log_joint(v, x);
        lse = normalize_rows(gamma);
        const double ll = static_cast<double>(lse.dot(w));
        const double previous = trace.log_likelihood.back();
        trace.log_likelihood.push_back(ll);
        if (reinitialized) {
            trace.reinitialized.push_back(trace.log_likelihood.size() - 1);
            continue;
        }
        if (std::abs(ll - previous) <= options.tolerance * std::abs(previous)) {
            trace.converged = true;
            break;
        }
    }
    return trace;
}

}  // namespace detail

/// EM for a mixture of von Mises-Fisher distributions. Rows are projected to
/// the unit sphere first and zero rows are dropped (with their weights).
/// Initialised by spherical k-means from k-means++ seeds; restart and
/// convergence rules as in fit_gmm. If every point has the same direction
/// the components collapse onto it with concentration kKappaMax.
template <typename Scalar>
MixtureFit<VmfMixture<Scalar>> fit_movmf(const detail::MatrixX<Scalar>& points, const MixtureOptions& options,
                                         const detail::VectorX<Scalar>* weights = nullptr) {
    if (options.components < 1) throw Error("moVMF: need at least one component");
    if (points.cols() < 2) throw Error("moVMF: dimension must be >= 2");
    const auto all_w = detail::unit_weights(weights, points.rows());
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        if (points.row(i).norm() > 0) keep.push_back(i);
    }
    if (static_cast<Eigen::Index>(keep.size()) <= options.components) {
        throw Error("moVMF: need more non-zero points (" + std::to_string(keep.size()) + ") than components (" +
                    std::to_string(options.components) + ")");
    }
    detail::MatrixX<Scalar> x(static_cast<Eigen::Index>(keep.size()), points.cols());
    detail::VectorX<Scalar> w(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t r = 0; r < keep.size(); ++r) {
        x.row(static_cast<Eigen::Index>(r)) = points.row(keep[r]) / points.row(keep[r]).norm();
        w[static_cast<Eigen::Index>(r)] = all_w[keep[r]];
    }

    bool identical = true;
    for (Eigen::Index i = 1; i < x.rows() && identical; ++i) {
        identical = 1.0 - static_cast<double>(x.row(i).dot(x.row(0))) < 1e-12;
    }
    if (identical) {
        warn("moVMF: all points share one direction; concentration set to the cap");
        MixtureFit<VmfMixture<Scalar>> fit;
        const Eigen::Index k = options.components;
        fit.model.weights = detail::VectorX<Scalar>::Constant(k, Scalar(1) / static_cast<Scalar>(k));
        fit.model.directions = x.row(0).replicate(k, 1);
        fit.model.concentrations = detail::VectorX<Scalar>::Constant(k, static_cast<Scalar>(kKappaMax));
        fit.log_likelihood = log_likelihood(fit.model, x, &w);
        fit.restarts.push_back(FitTrace{{fit.log_likelihood}, {}, true, false});
        return fit;
    }
    return detail::best_of_restarts<VmfMixture<Scalar>>(options, "moVMF", [&](Rng& rng, VmfMixture<Scalar>& v) {
        return detail::run_vmf_em(x, w, options, rng, v);
    });
}

// ------------------------------------------------------------------ I/O

void save_mixture(const std::filesystem::path& path, const GaussianMixture<double>& gmm);
void save_mixture(const std::filesystem::path& path, const VmfMixture<double>& vmf);

enum class MixtureFamily { gmm, vmf };

/// Reads the family tag of a saved mixture.
MixtureFamily mixture_family(const std::filesystem::path& path);
GaussianMixture<double> load_gmm(const std::filesystem::path& path);
VmfMixture<double> load_vmf(const std::filesystem::path& path);

}  // namespace fisherdoc
