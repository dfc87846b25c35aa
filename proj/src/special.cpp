#include "fisherdoc/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "fisherdoc/common.hpp"

namespace fisherdoc {

namespace {

// Ascending series; used where x^2/4 <= nu + 1 so terms decay from the start.
double log_bessel_series(double nu, double x) {
    const double q = 0.25 * x * x;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 10000; ++k) {
        term *= q / (k * (nu + k));
        sum += term;
        if (term < 1e-17 * sum) break;
    }
    return nu * std::log(0.5 * x) - std::lgamma(nu + 1.0) + std::log(sum);
}

// Hankel expansion for x >> nu^2.
double log_bessel_large_x(double nu, double x) {
    const double mu = 4.0 * nu * nu;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 60; ++k) {
        const double odd = 2.0 * k - 1.0;
        const double next = -term * (mu - odd * odd) / (k * 8.0 * x);
        if (std::abs(next) >= std::abs(term)) break;
        term = next;
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return x - 0.5 * std::log(2.0 * std::numbers::pi * x) + std::log(sum);
}

// Debye uniform expansion in 1/nu, four correction terms.
double log_bessel_uniform(double nu, double x) {
    const double z = x / nu;
    const double root = std::sqrt(1.0 + z * z);
    const double t = 1.0 / root;
    const double eta = root + std::log(z / (1.0 + root));
    const double t2 = t * t;
    const double u1 = t * (3.0 - 5.0 * t2) / 24.0;
    const double u2 = t2 * (81.0 - 462.0 * t2 + 385.0 * t2 * t2) / 1152.0;
    const double u3 = t * t2 * (30375.0 - 369603.0 * t2 + 765765.0 * t2 * t2 - 425425.0 * t2 * t2 * t2) / 414720.0;
    const double t4 = t2 * t2;
    const double u4 = t4 *
                      (4465125.0 - 94121676.0 * t2 + 349922430.0 * t4 - 446185740.0 * t4 * t2 +
                       185910725.0 * t4 * t4) /
                      39813120.0;
    const double correction = 1.0 + u1 / nu + u2 / (nu * nu) + u3 / (nu * nu * nu) + u4 / (nu * nu * nu * nu);
    return nu * eta - 0.5 * std::log(2.0 * std::numbers::pi * nu) - 0.5 * std::log(root) + std::log(correction);
}

}  // namespace

double log_bessel_i(double nu, double x) {
    if (nu < 0.0 || x < 0.0 || std::isnan(nu) || std::isnan(x)) throw Error("log_bessel_i: arguments must be >= 0");
    if (x == 0.0) return nu == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
    if (0.25 * x * x <= nu + 1.0) return log_bessel_series(nu, x);
    if (x < 700.0) {
        const double v = std::cyl_bessel_i(nu, x);
        if (std::isfinite(v) && v > 1e-290) return std::log(v);
    }
    if (nu * nu < 0.25 * x) return log_bessel_large_x(nu, x);
    return log_bessel_uniform(nu, x);
}

double log_vmf_normalizer(int dim, double kappa) {
    if (dim < 2) throw Error("log_vmf_normalizer: dimension must be >= 2");
    const double nu = 0.5 * dim - 1.0;
    const double half = 0.5 * dim;
    if (kappa <= 0.0) {
        // 1 / surface area of the unit sphere: Gamma(d/2) / (2 pi^(d/2)).
        return std::lgamma(half) - std::log(2.0) - half * std::log(std::numbers::pi);
    }
    return nu * std::log(kappa) - half * std::log(2.0 * std::numbers::pi) - log_bessel_i(nu, kappa);
}

double bessel_ratio(int dim, double kappa) {
    if (kappa <= 0.0) return 0.0;
    const double nu = 0.5 * dim - 1.0;
    return std::exp(log_bessel_i(nu + 1.0, kappa) - log_bessel_i(nu, kappa));
}

double estimate_kappa_quiet(double r_bar, int dim) {
    if (r_bar >= 1.0) return kKappaMax;
    r_bar = std::max(0.0, r_bar);
    const double k = (r_bar * dim - r_bar * r_bar * r_bar) / (1.0 - r_bar * r_bar);
    return std::clamp(k, kKappaFloor, kKappaMax);
}

double estimate_kappa(double r_bar, int dim) {
    if (r_bar >= 1.0) warn("estimate_kappa: mean resultant length >= 1, clamping to the concentration cap");
    return estimate_kappa_quiet(r_bar, dim);
}

double refine_kappa(double r_bar, int dim, double kappa, int iterations) {
    if (r_bar >= 1.0) return kKappaMax;
    for (int i = 0; i < iterations; ++i) {
        const double a = bessel_ratio(dim, kappa);
        const double slope = 1.0 - a * a - (dim - 1.0) * a / kappa;
        if (!(slope > 0.0)) break;
        const double next = std::clamp(kappa - (a - r_bar) / slope, kKappaFloor, kKappaMax);
        if (std::abs(next - kappa) <= 1e-12 * kappa) {
            kappa = next;
            break;
        }
        kappa = next;
    }
    return kappa;
}

}  // namespace fisherdoc
