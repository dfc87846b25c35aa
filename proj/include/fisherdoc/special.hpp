#pragma once

namespace fisherdoc {

/// log I_nu(x) for nu >= 0, x >= 0, finite far beyond the range where
/// I_nu itself over- or underflows (nu up to ~1e3, x up to ~1e6).
double log_bessel_i(double nu, double x);

/// Log of the von Mises-Fisher normalizer on the unit sphere in R^dim:
/// log C_d(k) = (d/2 - 1) log k - (d/2) log(2 pi) - log I_{d/2-1}(k).
/// At k = 0 this is minus the log surface area of the sphere.
double log_vmf_normalizer(int dim, double kappa);

/// Mean resultant length of a vMF with concentration `kappa`:
/// A_d(k) = I_{d/2}(k) / I_{d/2-1}(k).
double bessel_ratio(int dim, double kappa);

inline constexpr double kKappaFloor = 1e-6;
inline constexpr double kKappaMax = 1e5;

/// Closed-form concentration estimate from the mean resultant length,
/// k = (r d - r^3) / (1 - r^2), clamped to [kKappaFloor, kKappaMax]. Values
/// of r_bar at or above 1 return kKappaMax with a warning.
double estimate_kappa(double r_bar, int dim);

/// Same clamp, without the warning (used inside EM).
double estimate_kappa_quiet(double r_bar, int dim);

/// Newton iterations on A_d(k) = r_bar starting from `kappa`, clamped.
double refine_kappa(double r_bar, int dim, double kappa, int iterations = 5);

}  // namespace fisherdoc
