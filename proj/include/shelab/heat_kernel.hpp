#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace shelab {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Periodic heat kernel on [-pi, pi]:
///
///   G(t, x) = 1/(2 pi) + (1/pi) * sum_{k>=1} exp(-k^2 t) cos(k x)
///
/// evaluated by truncating the cosine series. The truncation index K is
/// chosen per t from the tail bound
///
///   (1/pi) * sum_{k>K} exp(-k^2 t) <= (1/pi) * exp(-K^2 t) / (1 - exp(-(2K+1) t)),
///
/// pushed below tail_tol, with a floor of min_modes. Small t needs many
/// modes; below min_time evaluation refuses instead of silently degrading
/// (the integrator steps spectrally and never asks for pointwise G there).
///
/// The kernel is even in x, 2 pi periodic, has unit spatial integral for
/// every t > 0, and satisfies the semigroup identity G(s) * G(t) = G(s+t).
class PeriodicHeatKernel {
 public:
  static constexpr double kMinTime = 1e-6;

  explicit PeriodicHeatKernel(double tail_tol = 1e-14, int min_modes = 16)
      : tail_tol_(tail_tol), min_modes_(min_modes) {
    if (!(tail_tol > 0.0) || min_modes < 1)
      throw std::invalid_argument("PeriodicHeatKernel: bad construction parameters");
  }

  double value(double t, double x) const {
    const int K = modes_for(t);
    double sum = 1.0 / kTwoPi;
    for (int k = 1; k <= K; ++k) {
      sum += std::exp(-static_cast<double>(k) * k * t) * std::cos(k * x) / kPi;
    }
    return sum;
  }

  /// Smallest truncation index (>= min_modes) meeting the tail bound at t.
  int modes_for(double t) const {
    if (!(t >= kMinTime))
      throw std::domain_error("PeriodicHeatKernel: t below the evaluation floor");
    int K = min_modes_;
    const double guess = std::sqrt(std::log(1.0 / (kPi * tail_tol_)) / t);
    if (guess > K) K = static_cast<int>(guess);
    while (tail_bound(K, t) >= tail_tol_) K += std::max(1, K / 16);
    return K;
  }

  double tail_bound(int K, double t) const {
    const double head = std::exp(-static_cast<double>(K) * K * t) / kPi;
    const double denom = 1.0 - std::exp(-(2.0 * K + 1.0) * t);
    return head / denom;
  }

  /// Midpoint quadrature of x -> G(t, x) over the domain; equals 1 up to
  /// truncation and quadrature error.
  double mass_quadrature(double t, int n_nodes = 2048) const {
    const double dx = kTwoPi / n_nodes;
    double sum = 0.0;
    for (int i = 0; i < n_nodes; ++i) {
      const double x = -kPi + (i + 0.5) * dx;
      sum += value(t, x);
    }
    return sum * dx;
  }

  /// Empirical constant C_G with G(t, x) <= C_G / sqrt(t) on [t_min, t_max].
  /// sqrt(t) G(t, 0) is increasing on (0, 1], so the max over a geometric
  /// t-grid is a valid envelope for the whole band.
  double sup_envelope_constant(double t_min, double t_max, int n_grid = 256) const {
    if (!(t_min > 0.0) || !(t_min < t_max) || !(t_max <= 1.0))
      throw std::invalid_argument("sup_envelope_constant: need 0 < t_min < t_max <= 1");
    const double lo = std::max(t_min, kMinTime);
    double c = 0.0;
    for (int i = 0; i < n_grid; ++i) {
      const double t =
          lo * std::pow(t_max / lo, static_cast<double>(i) / (n_grid - 1));
      c = std::max(c, std::sqrt(t) * value(t, 0.0));
    }
    return c;
  }

  /// |(G(s,.) * G(t,.))(x) - G(s+t, x)| by midpoint quadrature; test support.
  double semigroup_defect(double s, double t, double x, int n_nodes = 2048) const {
    const double dy = kTwoPi / n_nodes;
    double conv = 0.0;
    for (int i = 0; i < n_nodes; ++i) {
      const double y = -kPi + (i + 0.5) * dy;
      conv += value(s, x - y) * value(t, y);
    }
    conv *= dy;
    return std::abs(conv - value(s + t, x));
  }

  /// Integral of G(t, .)^2 over the domain, by Parseval:
  ///   1/(2 pi) + (1/pi) sum_k exp(-2 k^2 t).
  double squared_space_integral(double t) const {
    if (!(t >= kMinTime))
      throw std::domain_error("PeriodicHeatKernel: t below the evaluation floor");
    const int K = modes_for(t / 2.0 < kMinTime ? kMinTime : t / 2.0);
    double sum = 1.0 / kTwoPi;
    for (int k = 1; k <= K; ++k) {
      sum += std::exp(-2.0 * static_cast<double>(k) * k * t) / kPi;
    }
    return sum;
  }

  /// Variance of the stochastic convolution of a unit field at any point:
  ///   int_0^t int_D G(tau, z)^2 dz dtau
  ///     = t/(2 pi) + (1/pi) sum_k (1 - exp(-2 k^2 t)) / (2 k^2).
  /// The 1/(2k^2) series is summed against its exact limit pi^2/12 so the
  /// result carries no slow tail.
  static double isometry_variance(double t) {
    if (!(t > 0.0)) throw std::domain_error("isometry_variance: t must be positive");
    const double zeta2_half = kPi * kPi / 12.0;  // sum_k 1 / (2 k^2)
    double damped = 0.0;
    for (int k = 1;; ++k) {
      const double term = std::exp(-2.0 * static_cast<double>(k) * k * t) / (2.0 * k * k);
      damped += term;
      if (term < 1e-18 * (1.0 + damped)) break;
    }
    return t / kTwoPi + (zeta2_half - damped) / kPi;
  }

 private:
  double tail_tol_;
  int min_modes_;
};

}  // namespace shelab
