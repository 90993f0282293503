#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace shelab {

/// Regions of the (beta, gamma) exponent plane. A and B are the regimes where
/// explosion happens with positive probability via the L1-drift and tripling
/// mechanisms respectively; C and E are non-explosive, D is the noise-driven
/// explosive half-plane, F is open. Points on bounding curves that no region
/// claims are labeled Boundary.
enum class Regime { A, B, C, D, E, F, Boundary, Other };

inline const char* regime_name(Regime r) {
  switch (r) {
    case Regime::A: return "A";
    case Regime::B: return "B";
    case Regime::C: return "C";
    case Regime::D: return "D";
    case Regime::E: return "E";
    case Regime::F: return "F";
    case Regime::Boundary: return "Boundary";
    case Regime::Other: return "Other";
  }
  return "Other";
}

/// Power-law reaction and noise coefficients for the stochastic heat equation:
///   drift(u)     = u^beta            (beta > 1),   min(u, u^beta) for beta < 1
///   diffusion(u) = u^gamma           (gamma >= 1), min(u, u^gamma) for gamma < 1
/// The small-u minimum keeps the functions locally Lipschitz without changing
/// their growth at infinity. Both vanish at 0, so 0 is an absorbing state and
/// nonnegative data stays nonnegative.
///
/// Solutions live on u >= 0; drift/diffusion reject negative arguments. The
/// cutoff variants accept any real u (they are the globally-Lipschitz frozen
/// versions used by the integrator) and extend the base functions by zero on
/// u < 0, where a real power is not defined for fractional exponents.
struct Coefficients {
  double beta;
  double gamma;

  Coefficients(double beta_, double gamma_) : beta(beta_), gamma(gamma_) {
    if (!(beta >= 0.0) || !(gamma >= 0.0))
      throw std::invalid_argument("Coefficients: exponents must be finite and nonnegative");
  }

  double drift(double u) const {
    if (u < 0.0) throw std::domain_error("Coefficients::drift: negative argument");
    if (u == 0.0) return 0.0;
    if (beta == 1.0) return u;
    const double p = power(u, beta);
    return beta > 1.0 ? p : std::min(u, p);
  }

  double diffusion(double u) const {
    if (u < 0.0) throw std::domain_error("Coefficients::diffusion: negative argument");
    if (u == 0.0) return 0.0;
    const double p = power(u, gamma);
    return gamma >= 1.0 ? p : std::min(u, p);
  }

  double drift_cutoff(double level, double u) const {
    if (!(level >= 1.0)) throw std::invalid_argument("drift_cutoff: level must be >= 1");
    return zero_extended_drift(clamp_to(level, u));
  }

  double diffusion_cutoff(double level, double u) const {
    if (!(level >= 1.0)) throw std::invalid_argument("diffusion_cutoff: level must be >= 1");
    return zero_extended_diffusion(clamp_to(level, u));
  }

  /// Upper bound for drift'(u) on [0, u_max]; used by the adaptive step guard.
  double drift_slope_bound(double u_max) const {
    if (beta <= 1.0) return 1.0;
    if (u_max <= 0.0) return 0.0;
    return beta * std::pow(u_max, beta - 1.0);
  }

 private:
  // std::pow dominates the stepping loops; short-circuit the common exponents.
  static double power(double u, double e) {
    if (e == 2.0) return u * u;
    if (e == 3.0) return u * u * u;
    if (e == 1.0) return u;
    if (e == 0.5) return std::sqrt(u);
    return std::pow(u, e);
  }

  static double clamp_to(double level, double u) {
    if (u > level) return level;
    if (u < -level) return -level;
    return u;
  }
  double zero_extended_drift(double u) const { return u <= 0.0 ? 0.0 : drift(u); }
  double zero_extended_diffusion(double u) const { return u <= 0.0 ? 0.0 : diffusion(u); }
};

/// Deterministic region lookup. Brackets follow the regime map exactly:
///   A: beta > 1,        0 < gamma <= beta/2
///   B: 1 < beta < 3,    beta/2 < gamma < (beta+3)/4
///   C: 0 <= beta <= 1,  0 <= gamma <= 3/2
///   D: beta >= 0,       gamma > 3/2
///   E: 1 < beta < 2,    (1+beta)/2 < gamma <= 3/2
///   F: 1 < beta < 3,    (beta+3)/4 <= gamma <= min((1+beta)/2, 3/2)
/// Overlaps are resolved in that priority order (A wins over D for beta > 3,
/// gamma in (3/2, beta/2]). The one line the brackets leave unclaimed,
/// {gamma = 0, beta > 1}, maps to Boundary.
inline Regime classify(const Coefficients& c) {
  const double b = c.beta;
  const double g = c.gamma;
  if (b > 1.0 && g > 0.0 && g <= b / 2.0) return Regime::A;
  if (b > 1.0 && b < 3.0 && g > b / 2.0 && g < (b + 3.0) / 4.0) return Regime::B;
  if (b >= 0.0 && b <= 1.0 && g >= 0.0 && g <= 1.5) return Regime::C;
  if (g > 1.5) return Regime::D;
  if (b > 1.0 && b < 2.0 && g > (1.0 + b) / 2.0 && g <= 1.5) return Regime::E;
  if (b > 1.0 && b < 3.0 && g >= (b + 3.0) / 4.0 && g <= std::min((1.0 + b) / 2.0, 1.5))
    return Regime::F;
  if (g == 0.0 && b > 1.0) return Regime::Boundary;
  return Regime::Other;
}

}  // namespace shelab
