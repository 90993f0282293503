#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>

#include "shelab/coefficients.hpp"
#include "shelab/grid.hpp"
#include "shelab/stats.hpp"

namespace shelab {

/// Norms of a field snapshot. mass is the L1 norm (midpoint quadrature),
/// sup the cell maximum, lbeta / l2gamma the L^beta and L^(2 gamma) norms.
struct NormSnapshot {
  double mass = 0.0;
  double sup = 0.0;
  double lbeta = 0.0;
  double l2gamma = 0.0;
};

template <class F>
double integral_of(const Field& u, F f) {
  double s = 0.0;
  for (double v : u.values) s += f(v);
  return s * u.grid.dx;
}

inline double mass_of(const Field& u) {
  return integral_of(u, [](double v) { return v; });
}

inline double sup_of(const Field& u) { return u.max_value(); }

inline double drift_integral(const Field& u, const Coefficients& c) {
  return integral_of(u, [&](double v) { return c.drift(v); });
}

inline double diffusion_sq_integral(const Field& u, const Coefficients& c) {
  return integral_of(u, [&](double v) {
    const double s = c.diffusion(v);
    return s * s;
  });
}

inline double power_integral(const Field& u, double p) {
  return integral_of(u, [p](double v) { return v == 0.0 ? 0.0 : std::pow(v, p); });
}

inline NormSnapshot measure_norms(const Field& u, const Coefficients& c) {
  NormSnapshot n;
  n.mass = mass_of(u);
  n.sup = sup_of(u);
  if (c.beta > 0.0) n.lbeta = std::pow(power_integral(u, c.beta), 1.0 / c.beta);
  if (c.gamma > 0.0) n.l2gamma = std::pow(power_integral(u, 2.0 * c.gamma), 0.5 / c.gamma);
  return n;
}

/// Saturating potential applied to the mass: V(m) = 1 - m^(-eps). Lives in
/// [0, 1) for m >= 1 and tends to 1 as the mass diverges.
inline double potential_value(double mass, double eps) {
  if (!(mass > 0.0)) throw std::domain_error("potential_value: mass must be positive");
  if (!(eps > 0.0)) throw std::invalid_argument("potential_value: eps must be positive");
  return 1.0 - std::pow(mass, -eps);
}

struct PotentialTracker {
  double epsilon;
  double value = 0.0;
};

inline PotentialTracker potential_update(PotentialTracker pt, double new_mass) {
  pt.value = potential_value(new_mass, pt.epsilon);
  return pt;
}

/// Drift rate of the potential V(mass) along the dynamics:
///
///   A = eps * int drift(u) dx / mass^(eps+1)
///       - eps (eps+1) / 2 * int diffusion(u)^2 dx / mass^(eps+2).
///
/// Positive A means the mass potential trends upward.
inline double potential_drift_rate(const Field& u, const Coefficients& c, double eps) {
  const double m = mass_of(u);
  if (!(m > 0.0)) throw std::domain_error("potential_drift_rate: mass must be positive");
  if (!(eps > 0.0)) throw std::invalid_argument("potential_drift_rate: eps must be positive");
  const double grow = drift_integral(u, c);
  const double qv = diffusion_sq_integral(u, c);
  return eps * grow / std::pow(m, eps + 1.0) -
         0.5 * eps * (eps + 1.0) * qv / std::pow(m, eps + 2.0);
}

inline void require_holder_regime(const Coefficients& c) {
  if (!(c.beta > 1.0) || !(2.0 * c.gamma <= c.beta))
    throw std::invalid_argument("drift floor: requires beta > 1 and 2 gamma <= beta");
}

/// Largest admissible floor: delta must lie in (0, (2 pi)^(1-beta) * eps).
inline double drift_floor_delta_limit(const Coefficients& c, double eps) {
  return std::pow(kTwoPi, 1.0 - c.beta) * eps;
}

/// Closed-form lower envelope for the potential drift rate in terms of the
/// mass alone (valid for beta > 1, 2 gamma <= beta, u >= 0):
///
///   A >= (2 pi)^(1-beta) eps (1 - (2 pi)^(beta-2 gamma) (eps+1) / (2 m^(beta+1-2 gamma)))
///        * m^(beta-eps-1).
inline double potential_drift_envelope(double mass, const Coefficients& c, double eps) {
  require_holder_regime(c);
  if (!(mass > 0.0)) throw std::domain_error("potential_drift_envelope: mass must be positive");
  const double bracket =
      1.0 - std::pow(kTwoPi, c.beta - 2.0 * c.gamma) * (eps + 1.0) /
                (2.0 * std::pow(mass, c.beta + 1.0 - 2.0 * c.gamma));
  return std::pow(kTwoPi, 1.0 - c.beta) * eps * bracket * std::pow(mass, c.beta - eps - 1.0);
}

/// Smallest mass beyond which the envelope guarantees A >= delta (with
/// eps = beta - 1, so the trailing mass power is 1). Solves the bracket
/// inequality explicitly.
inline double drift_floor_threshold(const Coefficients& c, double eps, double delta) {
  require_holder_regime(c);
  if (std::abs(eps - (c.beta - 1.0)) > 1e-12)
    throw std::invalid_argument("drift_floor_threshold: requires eps = beta - 1");
  const double delta_max = drift_floor_delta_limit(c, eps);
  if (!(delta > 0.0) || !(delta < delta_max))
    throw std::invalid_argument("drift_floor_threshold: delta outside (0, (2pi)^(1-beta) eps)");
  const double headroom = 1.0 - delta * std::pow(kTwoPi, c.beta - 1.0) / eps;
  const double rhs = std::pow(kTwoPi, c.beta - 2.0 * c.gamma) * (eps + 1.0) / (2.0 * headroom);
  return std::pow(rhs, 1.0 / (c.beta + 1.0 - 2.0 * c.gamma));
}

struct DriftFloorCheck {
  double mass = 0.0;
  double drift_rate = 0.0;      // A evaluated on the field
  double envelope = 0.0;        // mass-only lower bound for A
  double threshold_mass = 0.0;  // floor applies when mass >= threshold
  bool envelope_holds = false;  // A >= envelope (up to roundoff)
  bool applies = false;         // mass >= threshold_mass
  bool ok = false;              // !applies or A >= delta
  double margin = 0.0;          // A - delta
};

inline DriftFloorCheck check_drift_floor(const Field& u, const Coefficients& c, double eps,
                                         double delta) {
  DriftFloorCheck r;
  r.threshold_mass = drift_floor_threshold(c, eps, delta);
  r.mass = mass_of(u);
  r.drift_rate = potential_drift_rate(u, c, eps);
  r.envelope = potential_drift_envelope(r.mass, c, eps);
  const double tol = 1e-12 * (1.0 + std::abs(r.drift_rate));
  r.envelope_holds = r.drift_rate >= r.envelope - tol;
  r.applies = r.mass >= r.threshold_mass;
  r.margin = r.drift_rate - delta;
  r.ok = !r.applies || r.margin >= -tol;
  return r;
}

/// The two Holder comparisons between the quadratic variation density, the
/// reaction integral, and the mass, reported as raw quantities:
///
///   sigma_sq       = int diffusion(u)^2 dx
///   sigma_sq_bound = (2 pi)^((beta-2 gamma)/beta) * (int u^beta dx)^(2 gamma / beta)
///   reaction_lhs   = (2 pi)^(beta-1) * int u^beta dx
///   mass_pow       = mass^beta
///
/// For beta > 1 and 2 gamma <= beta the inequalities sigma_sq <= sigma_sq_bound
/// and reaction_lhs >= mass_pow hold (with equality in the second for constant
/// fields); outside that regime they are reported but not asserted.
struct HolderChain {
  double sigma_sq = 0.0;
  double sigma_sq_bound = 0.0;
  double reaction_lhs = 0.0;
  double mass_pow = 0.0;
  bool asserted = false;
  bool holds = true;
};

inline HolderChain holder_chain(const Field& u, const Coefficients& c) {
  HolderChain h;
  h.sigma_sq = diffusion_sq_integral(u, c);
  const double upow = power_integral(u, c.beta);
  h.sigma_sq_bound = std::pow(kTwoPi, (c.beta - 2.0 * c.gamma) / c.beta) *
                     std::pow(upow, 2.0 * c.gamma / c.beta);
  h.reaction_lhs = std::pow(kTwoPi, c.beta - 1.0) * upow;
  h.mass_pow = std::pow(mass_of(u), c.beta);
  h.asserted = c.beta > 1.0 && 2.0 * c.gamma <= c.beta;
  if (h.asserted) {
    const double tol1 = 1e-12 * (1.0 + h.sigma_sq_bound);
    const double tol2 = 1e-12 * (1.0 + h.reaction_lhs);
    h.holds = h.sigma_sq <= h.sigma_sq_bound + tol1 && h.reaction_lhs >= h.mass_pow - tol2;
  }
  return h;
}

enum class StopReason { MassUpper, MassLower, SupLimit };

inline const char* stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::MassUpper: return "mass_upper";
    case StopReason::MassLower: return "mass_lower";
    case StopReason::SupLimit: return "sup_limit";
  }
  return "unknown";
}

struct StopHit {
  double time = 0.0;
  StopReason reason = StopReason::MassUpper;
};

/// First-hitting rules checked at every probe time. hit times are accurate
/// to one time step by construction.
struct StoppingRule {
  enum class Kind { MassExceeds, Corridor, SupExceeds };
  Kind kind = Kind::MassExceeds;
  double mass_limit = 0.0;   // MassExceeds: fire when mass > mass_limit
  double mass_low = 0.0;     // Corridor: fire when mass <= mass_low ...
  double mass_high = 0.0;    //   ... or mass > mass_high ...
  double sup_high = 0.0;     //   ... or sup > sup_high
  double sup_limit = 0.0;    // SupExceeds: fire when sup > sup_limit

  static StoppingRule mass_exceeds(double m) {
    StoppingRule r;
    r.kind = Kind::MassExceeds;
    r.mass_limit = m;
    return r;
  }
  static StoppingRule corridor(double low, double high, double sup) {
    StoppingRule r;
    r.kind = Kind::Corridor;
    r.mass_low = low;
    r.mass_high = high;
    r.sup_high = sup;
    return r;
  }
  static StoppingRule sup_exceeds(double s) {
    StoppingRule r;
    r.kind = Kind::SupExceeds;
    r.sup_limit = s;
    return r;
  }

  std::optional<StopReason> evaluate(double mass, double sup) const {
    switch (kind) {
      case Kind::MassExceeds:
        if (mass > mass_limit) return StopReason::MassUpper;
        return std::nullopt;
      case Kind::Corridor:
        if (mass > mass_high) return StopReason::MassUpper;
        if (mass <= mass_low) return StopReason::MassLower;
        if (sup > sup_high) return StopReason::SupLimit;
        return std::nullopt;
      case Kind::SupExceeds:
        if (sup > sup_limit) return StopReason::SupLimit;
        return std::nullopt;
    }
    return std::nullopt;
  }
};

/// Ensemble check of the stopped-accumulator budgets: with paths stopped at
/// the first time the mass exceeds M, the expected accumulated reaction
/// integral is at most M and the expected accumulated quadratic variation is
/// at most M^2. Verified up to 3 standard errors.
struct BudgetCheck {
  double M = 0.0;
  MeanAndError drift;
  MeanAndError qv;
  bool drift_within = false;
  bool qv_within = false;
  bool pass() const { return drift_within && qv_within; }
};

inline BudgetCheck budget_check(std::span<const double> drift_integrals,
                                std::span<const double> qv_integrals, double M) {
  if (drift_integrals.size() != qv_integrals.size() || drift_integrals.empty())
    throw std::invalid_argument("budget_check: mismatched or empty accumulators");
  BudgetCheck b;
  b.M = M;
  b.drift = mean_and_se(drift_integrals);
  b.qv = mean_and_se(qv_integrals);
  b.drift_within = b.drift.mean <= M + 3.0 * b.drift.se;
  b.qv_within = b.qv.mean <= M * M + 3.0 * b.qv.se;
  return b;
}

}  // namespace shelab
