#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "shelab/convolution.hpp"
#include "shelab/experiments.hpp"
#include "shelab/functionals.hpp"
#include "shelab/heat_kernel.hpp"
#include "shelab/integrator.hpp"
#include "shelab/noise.hpp"

namespace shelab {

inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return std::string(buf);
}

struct VerificationCheck {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  std::string relation;  // "<=" or ">="
  bool pass = false;
};

struct VerificationSuite {
  std::string suite;
  std::vector<VerificationCheck> checks;
  bool pass = true;

  void add_le(const std::string& name, double value, double bound) {
    const bool ok = value <= bound;
    checks.push_back({name, value, bound, "<=", ok});
    pass = pass && ok;
  }
  void add_ge(const std::string& name, double value, double bound) {
    const bool ok = value >= bound;
    checks.push_back({name, value, bound, ">=", ok});
    pass = pass && ok;
  }
};

/// Kernel identities: unit mass, semigroup composition, symmetry, long-time
/// flattening, the t^(-1/2) sup envelope, near-nonnegativity of the truncated
/// series, and monotone smoothing.
inline VerificationSuite verify_kernel_suite() {
  VerificationSuite s;
  s.suite = "kernel";
  const PeriodicHeatKernel ke;
  for (double t : {0.01, 0.1, 1.0})
    s.add_le("mass_defect_t=" + format_number(t), std::abs(ke.mass_quadrature(t) - 1.0), 1e-10);
  s.add_le("semigroup_defect_0.1_0.1", ke.semigroup_defect(0.1, 0.1, 0.0), 1e-8);
  s.add_le("semigroup_defect_0.5_0.5", ke.semigroup_defect(0.5, 0.5, kPi / 2.0), 1e-8);
  double sym = 0.0;
  for (double t : {0.001, 0.05, 0.7})
    for (int i = 0; i <= 20; ++i) {
      const double x = -kPi + kTwoPi * i / 20.0;
      sym = std::max(sym, std::abs(ke.value(t, x) - ke.value(t, -x)));
    }
  s.add_le("evenness_defect", sym, 1e-13);
  double flat = 0.0;
  for (int i = 0; i <= 8; ++i)
    flat = std::max(flat, std::abs(ke.value(50.0, -kPi + i * kPi / 4.0) - 1.0 / kTwoPi));
  s.add_le("long_time_flatness", flat, 1e-15);

  const double c_g = ke.sup_envelope_constant(1e-4, 1.0);
  s.add_ge("envelope_constant", c_g, 1.0 / std::sqrt(4.0 * kPi) - 1e-12);
  s.add_ge("small_time_envelope", std::sqrt(1e-4) * ke.value(1e-4, 0.0),
           1.0 / std::sqrt(4.0 * kPi) - 1e-9);
  double worst_ratio = 0.0;  // G(t,x) sqrt(t) / C_G over a dense grid
  double min_value = 0.0;
  double prev_peak = 0.0;
  bool smoothing_monotone = true;
  for (int it = 0; it < 40; ++it) {
    const double t = 1e-4 * std::pow(1.0 / 1e-4, it / 39.0);
    double peak = 0.0;
    for (int ix = 0; ix <= 100; ++ix) {
      const double x = -kPi + kTwoPi * ix / 100.0;
      const double g = ke.value(t, x);
      peak = std::max(peak, g);
      min_value = std::min(min_value, g);
      worst_ratio = std::max(worst_ratio, g * std::sqrt(t) / c_g);
    }
    if (it > 0 && peak > prev_peak * (1.0 + 1e-12)) smoothing_monotone = false;
    prev_peak = peak;
  }
  s.add_le("envelope_ratio", worst_ratio, 1.0 + 1e-12);
  s.add_ge("series_min_value", min_value, -1e-12);
  s.add_ge("smoothing_monotone", smoothing_monotone ? 1.0 : 0.0, 1.0);
  return s;
}

/// Pathwise Holder comparisons along simulated paths in the Holder regime,
/// plus exact equality for constant profiles.
inline VerificationSuite verify_holder_suite(std::uint64_t master_seed) {
  VerificationSuite s;
  s.suite = "holder";
  const Coefficients c(2.0, 0.9);
  const Grid grid(256);
  StepperConfig cfg;
  cfg.horizon = 0.3;
  cfg.probe_stride = 0;
  long violations = 0;
  long probes = 0;
  const ProbeFn audit = [&](const Field& u, const TrajectoryRecord&, double) {
    ++probes;
    if (!holder_chain(u, c).holds) ++violations;
  };
  for (long i = 0; i < 20; ++i) {
    NoiseStream noise = NoiseStream::derive(master_seed, static_cast<std::uint64_t>(i),
                                            grid.n_cells, grid.dx);
    run_trajectory(constant_field(grid, 2.0), c, cfg, noise, {}, {&audit, 1});
  }
  s.add_le("pathwise_violations", static_cast<double>(violations), 0.0);
  s.add_ge("pathwise_probes", static_cast<double>(probes), 20.0);

  double equality_defect = 0.0;
  for (double v : {0.5, 1.0, 4.2975, 100.0}) {
    const HolderChain h = holder_chain(constant_field(grid, v), c);
    equality_defect = std::max(
        equality_defect, std::abs(h.reaction_lhs - h.mass_pow) / std::max(1.0, h.mass_pow));
  }
  s.add_le("constant_equality_defect", equality_defect, 1e-10);

  Field spike(grid, 0.0);
  spike.values[grid.n_cells / 2] = 50.0;
  const HolderChain hs = holder_chain(spike, c);
  s.add_ge("spike_strict_gap", hs.sigma_sq_bound / std::max(hs.sigma_sq, 1e-300), 10.0);
  const HolderChain hg = holder_chain(constant_field(grid, 2.0), Coefficients(2.0, 1.3));
  s.add_le("guard_not_asserted", hg.asserted ? 1.0 : 0.0, 0.0);
  return s;
}

/// Drift floor in the Holder regime: envelope validity and the floor
/// inequality along simulated paths, envelope tightness for constant fields.
inline VerificationSuite verify_drift_suite(std::uint64_t master_seed) {
  VerificationSuite s;
  s.suite = "drift";
  {
    const Coefficients c(2.0, 1.0);
    const double a = potential_drift_rate(constant_field(Grid(512), 1.0), c, 1.0);
    const double expected = 1.0 / kTwoPi - 1.0 / (kTwoPi * kTwoPi);
    s.add_le("constant_field_rate_defect", std::abs(a - expected), 1e-12);
  }
  const Coefficients c(2.0, 0.9);
  const double eps = c.beta - 1.0;
  const double delta = 0.01;
  const double threshold = drift_floor_threshold(c, eps, delta);
  s.add_ge("threshold_mass", threshold, 0.0);

  const Grid grid(256);
  StepperConfig cfg;
  cfg.horizon = 0.25;
  cfg.probe_stride = 0;
  long floor_violations = 0, envelope_violations = 0, applied = 0;
  const ProbeFn audit = [&](const Field& u, const TrajectoryRecord&, double) {
    const DriftFloorCheck r = check_drift_floor(u, c, eps, delta);
    if (!r.envelope_holds) ++envelope_violations;
    if (r.applies) {
      ++applied;
      if (!r.ok) ++floor_violations;
    }
  };
  for (long i = 0; i < 10; ++i) {
    NoiseStream noise = NoiseStream::derive(master_seed, static_cast<std::uint64_t>(i),
                                            grid.n_cells, grid.dx);
    run_trajectory(constant_field(grid, 2.0 * threshold / kTwoPi), c, cfg, noise, {},
                   {&audit, 1});
  }
  s.add_le("floor_violations", static_cast<double>(floor_violations), 0.0);
  s.add_le("envelope_violations", static_cast<double>(envelope_violations), 0.0);
  s.add_ge("floor_applications", static_cast<double>(applied), 1.0);

  // Tightness: with delta large enough that the threshold sits on the pure
  // power branch, a constant field just below it has rate below delta.
  const double delta_tight = 0.14;
  const double c_tight = drift_floor_threshold(c, eps, delta_tight);
  const Field below = constant_field(grid, 0.99 * c_tight / kTwoPi);
  const DriftFloorCheck r = check_drift_floor(below, c, eps, delta_tight);
  s.add_le("below_threshold_margin", r.margin, 0.0);
  const Field at = constant_field(grid, 1.2 * c_tight / kTwoPi);
  s.add_ge("above_threshold_margin", check_drift_floor(at, c, eps, delta_tight).margin, 0.0);
  return s;
}

/// Randomized pathwise bound for the heat-smoothed time integral.
inline VerificationSuite verify_lebesgue_bound_suite(std::uint64_t master_seed) {
  VerificationSuite s;
  s.suite = "lebesgue-bound";
  const PeriodicHeatKernel ke;
  const double c_g = ke.sup_envelope_constant(1e-4, 1.0);
  const Grid grid(128);
  const double p = 2.0;
  long failures = 0;
  double worst = 0.0;
  for (double T : {0.1, 1.0}) {
    for (int f = 0; f < 100; ++f) {
      const std::size_t n_slices = 20;
      SampledField phi(grid, T / static_cast<double>(n_slices), n_slices);
      std::uint64_t h = detail::mix64(master_seed + 1000003ull * f + (T < 0.5 ? 0 : 1));
      for (auto& slice : phi.slices) {
        for (double& v : slice) {
          h = detail::mix64(h);
          double val = 4.0 * detail::to_unit(h);
          h = detail::mix64(h);
          if (detail::to_unit(h) < 0.05) val *= 100.0;  // occasional tall spike
          v = val;
        }
      }
      const LebesgueBoundCheck r = check_lebesgue_bound(phi, p, c_g);
      if (!r.pass) ++failures;
      worst = std::max(worst, r.ratio);
    }
  }
  s.add_le("random_field_failures", static_cast<double>(failures), 0.0);
  s.add_le("worst_ratio", worst, 1.0);
  {
    SampledField ones(grid, 0.05, 10, 1.0);  // T = 0.5
    const LebesgueBoundCheck r = check_lebesgue_bound(ones, p, c_g);
    s.add_le("unit_field_ratio", r.ratio, 1.0);
    SampledField zeros(grid, 0.05, 10, 0.0);
    s.add_le("zero_field_ratio", check_lebesgue_bound(zeros, p, c_g).ratio, 0.0);
  }
  return s;
}

inline VerificationSuite verify_stochastic_bound_suite(std::uint64_t master_seed,
                                                       long replicas = 2000, int workers = 1) {
  VerificationSuite s;
  s.suite = "stochastic-bound";
  const Coefficients c(2.0, 1.1);
  const int levels[] = {0, 1, 2};
  const StochasticBoundReport r =
      check_stochastic_bound(c, 2.5, 6.5, levels, replicas, master_seed, Grid(128), 1.0 / 250.0,
                             workers);
  s.add_ge("alpha", r.alpha, 0.0);
  s.add_ge("decay_consistent", r.decay_consistent ? 1.0 : 0.0, 1.0);
  s.add_ge("decay_exponent_lb", r.decay_exponent_lb, r.alpha);
  for (std::size_t i = 0; i < r.levels.size(); ++i)
    s.add_le("p_hat_n=" + std::to_string(r.levels[i].n), r.levels[i].p_hat,
             i == 0 ? 1.0 : r.levels[i - 1].ci.hi);
  s.add_ge("moment_ratio_stability",
           r.ratio_bounded ? 1.0 : 0.0, 1.0);
  return s;
}

/// Stopped-accumulator budgets: mean reaction integral below M, mean
/// quadratic variation below M^2, for paths stopped when the mass first
/// exceeds M.
inline VerificationSuite verify_qv_budget_suite(std::uint64_t master_seed, long n_paths = 400,
                                                int workers = 1) {
  VerificationSuite s;
  s.suite = "qv-budget";
  const Coefficients c(2.0, 1.1);
  const double M = 100.0;
  const Grid grid(256);
  StepperConfig cfg;
  cfg.horizon = 2.0;
  cfg.probe_stride = 0;
  const StoppingRule stop_rule = StoppingRule::mass_exceeds(M);
  std::vector<double> drift_acc(static_cast<std::size_t>(n_paths));
  std::vector<double> qv_acc(static_cast<std::size_t>(n_paths));
  parallel_for_index(n_paths, workers, [&](long i) {
    NoiseStream noise = NoiseStream::derive(master_seed, static_cast<std::uint64_t>(i),
                                            grid.n_cells, grid.dx);
    std::vector<StoppingRule> rules{stop_rule};
    const TrajectoryRecord rec = run_trajectory(constant_field(grid, 1.0), c, cfg, noise, rules);
    drift_acc[static_cast<std::size_t>(i)] = rec.drift_integral;
    qv_acc[static_cast<std::size_t>(i)] = rec.qv_integral;
  });
  const BudgetCheck b = budget_check(drift_acc, qv_acc, M);
  s.add_le("mean_drift_integral", b.drift.mean, M + 3.0 * b.drift.se);
  s.add_le("mean_qv_integral", b.qv.mean, M * M + 3.0 * b.qv.se);
  return s;
}

inline VerificationSuite verify_tripling_params_suite(const Coefficients& c) {
  VerificationSuite s;
  s.suite = "tripling-params";
  const TriplingDerivation d = derive_tripling_params(c);
  s.add_ge("feasible", d.feasible ? 1.0 : 0.0, 1.0);
  if (!d.feasible) return s;
  s.add_ge("theta_above_window_lo", d.params.theta, d.theta_lo);
  s.add_le("theta_below_window_hi", d.params.theta, d.theta_hi);
  s.add_ge("eta_above_window_lo", d.params.eta, d.eta_lo);
  s.add_le("eta_below_one", d.params.eta, 1.0);
  s.add_ge("alpha", d.params.alpha, 0.0);
  s.add_ge("delta", d.params.delta, 0.0);
  s.add_ge("n0", static_cast<double>(d.params.n0), 1.0);
  const double check = 0.5 * c.beta *
                       std::pow(3.0, (2.0 * c.gamma - c.beta) * d.params.theta * (d.params.n0 + 1.0) -
                                         d.params.eta * d.params.n0);
  s.add_le("starting_level_inequality", check, 1.0);
  s.add_ge("x_exponent_positive", d.params.x_exponent, 0.0);
  s.add_le("x_exponent_range", d.params.x_exponent, c.beta - 1.0);
  return s;
}

}  // namespace shelab
