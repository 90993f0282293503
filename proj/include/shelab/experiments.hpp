#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "shelab/convolution.hpp"
#include "shelab/coefficients.hpp"
#include "shelab/functionals.hpp"
#include "shelab/integrator.hpp"
#include "shelab/noise.hpp"
#include "shelab/parallel.hpp"
#include "shelab/stats.hpp"

namespace shelab {

struct InitialConditionSpec {
  enum class Kind { Constant, LevelProfile };
  Kind kind = Kind::Constant;
  double value = 1.0;   // Constant
  int level = 3;        // LevelProfile: mass 3^level
  double theta = 2.5;   // LevelProfile: sup-corridor exponent
};

inline Field build_initial_condition(const InitialConditionSpec& ic, const Grid& g) {
  switch (ic.kind) {
    case InitialConditionSpec::Kind::Constant: return constant_field(g, ic.value);
    case InitialConditionSpec::Kind::LevelProfile: return level_profile_field(g, ic.level, ic.theta);
  }
  throw std::invalid_argument("build_initial_condition: unknown kind");
}

struct ExplosionEstimate {
  double beta = 0.0, gamma = 0.0;
  long n_paths = 0;
  long n_exploded = 0;
  long n_resolution_limited = 0;
  double p_hat = 0.0;
  WilsonInterval ci;
  double horizon = 0.0, u_explode = 0.0, dt_base = 0.0;
  int n_cells = 0;
};

/// Monte Carlo explosion fraction over independent derived noise streams.
/// Deterministic for a fixed master seed regardless of worker count.
inline ExplosionEstimate estimate_explosion_probability(const Coefficients& c, const Field& ic,
                                                        const StepperConfig& cfg, long n_paths,
                                                        std::uint64_t master_seed,
                                                        int workers = 1) {
  if (n_paths < 1) throw std::invalid_argument("estimate_explosion_probability: n_paths >= 1");
  std::vector<char> exploded(static_cast<std::size_t>(n_paths), 0);
  std::vector<char> limited(static_cast<std::size_t>(n_paths), 0);
  StepperConfig run_cfg = cfg;
  run_cfg.probe_stride = 0;
  parallel_for_index(n_paths, workers, [&](long i) {
    NoiseStream noise = NoiseStream::derive(master_seed, static_cast<std::uint64_t>(i),
                                            ic.grid.n_cells, ic.grid.dx);
    const TrajectoryRecord rec = run_trajectory(ic, c, run_cfg, noise);
    exploded[static_cast<std::size_t>(i)] = rec.exploded ? 1 : 0;
    limited[static_cast<std::size_t>(i)] = rec.resolution_limited ? 1 : 0;
  });
  ExplosionEstimate est;
  est.beta = c.beta;
  est.gamma = c.gamma;
  est.n_paths = n_paths;
  for (long i = 0; i < n_paths; ++i) {
    est.n_exploded += exploded[static_cast<std::size_t>(i)];
    est.n_resolution_limited += limited[static_cast<std::size_t>(i)];
  }
  est.p_hat = static_cast<double>(est.n_exploded) / static_cast<double>(n_paths);
  est.ci = wilson_interval(est.n_exploded, n_paths);
  est.horizon = cfg.horizon;
  est.u_explode = cfg.u_explode;
  est.dt_base = cfg.dt_base;
  est.n_cells = ic.grid.n_cells;
  return est;
}

struct SweepCell {
  double beta = 0.0, gamma = 0.0;
  Regime regime = Regime::Other;
  bool failed = false;
  std::string error;
  ExplosionEstimate estimate;
};

/// Explosion-fraction map over a (beta, gamma) grid. Per-cell failures are
/// recorded and the sweep continues. Cell seeds derive from the master seed
/// and the row-major cell index, so output is independent of scheduling.
inline std::vector<SweepCell> region_sweep(std::span<const double> betas,
                                           std::span<const double> gammas,
                                           const InitialConditionSpec& ic_spec, int n_cells,
                                           const StepperConfig& cfg, long n_paths,
                                           std::uint64_t master_seed, int workers = 1) {
  std::vector<SweepCell> cells;
  const Grid grid(n_cells);
  std::uint64_t cell_index = 0;
  for (double b : betas) {
    for (double g : gammas) {
      SweepCell cell;
      cell.beta = b;
      cell.gamma = g;
      const std::uint64_t cell_seed = detail::mix64(master_seed + detail::kGolden * (cell_index + 1));
      ++cell_index;
      try {
        const Coefficients c(b, g);
        cell.regime = classify(c);
        const Field ic = build_initial_condition(ic_spec, grid);
        cell.estimate = estimate_explosion_probability(c, ic, cfg, n_paths, cell_seed, workers);
      } catch (const std::exception& e) {
        cell.failed = true;
        cell.error = e.what();
      }
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

struct RegionASettings {
  double delta = 0.01;
  double horizon = 1000.0;      // T in the exit-probability bound
  double initial_mass = 0.0;    // 0: use 10x the drift-floor threshold
  double mass_upper = 0.0;      // 0: use 81x the initial mass, rounded up the 3^k ladder
  long n_paths = 200;
  int n_cells = 256;
  StepperConfig stepper;
  std::vector<double> checkpoints{0.05, 0.1, 0.2, 0.4};
};

struct RegionAReport {
  double beta = 0.0, gamma = 0.0, epsilon = 0.0, delta = 0.0;
  double threshold_mass = 0.0;  // drift-floor threshold C
  double initial_mass = 0.0;
  double mass_upper = 0.0;
  double horizon = 0.0;
  long n_paths = 0;
  long n_up = 0, n_down = 0, n_exploded = 0, n_censored = 0;
  double analytic_lower_bound = 0.0;  // V(I0) - V(C) - 1/(delta T)
  double up_or_explode_freq = 0.0;
  WilsonInterval up_or_explode_ci;
  bool freq_above_bound = false;
  MeanAndError stop_time;
  double chebyshev_budget = 0.0;  // 1/delta
  bool stop_time_within_budget = false;
  std::vector<double> checkpoint_times;
  std::vector<MeanAndError> potential_means;
  bool potential_monotone = false;
  long drift_floor_checks = 0;
  long drift_floor_violations = 0;
  bool pass = false;
};

/// Corridor-exit experiment for the Holder regime (2 gamma <= beta, beta > 1):
/// paths start above the drift-floor threshold C, stop on leaving
/// [C, mass_upper], and the upward-exit-or-explosion frequency is compared
/// with the analytic lower bound V(I0) - V(C) - 1/(delta T). Also audits the
/// drift floor (potential drift rate >= delta whenever mass >= C) pointwise
/// along every path and the mean stopped time against the 1/delta budget.
inline RegionAReport region_a_experiment(const Coefficients& c, const RegionASettings& s,
                                         std::uint64_t master_seed, int workers = 1) {
  require_holder_regime(c);
  const double eps = c.beta - 1.0;
  RegionAReport rep;
  rep.beta = c.beta;
  rep.gamma = c.gamma;
  rep.epsilon = eps;
  rep.delta = s.delta;
  rep.threshold_mass = drift_floor_threshold(c, eps, s.delta);
  rep.initial_mass = s.initial_mass > 0.0 ? s.initial_mass : 10.0 * rep.threshold_mass;
  if (rep.initial_mass <= rep.threshold_mass)
    throw std::invalid_argument("region_a_experiment: initial mass must exceed the drift floor threshold");
  rep.mass_upper = s.mass_upper > 0.0 ? s.mass_upper
                                      : first_ladder_level(81.0 * rep.initial_mass, 3.0);
  rep.horizon = s.horizon;
  rep.n_paths = s.n_paths;
  rep.chebyshev_budget = 1.0 / s.delta;
  rep.analytic_lower_bound = potential_value(rep.initial_mass, eps) -
                             potential_value(rep.threshold_mass, eps) -
                             1.0 / (s.delta * s.horizon);
  rep.checkpoint_times = s.checkpoints;

  const Grid grid(s.n_cells);
  const Field ic = constant_field(grid, rep.initial_mass / kTwoPi);
  StepperConfig cfg = s.stepper;
  cfg.horizon = s.horizon;
  cfg.probe_stride = 1;

  const StoppingRule corridor = StoppingRule::corridor(
      rep.threshold_mass, rep.mass_upper, std::numeric_limits<double>::infinity());

  enum class Exit : char { Up, Down, Exploded, Censored };
  std::vector<char> exits(static_cast<std::size_t>(s.n_paths));
  std::vector<double> stop_times(static_cast<std::size_t>(s.n_paths));
  std::vector<std::vector<double>> potentials(
      static_cast<std::size_t>(s.n_paths), std::vector<double>(s.checkpoints.size(), 0.0));
  std::vector<long> floor_checks(static_cast<std::size_t>(s.n_paths), 0);
  std::vector<long> floor_violations(static_cast<std::size_t>(s.n_paths), 0);

  parallel_for_index(s.n_paths, workers, [&](long i) {
    NoiseStream noise =
        NoiseStream::derive(master_seed, static_cast<std::uint64_t>(i), grid.n_cells, grid.dx);
    std::vector<StoppingRule> rules{corridor};
    long checks = 0, violations = 0;
    const ProbeFn audit = [&](const Field& u, const TrajectoryRecord&, double) {
      const double m = mass_of(u);
      if (m >= rep.threshold_mass) {
        ++checks;
        if (potential_drift_rate(u, c, eps) < s.delta) ++violations;
      }
    };
    const TrajectoryRecord rec = run_trajectory(ic, c, cfg, noise, rules, {&audit, 1});
    floor_checks[static_cast<std::size_t>(i)] = checks;
    floor_violations[static_cast<std::size_t>(i)] = violations;
    stop_times[static_cast<std::size_t>(i)] = rec.final_time;
    Exit e = Exit::Censored;
    if (rec.exploded) e = Exit::Exploded;
    else if (rec.stop) e = rec.stop->reason == StopReason::MassUpper ? Exit::Up : Exit::Down;
    exits[static_cast<std::size_t>(i)] = static_cast<char>(e);
    // potential of the stopped mass at each checkpoint
    for (std::size_t k = 0; k < s.checkpoints.size(); ++k) {
      const double tc = s.checkpoints[k];
      double m = rec.final_mass;
      for (const ProbeSample& ps : rec.series) {
        if (ps.t > tc) break;
        m = ps.mass;
      }
      potentials[static_cast<std::size_t>(i)][k] = potential_value(m, eps);
    }
  });

  for (long i = 0; i < s.n_paths; ++i) {
    switch (static_cast<Exit>(exits[static_cast<std::size_t>(i)])) {
      case Exit::Up: ++rep.n_up; break;
      case Exit::Down: ++rep.n_down; break;
      case Exit::Exploded: ++rep.n_exploded; break;
      case Exit::Censored: ++rep.n_censored; break;
    }
    rep.drift_floor_checks += floor_checks[static_cast<std::size_t>(i)];
    rep.drift_floor_violations += floor_violations[static_cast<std::size_t>(i)];
  }
  const long up_or_explode = rep.n_up + rep.n_exploded;
  rep.up_or_explode_freq = static_cast<double>(up_or_explode) / static_cast<double>(s.n_paths);
  rep.up_or_explode_ci = wilson_interval(up_or_explode, s.n_paths);
  const double se =
      std::sqrt(std::max(rep.up_or_explode_freq * (1.0 - rep.up_or_explode_freq), 1e-12) /
                static_cast<double>(s.n_paths));
  rep.freq_above_bound = rep.up_or_explode_freq >= rep.analytic_lower_bound - 3.0 * se;

  rep.stop_time = mean_and_se(stop_times);
  rep.stop_time_within_budget =
      rep.stop_time.mean <= rep.chebyshev_budget + 3.0 * rep.stop_time.se;

  rep.potential_means.resize(s.checkpoints.size());
  std::vector<double> column(static_cast<std::size_t>(s.n_paths));
  for (std::size_t k = 0; k < s.checkpoints.size(); ++k) {
    for (long i = 0; i < s.n_paths; ++i)
      column[static_cast<std::size_t>(i)] = potentials[static_cast<std::size_t>(i)][k];
    rep.potential_means[k] = mean_and_se(column);
  }
  rep.potential_monotone = true;
  for (std::size_t k = 0; k + 1 < rep.potential_means.size(); ++k) {
    const auto& a = rep.potential_means[k];
    const auto& b = rep.potential_means[k + 1];
    if (b.mean < a.mean - 3.0 * std::sqrt(a.se * a.se + b.se * b.se))
      rep.potential_monotone = false;
  }

  rep.pass = rep.freq_above_bound && rep.stop_time_within_budget &&
             rep.drift_floor_violations == 0 && rep.potential_monotone;
  return rep;
}

struct TriplingLevelResult {
  int level = 0;
  long attempts = 0;
  long successes = 0;  // upward mass exit within the level's time budget
  long down_exits = 0;
  long sup_exits = 0;
  long timeouts = 0;
  double time_budget = 0.0;
  double p_hat = 0.0;
  WilsonInterval ci;
};

struct TriplingReport {
  TriplingParams params;
  std::vector<TriplingLevelResult> per_level;
  double chain_completion_fraction = 0.0;  // product of per-level frequencies
};

/// Level-climbing experiment: at each level n the path restarts from the flat
/// profile of mass 3^n (a Markov-restart surrogate for the conditional
/// per-level estimate), stops at the corridor
///   mass > 3^(n+1), mass <= 3^(eta n), or sup > 3^(theta (n+1)),
/// or at the budget T_n = 3^(-n x), and success means the upward exit within
/// budget. The chain estimate is the product of per-level frequencies.
inline TriplingReport tripling_experiment(const Coefficients& c, const TriplingParams& params,
                                          long attempts_per_level, int max_level,
                                          const StepperConfig& base_cfg, int n_cells,
                                          std::uint64_t master_seed, int workers = 1) {
  if (classify(c) != Regime::B)
    throw std::domain_error("tripling_experiment: requires a regime-B pair");
  if (attempts_per_level < 1 || max_level < params.n0)
    throw std::invalid_argument("tripling_experiment: bad attempt/level counts");
  TriplingReport rep;
  rep.params = params;
  rep.chain_completion_fraction = 1.0;
  const Grid grid(n_cells);
  for (int n = params.n0; n <= max_level; ++n) {
    TriplingLevelResult lev;
    lev.level = n;
    lev.attempts = attempts_per_level;
    lev.time_budget = params.level_time(n);
    const Field ic = level_profile_field(grid, n, params.theta);
    StepperConfig cfg = base_cfg;
    cfg.horizon = lev.time_budget;
    cfg.probe_stride = 0;
    const StoppingRule corridor = StoppingRule::corridor(
        params.corridor_low(n), params.corridor_high(n), params.corridor_sup(n));
    std::vector<char> outcome(static_cast<std::size_t>(attempts_per_level), 0);
    const std::uint64_t level_offset = static_cast<std::uint64_t>(n - params.n0) *
                                       static_cast<std::uint64_t>(attempts_per_level);
    parallel_for_index(attempts_per_level, workers, [&](long a) {
      NoiseStream noise = NoiseStream::derive(
          master_seed, level_offset + static_cast<std::uint64_t>(a), grid.n_cells, grid.dx);
      std::vector<StoppingRule> rules{corridor};
      const TrajectoryRecord rec = run_trajectory(ic, c, cfg, noise, rules);
      char o = 't';  // timeout
      if (rec.stop) {
        switch (rec.stop->reason) {
          case StopReason::MassUpper: o = 'u'; break;
          case StopReason::MassLower: o = 'd'; break;
          case StopReason::SupLimit: o = 's'; break;
        }
      } else if (rec.exploded) {
        o = 's';  // sup blow-through counts as a sup exit
      }
      outcome[static_cast<std::size_t>(a)] = o;
    });
    for (char o : outcome) {
      if (o == 'u') ++lev.successes;
      else if (o == 'd') ++lev.down_exits;
      else if (o == 's') ++lev.sup_exits;
      else ++lev.timeouts;
    }
    lev.p_hat = static_cast<double>(lev.successes) / static_cast<double>(lev.attempts);
    lev.ci = wilson_interval(lev.successes, lev.attempts);
    rep.chain_completion_fraction *= lev.p_hat;
    rep.per_level.push_back(lev);
  }
  return rep;
}

}  // namespace shelab
