#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "shelab/coefficients.hpp"
#include "shelab/functionals.hpp"
#include "shelab/grid.hpp"
#include "shelab/noise.hpp"
#include "shelab/spectral.hpp"

namespace shelab {

/// Time stepping controls. The step actually taken is
///   dt = min(dt_base, dt_safety / max drift slope on [0, sup u]),
/// which resolves the approach to blow-up; when dt falls below dt_min the
/// path is flagged as explosion at the resolution limit. Explosion proper is
/// declared when the sup norm crosses u_explode. Cutoff levels climb the
/// geometric ladder ladder_base^k.
struct StepperConfig {
  double dt_base = 1e-4;
  double dt_safety = 0.1;
  double dt_min = 1e-12;
  double u_explode = 1e8;
  double horizon = 1.0;
  double ladder_base = 3.0;
  double initial_level = 0.0;  // 0: start at the smallest ladder level >= sup(u0)
  bool use_drift = true;
  bool use_noise = true;
  int probe_stride = 1;  // record every k-th step; <= 0 records endpoints only
};

struct LadderHit {
  double level = 0.0;
  double time = 0.0;
};

struct ProbeSample {
  double t = 0.0;
  double mass = 0.0;
  double sup = 0.0;
  double level = 0.0;
  double qv_accum = 0.0;
};

enum class StopCause { Horizon, Explosion, Rule };

struct TrajectoryRecord {
  std::vector<ProbeSample> series;
  std::vector<LadderHit> ladder_hits;
  StopCause cause = StopCause::Horizon;
  bool exploded = false;
  bool resolution_limited = false;
  std::optional<double> explosion_time;
  std::optional<StopHit> stop;
  double drift_integral = 0.0;  // accumulated int int drift(u) dx ds
  double qv_integral = 0.0;     // accumulated int int diffusion(u)^2 dx ds
  double final_time = 0.0;
  double final_mass = 0.0;
  double final_sup = 0.0;
  std::uint64_t steps = 0;
  std::uint64_t clamped_cell_steps = 0;
  std::uint64_t cell_steps = 0;
};

/// Functional probe evaluated on the state at every probe time (the initial
/// state and after every step), with the record accumulated so far and the
/// active cutoff level.
using ProbeFn = std::function<void(const Field&, const TrajectoryRecord&, double)>;

class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& msg, Field last)
      : std::runtime_error(msg), last_state(std::move(last)) {}
  Field last_state;
};

class StiffnessError : public IntegrationError {
 public:
  explicit StiffnessError(Field last)
      : IntegrationError("explosion-resolution limit: dt underflow", std::move(last)) {}
};

inline double choose_dt(double sup, const Coefficients& c, const StepperConfig& cfg) {
  double dt = cfg.dt_base;
  if (cfg.use_drift) {
    const double slope = c.drift_slope_bound(sup);
    if (slope > 0.0) dt = std::min(dt, cfg.dt_safety / slope);
  }
  return dt;
}

inline double first_ladder_level(double sup, double base) {
  double level = base;
  while (level < sup) level *= base;
  return level;
}

namespace detail {

/// One step at a given dt: explicit reaction + noise, implicit spectral
/// diffusion, then clamp to the nonnegative cone. Coefficients enter through
/// their cutoff versions at the active ladder level.
inline Field advance(const Field& u, const Coefficients& c, double level, NoiseStream& noise,
                     const StepperConfig& cfg, SpectralWorkspace& ws, double dt,
                     std::uint64_t* clamped, std::vector<double>& noise_buf) {
  Field next = u;
  const int n = u.grid.n_cells;
  if (cfg.use_noise) {
    if (static_cast<int>(noise_buf.size()) != n) noise_buf.assign(n, 0.0);
    noise.increments(dt, noise_buf);
    const double inv_dx = 1.0 / u.grid.dx;
    for (int i = 0; i < n; ++i) {
      const double v = u.values[i];
      double w = v + c.diffusion_cutoff(level, v) * noise_buf[i] * inv_dx;
      if (cfg.use_drift) w += dt * c.drift_cutoff(level, v);
      next.values[i] = w;
    }
  } else if (cfg.use_drift) {
    for (int i = 0; i < n; ++i) {
      const double v = u.values[i];
      next.values[i] = v + dt * c.drift_cutoff(level, v);
    }
  }
  ws.implicit_diffusion(next.values, dt);
  for (int i = 0; i < n; ++i) {
    if (next.values[i] < 0.0) {
      next.values[i] = 0.0;
      if (clamped) ++*clamped;
    }
  }
  next.time = u.time + dt;
  if (!next.all_finite()) throw IntegrationError("non-finite field value", u);
  return next;
}

}  // namespace detail

/// Single step with the adaptive dt. Throws StiffnessError when the drift
/// guard pushes dt below dt_min, and IntegrationError when the update
/// produces a non-finite value; both carry the last finite state.
inline Field step(const Field& u, const Coefficients& c, double level, NoiseStream& noise,
                  const StepperConfig& cfg, SpectralWorkspace& ws) {
  const double dt = choose_dt(sup_of(u), c, cfg);
  if (dt < cfg.dt_min) throw StiffnessError(u);
  std::vector<double> buf;
  return detail::advance(u, c, level, noise, cfg, ws, dt, nullptr, buf);
}

/// Runs one path until explosion, a stopping rule, or the horizon.
///
/// The cutoff ladder starts at the smallest level above the initial sup norm
/// and is promoted the moment the sup norm crosses it, recording the hit; by
/// construction no cell ever exceeds the active level at the start of a step,
/// so the computed path coincides with the uncut dynamics (the consistency
/// property) and is reproducible bit for bit across starting levels.
///
/// Stopping rules are evaluated at every probe time; the accumulated
/// reaction and quadratic-variation integrals run up to the stop.
inline TrajectoryRecord run_trajectory(const Field& u0, const Coefficients& c,
                                       const StepperConfig& cfg, NoiseStream noise,
                                       std::span<const StoppingRule> rules = {},
                                       std::span<const ProbeFn> probes = {}) {
  if (u0.min_value() < 0.0)
    throw std::invalid_argument("run_trajectory: initial data must be nonnegative");
  if (noise.n_cells() != u0.grid.n_cells)
    throw std::invalid_argument("run_trajectory: noise grid mismatch");

  TrajectoryRecord rec;
  Field u = u0;
  SpectralWorkspace ws(u.grid.n_cells);
  std::vector<double> noise_buf;
  double level = cfg.initial_level > 0.0 ? cfg.initial_level
                                         : first_ladder_level(sup_of(u), cfg.ladder_base);
  while (level < sup_of(u)) level *= cfg.ladder_base;

  const auto probe = [&](double sup_now, double mass_now) {
    rec.series.push_back({u.time, mass_now, sup_now, level, rec.qv_integral});
  };
  const auto run_probes = [&] {
    for (const ProbeFn& fn : probes) fn(u, rec, level);
  };
  probe(sup_of(u), mass_of(u));
  run_probes();

  while (true) {
    const double sup = sup_of(u);
    const double mass = mass_of(u);

    bool stopped = false;
    for (const StoppingRule& rule : rules) {
      if (auto reason = rule.evaluate(mass, sup)) {
        rec.stop = StopHit{u.time, *reason};
        rec.cause = StopCause::Rule;
        stopped = true;
        break;
      }
    }
    if (stopped) break;

    if (sup > cfg.u_explode) {
      rec.exploded = true;
      rec.explosion_time = u.time;
      rec.cause = StopCause::Explosion;
      break;
    }

    const double remaining = cfg.horizon - u.time;
    if (remaining <= cfg.dt_min) {
      rec.cause = StopCause::Horizon;
      break;
    }

    double dt = choose_dt(sup, c, cfg);
    if (dt < cfg.dt_min) {
      rec.exploded = true;
      rec.resolution_limited = true;
      rec.explosion_time = u.time;
      rec.cause = StopCause::Explosion;
      break;
    }
    dt = std::min(dt, remaining);

    double growth = 0.0, qv_rate = 0.0;
    for (double v : u.values) {
      growth += c.drift_cutoff(level, v);
      const double s = c.diffusion_cutoff(level, v);
      qv_rate += s * s;
    }
    if (cfg.use_drift) rec.drift_integral += dt * growth * u.grid.dx;
    if (cfg.use_noise) rec.qv_integral += dt * qv_rate * u.grid.dx;

    u = detail::advance(u, c, level, noise, cfg, ws, dt, &rec.clamped_cell_steps, noise_buf);
    ++rec.steps;
    rec.cell_steps += static_cast<std::uint64_t>(u.grid.n_cells);

    double sup_after = sup_of(u);
    while (sup_after > level) {
      rec.ladder_hits.push_back({level, u.time});
      level *= cfg.ladder_base;
    }

    if (cfg.probe_stride > 0 && rec.steps % static_cast<std::uint64_t>(cfg.probe_stride) == 0)
      probe(sup_after, mass_of(u));
    run_probes();
  }

  const double sup_end = sup_of(u);
  const double mass_end = mass_of(u);
  if (rec.series.empty() || rec.series.back().t != u.time) probe(sup_end, mass_end);
  rec.final_time = u.time;
  rec.final_mass = mass_end;
  rec.final_sup = sup_end;
  return rec;
}

/// Flat profile carrying mass 3^level; the standard start state for the
/// level-climbing experiments. Its sup norm 3^level / (2 pi) automatically
/// stays below the corridor bound 3^(theta * level) for theta >= 1.
inline Field level_profile_field(const Grid& g, int level, double theta) {
  if (level < 1 || !(theta >= 1.0))
    throw std::invalid_argument("level_profile_field: need level >= 1 and theta >= 1");
  return Field(g, std::pow(3.0, level) / kTwoPi);
}

}  // namespace shelab
