#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "shelab/coefficients.hpp"
#include "shelab/experiments.hpp"
#include "shelab/integrator.hpp"

namespace shelab {

using json = nlohmann::json;

/// Round-trip formatting; identical doubles always print identically, which
/// is what makes rerun outputs byte-comparable.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline std::string trajectory_csv(const TrajectoryRecord& rec) {
  std::string s = "t,I,sup_norm,level,qv_accum\n";
  for (const ProbeSample& p : rec.series) {
    s += format_double(p.t);
    s += ',';
    s += format_double(p.mass);
    s += ',';
    s += format_double(p.sup);
    s += ',';
    s += format_double(p.level);
    s += ',';
    s += format_double(p.qv_accum);
    s += '\n';
  }
  return s;
}

inline std::string sweep_csv(const std::vector<SweepCell>& cells) {
  std::string s = "beta,gamma,region,p_hat,ci_lo,ci_hi,n_paths\n";
  for (const SweepCell& c : cells) {
    s += format_double(c.beta);
    s += ',';
    s += format_double(c.gamma);
    s += ',';
    s += regime_name(c.regime);
    s += ',';
    if (c.failed) {
      s += "nan,nan,nan,0";
    } else {
      s += format_double(c.estimate.p_hat);
      s += ',';
      s += format_double(c.estimate.ci.lo);
      s += ',';
      s += format_double(c.estimate.ci.hi);
      s += ',';
      s += std::to_string(c.estimate.n_paths);
    }
    s += '\n';
  }
  return s;
}

inline std::string tripling_csv(const TriplingReport& rep) {
  std::string s = "level,attempts,successes,down_exits,sup_exits,timeouts,p_hat,ci_lo,ci_hi,time_budget\n";
  for (const TriplingLevelResult& lev : rep.per_level) {
    s += std::to_string(lev.level);
    s += ',';
    s += std::to_string(lev.attempts);
    s += ',';
    s += std::to_string(lev.successes);
    s += ',';
    s += std::to_string(lev.down_exits);
    s += ',';
    s += std::to_string(lev.sup_exits);
    s += ',';
    s += std::to_string(lev.timeouts);
    s += ',';
    s += format_double(lev.p_hat);
    s += ',';
    s += format_double(lev.ci.lo);
    s += ',';
    s += format_double(lev.ci.hi);
    s += ',';
    s += format_double(lev.time_budget);
    s += '\n';
  }
  return s;
}

inline json to_json(const WilsonInterval& w) { return json{{"lo", w.lo}, {"hi", w.hi}}; }

inline json to_json(const MeanAndError& m) {
  return json{{"mean", m.mean}, {"se", m.se}, {"n", m.n}};
}

inline json to_json(const ExplosionEstimate& e) {
  return json{{"beta", e.beta},
              {"gamma", e.gamma},
              {"n_paths", e.n_paths},
              {"n_exploded", e.n_exploded},
              {"n_resolution_limited", e.n_resolution_limited},
              {"p_hat", e.p_hat},
              {"ci", to_json(e.ci)},
              {"horizon", e.horizon},
              {"u_explode", e.u_explode},
              {"dt_base", e.dt_base},
              {"n_cells", e.n_cells}};
}

inline json trajectory_summary_json(const TrajectoryRecord& rec) {
  json hits = json::array();
  for (const LadderHit& h : rec.ladder_hits) hits.push_back({{"level", h.level}, {"time", h.time}});
  json j{{"exploded", rec.exploded},
         {"resolution_limited", rec.resolution_limited},
         {"final_time", rec.final_time},
         {"final_mass", rec.final_mass},
         {"final_sup", rec.final_sup},
         {"steps", rec.steps},
         {"drift_integral", rec.drift_integral},
         {"qv_integral", rec.qv_integral},
         {"clamped_cell_steps", rec.clamped_cell_steps},
         {"cell_steps", rec.cell_steps},
         {"ladder_hits", hits}};
  if (rec.explosion_time) j["explosion_time"] = *rec.explosion_time;
  if (rec.stop) {
    j["stop"] = {{"time", rec.stop->time}, {"reason", stop_reason_name(rec.stop->reason)}};
  }
  return j;
}

inline json to_json(const TriplingParams& p) {
  return json{{"theta", p.theta},
              {"eta", p.eta},
              {"n0", p.n0},
              {"x_exponent", p.x_exponent},
              {"epsilon", p.epsilon},
              {"p_stochastic", p.p_stochastic},
              {"p_lebesgue", p.p_lebesgue},
              {"alpha", p.alpha},
              {"delta", p.delta}};
}

inline json to_json(const TriplingReport& rep) {
  json levels = json::array();
  for (const TriplingLevelResult& lev : rep.per_level) {
    levels.push_back({{"level", lev.level},
                      {"attempts", lev.attempts},
                      {"successes", lev.successes},
                      {"down_exits", lev.down_exits},
                      {"sup_exits", lev.sup_exits},
                      {"timeouts", lev.timeouts},
                      {"p_hat", lev.p_hat},
                      {"ci", to_json(lev.ci)},
                      {"time_budget", lev.time_budget}});
  }
  return json{{"params", to_json(rep.params)},
              {"levels", levels},
              {"chain_completion_fraction", rep.chain_completion_fraction}};
}

inline json to_json(const RegionAReport& r) {
  json checkpoints = json::array();
  for (std::size_t k = 0; k < r.checkpoint_times.size(); ++k) {
    checkpoints.push_back(
        {{"t", r.checkpoint_times[k]}, {"potential", to_json(r.potential_means[k])}});
  }
  return json{{"beta", r.beta},
              {"gamma", r.gamma},
              {"epsilon", r.epsilon},
              {"delta", r.delta},
              {"threshold_mass", r.threshold_mass},
              {"initial_mass", r.initial_mass},
              {"mass_upper", r.mass_upper},
              {"horizon", r.horizon},
              {"n_paths", r.n_paths},
              {"n_up", r.n_up},
              {"n_down", r.n_down},
              {"n_exploded", r.n_exploded},
              {"n_censored", r.n_censored},
              {"analytic_lower_bound", r.analytic_lower_bound},
              {"up_or_explode_freq", r.up_or_explode_freq},
              {"up_or_explode_ci", to_json(r.up_or_explode_ci)},
              {"freq_above_bound", r.freq_above_bound},
              {"stop_time", to_json(r.stop_time)},
              {"chebyshev_budget", r.chebyshev_budget},
              {"stop_time_within_budget", r.stop_time_within_budget},
              {"potential_checkpoints", checkpoints},
              {"potential_monotone", r.potential_monotone},
              {"drift_floor_checks", r.drift_floor_checks},
              {"drift_floor_violations", r.drift_floor_violations},
              {"pass", r.pass}};
}

inline json to_json(const StochasticBoundReport& r) {
  json levels = json::array();
  for (const ExceedanceLevel& lev : r.levels) {
    levels.push_back({{"n", lev.n},
                      {"field_value", lev.field_value},
                      {"threshold", lev.threshold},
                      {"exceed", lev.exceed},
                      {"replicas", lev.replicas},
                      {"p_hat", lev.p_hat},
                      {"ci", to_json(lev.ci)}});
  }
  return json{{"p", r.p},
              {"theta", r.theta},
              {"alpha", r.alpha},
              {"decay_exponent_lb", r.decay_exponent_lb},
              {"levels", levels},
              {"decay_consistent", r.decay_consistent},
              {"moment_ratio_half", r.moment_ratio_half},
              {"moment_ratio_full", r.moment_ratio_full},
              {"ratio_bounded", r.ratio_bounded},
              {"pass", r.pass}};
}

/// Every emitted artifact is paired with a manifest naming the command, the
/// full parameter set, the master seed, and the files written. No clocks or
/// host details: a rerun with the same config must be byte-identical.
inline json make_manifest(const std::string& command, const json& parameters,
                          std::uint64_t master_seed, const std::vector<std::string>& outputs) {
  return json{{"command", command},
              {"parameters", parameters},
              {"master_seed", master_seed},
              {"outputs", outputs}};
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace shelab
