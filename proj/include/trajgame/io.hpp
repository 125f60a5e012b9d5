#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "trajgame/admm.hpp"
#include "trajgame/game.hpp"
#include "trajgame/simulation.hpp"
#include "trajgame/types.hpp"

namespace trajgame {

/// Shortest round-trippable decimal form; identical doubles always print
/// identically, keeping output files byte-stable across runs and worker
/// counts.
inline std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

/// Trajectory file: one row per (timestep, type-player) with columns
///   t, agent, type, p_x, p_y, theta, v, delta, a, probability.
/// The terminal state row carries zero controls.
inline void write_trajectories(const std::string& path, const GameSpec& game,
                               const JointStrategy& strategy) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open output file " + path);
  out << "t,agent,type,p_x,p_y,theta,v,delta,a,probability\n";
  for (int v = 0; v < game.num_vertices(); ++v) {
    const TypePlayer& tp = game.players[v];
    const Trajectory& traj = strategy[v];
    for (int tau = 0; tau <= game.horizon; ++tau) {
      const State& x = traj.states[tau];
      const Control u = tau < game.horizon ? traj.controls[tau] : Control{};
      out << tau << ',' << tp.agent << ',' << tp.type_index << ','
          << format_double(x.px) << ',' << format_double(x.py) << ','
          << format_double(x.theta) << ',' << format_double(x.v) << ','
          << format_double(u.delta) << ',' << format_double(u.a) << ','
          << format_double(game.vertex_prob(v)) << '\n';
    }
  }
}

/// Line-delimited JSON diagnostics: one record per outer iteration.
inline void write_diagnostics_jsonl(const std::string& path,
                                    const SolveDiagnostics& diag) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open output file " + path);
  for (const OuterIterationDiag& it : diag.iterations) {
    nlohmann::json j;
    j["iteration"] = it.iteration;
    j["potential"] = it.potential;
    j["alpha"] = it.alpha;
    j["kkt_residual"] = it.kkt_residual;
    j["wall_ms"] = it.wall_ms;
    out << j.dump() << '\n';
  }
}

/// Deterministic solve summary (no timing fields).
inline void write_summary_json(const std::string& path,
                               const SolveDiagnostics& diag) {
  nlohmann::json j;
  j["final_potential"] = diag.final_potential;
  j["converged"] = diag.converged;
  j["stalled"] = diag.stalled;
  j["outer_iterations"] = diag.iterations.size();
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open output file " + path);
  out << j.dump(2) << '\n';
}

/// Metrics table mirroring the closed-loop study layout: one row per
/// setting, columns = mean metrics plus failure count.
inline void write_metrics_csv(const std::string& path,
                              const MonteCarloResult& result) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open output file " + path);
  out << "setting,mean_dv,mean_dx,mean_delta,mean_a,mean_min_distance,"
         "failures,runs\n";
  for (const MonteCarloSummary& s : result.settings) {
    out << to_string(s.setting) << ',' << format_double(s.mean.mean_speed_dev)
        << ',' << format_double(s.mean.mean_position_dev) << ','
        << format_double(s.mean.mean_abs_steering) << ','
        << format_double(s.mean.mean_abs_accel) << ','
        << format_double(s.mean.min_distance) << ',' << s.failures << ','
        << s.runs.size() << '\n';
  }
}

}  // namespace trajgame
