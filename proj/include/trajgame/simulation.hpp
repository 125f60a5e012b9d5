#pragma once

#include <algorithm>
#include <cmath>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "trajgame/admm.hpp"
#include "trajgame/game.hpp"
#include "trajgame/graph.hpp"
#include "trajgame/scenario.hpp"
#include "trajgame/thread_pool.hpp"
#include "trajgame/types.hpp"

namespace trajgame {

enum class GameSetting { kMle, kBne, kMleUpdate, kBneUpdate };

inline const char* to_string(GameSetting s) {
  switch (s) {
    case GameSetting::kMle: return "MLE";
    case GameSetting::kBne: return "BNE";
    case GameSetting::kMleUpdate: return "MLE-Update";
    case GameSetting::kBneUpdate: return "BNE-Update";
  }
  return "?";
}

inline GameSetting parse_setting(const std::string& name) {
  std::string lower;
  for (char c : name) lower.push_back(static_cast<char>(std::tolower(c)));
  if (lower == "mle") return GameSetting::kMle;
  if (lower == "bne") return GameSetting::kBne;
  if (lower == "mle-update" || lower == "mle_update")
    return GameSetting::kMleUpdate;
  if (lower == "bne-update" || lower == "bne_update")
    return GameSetting::kBneUpdate;
  throw ConfigError("setting: unknown value '" + name + "'");
}

// ---------------------------------------------------------------------------
// Open loop
// ---------------------------------------------------------------------------

struct OpenLoopResult {
  GameSpec game;
  InteractionGraph graph;
  SolveResult solve;
};

/// Builds the Bayesian game of the scenario (optionally under an overridden
/// belief) and solves it from the zero-control initialization.
inline OpenLoopResult open_loop_run(const ScenarioConfig& cfg,
                                    const SolverParams& params,
                                    const std::optional<Belief>& belief = {}) {
  OpenLoopResult out;
  GameBuildOptions opts;
  opts.belief = belief;
  out.game = build_game(cfg, opts);
  out.graph = build_bayesian_graph(out.game);
  AdmmSolver solver(out.game, out.graph, params);
  out.solve = solver.solve(default_initial_strategy(out.game));
  return out;
}

// ---------------------------------------------------------------------------
// Bayesian intent filtering
// ---------------------------------------------------------------------------

/// One filtering step for one rival agent: posterior proportional to
/// prior times an isotropic Gaussian likelihood of the observed position
/// about each type's predicted position. Entries are floored and
/// renormalized so the belief stays strictly positive. When every
/// likelihood underflows the prior is kept unchanged.
inline std::vector<double> bayes_update(const std::vector<double>& prior,
                                        const Vec2& observed_position,
                                        const std::vector<Vec2>& predicted,
                                        double obs_std,
                                        double floor = 1e-4) {
  if (prior.size() != predicted.size())
    throw ConfigError("bayes_update: one prediction per type required");
  std::vector<double> posterior(prior.size());
  double total = 0.0;
  for (std::size_t t = 0; t < prior.size(); ++t) {
    const double d2 = (observed_position - predicted[t]).squaredNorm();
    posterior[t] = prior[t] * std::exp(-0.5 * d2 / (obs_std * obs_std));
    total += posterior[t];
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    std::cerr << "bayes_update: all likelihoods underflowed, keeping prior"
              << std::endl;
    return prior;
  }
  double floored_total = 0.0;
  for (double& p : posterior) {
    p = std::max(p / total, floor);
    floored_total += p;
  }
  for (double& p : posterior) p /= floored_total;
  return posterior;
}

// ---------------------------------------------------------------------------
// Closed loop
// ---------------------------------------------------------------------------

struct RunMetrics {
  double mean_speed_dev = 0.0;     // mean |v - v_ref| of the ego agent
  double mean_position_dev = 0.0;  // mean || pos - lane reference ||
  double mean_abs_steering = 0.0;
  double mean_abs_accel = 0.0;
  double min_distance = 0.0;       // min over time and rivals
  bool failed = false;
  std::string failure_reason;
};

struct TraceStep {
  int step = 0;
  std::vector<State> states;      // per agent, state after this step
  std::vector<Control> controls;  // per agent, executed control
  Belief belief;                  // ego belief after this step's update
};

struct ClosedLoopResult {
  RunMetrics metrics;
  std::vector<TraceStep> trace;
};

namespace detail {

/// Warm start: previous solution shifted by `shift` steps with the last
/// control repeated, re-rolled from the new initial states.
inline JointStrategy shifted_warm_start(const GameSpec& game,
                                        const JointStrategy& previous,
                                        int shift) {
  if (static_cast<int>(previous.size()) != game.num_vertices())
    return default_initial_strategy(game);
  JointStrategy init;
  init.reserve(game.num_vertices());
  for (int v = 0; v < game.num_vertices(); ++v) {
    std::vector<Control> controls;
    controls.reserve(game.horizon);
    const auto& prev = previous[v].controls;
    for (int tau = shift; tau < static_cast<int>(prev.size()); ++tau)
      controls.push_back(prev[tau]);
    const Control pad = controls.empty() ? Control{} : controls.back();
    while (static_cast<int>(controls.size()) < game.horizon)
      controls.push_back(pad);
    try {
      init.push_back(rollout(game.players[v].initial_state, controls, game.dt,
                             game.wheelbase));
    } catch (const InfeasibleControlError&) {
      return default_initial_strategy(game);
    }
  }
  return init;
}

inline int argmax_index(const std::vector<double>& values) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(values.size()); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

}  // namespace detail

/// Receding-horizon simulation. Rival agents know the true types and follow
/// the Nash equilibrium of the certain game; the ego agent (agent 0) plans
/// per `setting`, executing its plan until the next replan. The first
/// control step of the selected best-type trajectory is executed at the
/// start of every cycle, followed by the remaining steps of that plan until
/// `replan_steps` elapse.
inline ClosedLoopResult closed_loop_run(const ScenarioConfig& cfg,
                                        GameSetting setting,
                                        const std::vector<int>& true_types,
                                        int duration_steps, int replan_steps,
                                        const SolverParams& params) {
  const int N = static_cast<int>(cfg.agents.size());
  const AgentId ego = 0;
  if (static_cast<int>(true_types.size()) != N)
    throw ConfigError("closed_loop_run: one true type per agent required");
  if (replan_steps < 1 || replan_steps > cfg.horizon)
    throw ConfigError("closed_loop_run: replan period must lie in [1, horizon]");

  ClosedLoopResult out;
  std::vector<State> current(N);
  for (int i = 0; i < N; ++i) current[i] = cfg.agents[i].initial_state;
  Belief belief = prior_belief(cfg);

  const bool updates = setting == GameSetting::kMleUpdate ||
                       setting == GameSetting::kBneUpdate;
  const bool plans_bne =
      setting == GameSetting::kBne || setting == GameSetting::kBneUpdate;
  const bool needs_bne = plans_bne || setting == GameSetting::kMleUpdate;

  JointStrategy rival_prev, plan_prev, bne_prev;
  JointStrategy rival_solution, plan_solution, bne_solution;
  GameSpec rival_game, plan_game, bne_game;
  Trajectory ego_plan;

  RunMetrics& metrics = out.metrics;
  metrics.min_distance = std::numeric_limits<double>::infinity();
  const double ego_v_ref = cfg.agents[ego].types[true_types[ego]].v_ref;

  const auto track_distance = [&](const std::vector<State>& states) {
    for (int i = 1; i < N; ++i) {
      metrics.min_distance = std::min(
          metrics.min_distance,
          (states[ego].position() - states[i].position()).norm());
    }
  };
  track_distance(current);

  for (int t_step = 0; t_step < duration_steps; ++t_step) {
    const int offset = t_step % replan_steps;
    if (offset == 0) {
      // Rivals: the certain game at the true types.
      GameBuildOptions rival_opts;
      rival_opts.selected = true_types;
      rival_opts.current_states = current;
      rival_opts.start_step = t_step;
      rival_game = build_game(cfg, rival_opts);
      const InteractionGraph rival_graph = build_bayesian_graph(rival_game);
      const SolveResult rival_res =
          solve(rival_game, rival_graph,
                detail::shifted_warm_start(rival_game, rival_prev, replan_steps),
                params);
      if (rival_res.diagnostics.stalled) {
        metrics.failed = true;
        metrics.failure_reason = "rival solve stalled at step " +
                                 std::to_string(t_step);
        return out;
      }
      rival_solution = rival_res.strategy;
      rival_prev = rival_solution;

      // Ego: Bayesian game under the current belief (also used to furnish
      // filter predictions in the MLE-Update setting).
      if (needs_bne) {
        GameBuildOptions bne_opts;
        bne_opts.belief = belief;
        bne_opts.current_states = current;
        bne_opts.start_step = t_step;
        bne_game = build_game(cfg, bne_opts);
        const InteractionGraph bne_graph = build_bayesian_graph(bne_game);
        const SolveResult bne_res =
            solve(bne_game, bne_graph,
                  detail::shifted_warm_start(bne_game, bne_prev, replan_steps),
                  params);
        if (bne_res.diagnostics.stalled) {
          metrics.failed = true;
          metrics.failure_reason = "ego BNE solve stalled at step " +
                                   std::to_string(t_step);
          return out;
        }
        bne_solution = bne_res.strategy;
        bne_prev = bne_solution;
      }

      if (plans_bne) {
        plan_game = bne_game;
        plan_solution = bne_solution;
      } else {
        // MLE: each rival pinned to its most likely type.
        GameBuildOptions mle_opts;
        mle_opts.selected.assign(N, -1);
        mle_opts.selected[ego] = true_types[ego];
        for (int i = 0; i < N; ++i) {
          if (i != ego) mle_opts.selected[i] = detail::argmax_index(belief[i]);
        }
        mle_opts.current_states = current;
        mle_opts.start_step = t_step;
        plan_game = build_game(cfg, mle_opts);
        const InteractionGraph plan_graph = build_bayesian_graph(plan_game);
        const SolveResult plan_res =
            solve(plan_game, plan_graph,
                  detail::shifted_warm_start(plan_game, plan_prev, replan_steps),
                  params);
        if (plan_res.diagnostics.stalled) {
          metrics.failed = true;
          metrics.failure_reason = "ego MLE solve stalled at step " +
                                   std::to_string(t_step);
          return out;
        }
        plan_solution = plan_res.strategy;
        plan_prev = plan_solution;
      }
      ego_plan = plan_solution[best_type(plan_game, plan_solution, ego)];
    }

    // Execute one step: ego from its plan, rivals from the certain NE.
    TraceStep trace;
    trace.step = t_step;
    trace.controls.resize(N);
    trace.controls[ego] = ego_plan.controls[offset];
    for (int i = 1; i < N; ++i) {
      trace.controls[i] =
          rival_solution[rival_game.vertex_index(i, 0)].controls[offset];
    }
    try {
      for (int i = 0; i < N; ++i) {
        current[i] = step(current[i], trace.controls[i], cfg.dt, cfg.wheelbase);
      }
    } catch (const InfeasibleControlError& e) {
      metrics.failed = true;
      metrics.failure_reason = std::string("infeasible control: ") + e.what();
      return out;
    }

    // Belief update from the rivals' observed motion against the per-type
    // predictions of the BNE solution.
    if (updates) {
      for (int i = 1; i < N; ++i) {
        std::vector<Vec2> predicted;
        for (int t = 0; t < static_cast<int>(cfg.agents[i].types.size()); ++t) {
          predicted.push_back(
              bne_solution[bne_game.vertex_index(i, t)]
                  .states[offset + 1]
                  .position());
        }
        belief[i] = bayes_update(belief[i], current[i].position(), predicted,
                                 cfg.closed_loop.obs_std,
                                 cfg.closed_loop.belief_floor);
      }
    }

    // Metrics on the ego agent.
    metrics.mean_speed_dev += std::abs(current[ego].v - ego_v_ref);
    const State lane_ref =
        cfg.agents[ego].lane.state_at(ego_v_ref, t_step + 1, cfg.dt);
    metrics.mean_position_dev +=
        (current[ego].position() - lane_ref.position()).norm();
    metrics.mean_abs_steering += std::abs(trace.controls[ego].delta);
    metrics.mean_abs_accel += std::abs(trace.controls[ego].a);
    track_distance(current);

    trace.states = current;
    trace.belief = belief;
    out.trace.push_back(std::move(trace));
  }

  metrics.mean_speed_dev /= duration_steps;
  metrics.mean_position_dev /= duration_steps;
  metrics.mean_abs_steering /= duration_steps;
  metrics.mean_abs_accel /= duration_steps;
  return out;
}

// ---------------------------------------------------------------------------
// Monte Carlo study
// ---------------------------------------------------------------------------

struct MonteCarloSummary {
  GameSetting setting;
  RunMetrics mean;          // over successful runs
  int failures = 0;
  std::vector<RunMetrics> runs;  // aligned with the run enumeration
};

struct MonteCarloResult {
  std::vector<MonteCarloSummary> settings;
  int total_runs = 0;
};

/// Monte-Carlo closed-loop study: `n_conditions` random initial conditions
/// (along-lane position and speed perturbations, random mixture weight w1
/// in [0.1, 0.9]), times `n_type_draws` draws of the rivals' true types.
/// Every setting replays the identical run set; results are deterministic
/// under a fixed seed and independent of the setting order.
inline MonteCarloResult monte_carlo(const ScenarioConfig& cfg,
                                    const std::vector<GameSetting>& settings,
                                    int n_conditions, int n_type_draws,
                                    std::uint64_t seed,
                                    const SolverParams& params,
                                    int workers = 1) {
  struct RunInputs {
    ScenarioConfig variant;
    std::vector<int> true_types;
  };

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> along(-1.0, 1.0);
  std::uniform_real_distribution<double> speed(-0.3, 0.3);
  std::uniform_real_distribution<double> weight(0.1, 0.9);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<RunInputs> runs;
  for (int c = 0; c < n_conditions; ++c) {
    ScenarioConfig variant = cfg;
    for (auto& agent : variant.agents) {
      const double d = along(rng);
      agent.initial_state.px += d * std::cos(agent.initial_state.theta);
      agent.initial_state.py += d * std::sin(agent.initial_state.theta);
      agent.initial_state.v = std::max(0.1, agent.initial_state.v + speed(rng));
      if (agent.intent.mixture && agent.intent.mixture->weights.size() == 2) {
        const double w1 = weight(rng);
        agent.intent.mixture->weights = {w1, 1.0 - w1};
      }
    }
    variant.finalize();
    for (int d = 0; d < n_type_draws; ++d) {
      RunInputs inputs;
      inputs.variant = variant;
      for (const auto& agent : variant.agents) {
        if (agent.types.size() == 1) {
          inputs.true_types.push_back(0);
          continue;
        }
        double u = unit(rng);
        int pick = 0;
        for (int t = 0; t < static_cast<int>(agent.types.size()); ++t) {
          u -= agent.types[t].prob;
          if (u <= 0.0) {
            pick = t;
            break;
          }
          pick = t;
        }
        inputs.true_types.push_back(pick);
      }
      runs.push_back(std::move(inputs));
    }
  }

  MonteCarloResult result;
  result.total_runs = static_cast<int>(runs.size());
  std::vector<std::vector<RunMetrics>> table(
      settings.size(), std::vector<RunMetrics>(runs.size()));

  ThreadPool pool(workers);
  pool.parallel_for(static_cast<int>(runs.size()), [&](int r) {
    for (std::size_t s = 0; s < settings.size(); ++s) {
      const ClosedLoopResult res = closed_loop_run(
          runs[r].variant, settings[s], runs[r].true_types,
          cfg.closed_loop.duration_steps, cfg.closed_loop.replan_steps,
          params);
      table[s][r] = res.metrics;
    }
  });

  for (std::size_t s = 0; s < settings.size(); ++s) {
    MonteCarloSummary summary;
    summary.setting = settings[s];
    summary.runs = table[s];
    int ok = 0;
    for (const RunMetrics& m : table[s]) {
      if (m.failed) {
        ++summary.failures;
        continue;
      }
      ++ok;
      summary.mean.mean_speed_dev += m.mean_speed_dev;
      summary.mean.mean_position_dev += m.mean_position_dev;
      summary.mean.mean_abs_steering += m.mean_abs_steering;
      summary.mean.mean_abs_accel += m.mean_abs_accel;
      summary.mean.min_distance += m.min_distance;
    }
    if (ok > 0) {
      summary.mean.mean_speed_dev /= ok;
      summary.mean.mean_position_dev /= ok;
      summary.mean.mean_abs_steering /= ok;
      summary.mean.mean_abs_accel /= ok;
      summary.mean.min_distance /= ok;
    }
    result.settings.push_back(std::move(summary));
  }
  return result;
}

/// One-sided paired bootstrap: confidence that mean(metric_a - metric_b) >= 0
/// over the paired successful runs.
inline double bootstrap_confidence_geq(const std::vector<RunMetrics>& a,
                                       const std::vector<RunMetrics>& b,
                                       std::uint64_t seed,
                                       int resamples = 10000) {
  std::vector<double> diffs;
  for (std::size_t r = 0; r < a.size() && r < b.size(); ++r) {
    if (a[r].failed || b[r].failed) continue;
    diffs.push_back(a[r].min_distance - b[r].min_distance);
  }
  if (diffs.empty()) return 0.0;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, diffs.size() - 1);
  int nonneg = 0;
  for (int s = 0; s < resamples; ++s) {
    double mean = 0.0;
    for (std::size_t k = 0; k < diffs.size(); ++k) mean += diffs[pick(rng)];
    if (mean >= 0.0) ++nonneg;
  }
  return static_cast<double>(nonneg) / resamples;
}

}  // namespace trajgame
