#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "trajgame/contingency.hpp"
#include "trajgame/game.hpp"
#include "trajgame/graph.hpp"
#include "trajgame/types.hpp"

namespace trajgame {

/// Straight lane: reference states advance with constant speed from the
/// origin along the heading.
struct Lane {
  Vec2 origin = Vec2::Zero();
  double heading = 0.0;

  State state_at(double v_ref, int step, double dt) const {
    const double dist = v_ref * step * dt;
    return State{origin.x() + dist * std::cos(heading),
                 origin.y() + dist * std::sin(heading), heading, v_ref};
  }
};

struct GaussianMixture {
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> stds;

  double density(double v) const {
    double p = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
      const double z = (v - means[k]) / stds[k];
      p += weights[k] * std::exp(-0.5 * z * z) /
           (stds[k] * std::sqrt(2.0 * M_PI));
    }
    return p;
  }
};

/// Agent intent: a fixed reference velocity or a Gaussian mixture over it.
struct IntentModel {
  std::optional<double> fixed_v_ref;
  std::optional<GaussianMixture> mixture;
  int samples_per_mode = 5;
};

struct SampledType {
  double v_ref = 0.0;
  double prob = 1.0;
  std::string label;
};

/// Deterministic sigma-grid type sampling: per mixture mode, an evenly
/// spaced grid over [mean - 2 std, mean + 2 std] (the 5-point grid is
/// {m-2s, m-s, m, m+s, m+2s}); each sample weighted by the full mixture
/// density at its velocity, normalized per agent.
inline std::vector<SampledType> sample_types(const IntentModel& intent) {
  std::vector<SampledType> types;
  if (intent.fixed_v_ref) {
    types.push_back({*intent.fixed_v_ref, 1.0, ""});
  } else if (intent.mixture) {
    const GaussianMixture& mix = *intent.mixture;
    if (intent.samples_per_mode < 1)
      throw ConfigError("intent.samples_per_mode: must be >= 1");
    for (std::size_t k = 0; k < mix.means.size(); ++k) {
      if (!(mix.stds[k] > 0.0))
        throw ConfigError("intent.mixture.stds: must be positive");
      for (int s = 0; s < intent.samples_per_mode; ++s) {
        const double frac =
            intent.samples_per_mode == 1
                ? 0.5
                : static_cast<double>(s) / (intent.samples_per_mode - 1);
        const double v = mix.means[k] - 2.0 * mix.stds[k] +
                         4.0 * mix.stds[k] * frac;
        types.push_back({v, mix.density(v), ""});
      }
    }
    double total = 0.0;
    for (const SampledType& t : types) total += t.prob;
    if (!(total > 0.0))
      throw ConfigError("intent.mixture: degenerate density at all samples");
    for (SampledType& t : types) t.prob /= total;
  } else {
    throw ConfigError("intent: either v_ref or mixture required");
  }
  for (SampledType& t : types) {
    std::ostringstream label;
    label.precision(3);
    label << "v_ref=" << t.v_ref;
    t.label = label.str();
  }
  return types;
}

struct ScenarioAgent {
  std::string name;
  State initial_state;
  Vec4 q_state = Vec4::Zero();
  Vec2 r_control = Vec2::Zero();
  Lane lane;
  IntentModel intent;
  std::vector<SampledType> types;  // filled by finalize()
};

struct ContingencySetup {
  AgentId ego = 0;
  int branching_step = 5;
  Vec4 q_contingency = Vec4::Zero();
  std::vector<double> lanes;          // rival lane hypotheses (p_y)
  std::vector<double> oa_velocities;  // rival velocity hypotheses
  double p_up = 0.5;  // probability mass of the last lane in `lanes`
  double ea_v_ref = 1.0;
  AgentId rival = 1;
};

struct ClosedLoopDefaults {
  int duration_steps = 100;
  int replan_steps = 20;
  double obs_std = 0.1;
  double belief_floor = 1e-4;
};

struct ScenarioConfig {
  std::string kind;  // merging | intersection | overtaking
  int horizon = 100;
  double dt = 0.1;
  double wheelbase = 2.0;
  double circle_offset = -1.0;  // < 0: defaults to wheelbase / 4
  CollisionSpec collision;
  double delta_limit = 0.0;  // optional |steering| clamp, 0 = off
  double accel_limit = 0.0;  // optional |accel| clamp, 0 = off
  std::uint64_t seed = 0;
  std::vector<ScenarioAgent> agents;
  std::optional<ContingencySetup> contingency;
  ClosedLoopDefaults closed_loop;

  FootprintModel footprint() const {
    const double off = circle_offset >= 0.0 ? circle_offset : wheelbase / 4.0;
    return FootprintModel{off, -off};
  }

  void finalize() {
    if (agents.empty()) throw ConfigError("agents: at least one required");
    for (auto& agent : agents) agent.types = sample_types(agent.intent);
  }
};

// ---------------------------------------------------------------------------
// Game builders
// ---------------------------------------------------------------------------

/// Per-agent probability vectors over the sampled types.
using Belief = std::vector<std::vector<double>>;

inline Belief prior_belief(const ScenarioConfig& cfg) {
  Belief belief;
  for (const auto& agent : cfg.agents) {
    std::vector<double> probs;
    for (const auto& t : agent.types) probs.push_back(t.prob);
    belief.push_back(std::move(probs));
  }
  return belief;
}

/// Bayesian game over the sampled types. `selected` restricts an agent to a
/// single type index (< 0 keeps the full type set); `belief` overrides the
/// sampled marginals; `start_step` offsets the lane references (receding
/// horizon); `current` overrides initial states.
struct GameBuildOptions {
  std::vector<int> selected;          // per agent; -1 = all types
  std::optional<Belief> belief;
  std::vector<State> current_states;  // empty = scenario initial states
  int start_step = 0;
  int horizon = -1;                   // -1 = scenario horizon
};

inline GameSpec build_game(const ScenarioConfig& cfg,
                           const GameBuildOptions& opts = {}) {
  const int N = static_cast<int>(cfg.agents.size());
  const int T = opts.horizon > 0 ? opts.horizon : cfg.horizon;
  GameSpec game;
  game.horizon = T;
  game.dt = cfg.dt;
  game.wheelbase = cfg.wheelbase;
  game.collision = cfg.collision;
  game.footprint = cfg.footprint();

  std::vector<std::vector<double>> marginals(N);
  for (int i = 0; i < N; ++i) {
    const ScenarioAgent& agent = cfg.agents[i];
    const int pick = opts.selected.empty() ? -1 : opts.selected[i];
    const State start = opts.current_states.empty() ? agent.initial_state
                                                    : opts.current_states[i];
    std::vector<int> type_ids;
    if (pick >= 0) {
      type_ids.push_back(pick);
      marginals[i] = {1.0};
    } else {
      for (int t = 0; t < static_cast<int>(agent.types.size()); ++t)
        type_ids.push_back(t);
      if (opts.belief) {
        marginals[i] = (*opts.belief)[i];
      } else {
        for (const auto& t : agent.types) marginals[i].push_back(t.prob);
      }
    }
    int next_index = 0;
    for (int t : type_ids) {
      TypePlayer tp;
      tp.agent = i;
      tp.type_index = next_index++;
      tp.initial_state = start;
      tp.label = agent.name + ":" + agent.types[t].label;
      for (int tau = 0; tau <= T; ++tau) {
        tp.reference.push_back(agent.lane.state_at(
            agent.types[t].v_ref, opts.start_step + tau, cfg.dt));
      }
      game.players.push_back(std::move(tp));
      game.q_state.push_back(agent.q_state);
      game.r_control.push_back(agent.r_control);
    }
  }
  game.prior = BeliefPrior::independent(marginals);
  game.validate();
  return game;
}

/// Hypothesis set of the overtaking-style contingency scenario: the rival
/// follows one of lanes x velocities; the ego tracks the other lane at its
/// own reference velocity. The mass `p_up` goes to the last lane, split
/// uniformly over its velocities.
inline std::pair<HypothesisSet, GameSpec> build_contingency_inputs(
    const ScenarioConfig& cfg) {
  if (!cfg.contingency)
    throw ConfigError("contingency: block required for this scenario");
  const ContingencySetup& setup = *cfg.contingency;
  if (cfg.agents.size() != 2)
    throw ConfigError("contingency: exactly two agents supported");
  if (setup.lanes.size() < 1 || setup.lanes.size() > 2)
    throw ConfigError("contingency.lanes: one or two lanes required");

  HypothesisSet hs;
  const int lanes = static_cast<int>(setup.lanes.size());
  const int vels = static_cast<int>(setup.oa_velocities.size());
  for (int lane = 0; lane < lanes; ++lane) {
    const double lane_mass =
        lanes == 1 ? 1.0 : (lane == lanes - 1 ? setup.p_up : 1.0 - setup.p_up);
    for (int k = 0; k < vels; ++k) {
      hs.probs.push_back(lane_mass / vels);
      std::vector<TypePlayer> row(2);
      for (int i = 0; i < 2; ++i) {
        row[i].initial_state = cfg.agents[i].initial_state;
      }
      const double oa_lane = setup.lanes[lane];
      const double ea_lane =
          lanes == 1 ? setup.lanes[0] : setup.lanes[lanes - 1 - lane];
      const double oa_v = setup.oa_velocities[k];
      for (int tau = 0; tau <= cfg.horizon; ++tau) {
        Lane oa{Vec2(cfg.agents[setup.rival].initial_state.px, oa_lane), 0.0};
        Lane ea{Vec2(cfg.agents[setup.ego].initial_state.px, ea_lane), 0.0};
        row[setup.rival].reference.push_back(
            oa.state_at(oa_v, tau, cfg.dt));
        row[setup.ego].reference.push_back(
            ea.state_at(setup.ea_v_ref, tau, cfg.dt));
      }
      hs.types.push_back(std::move(row));
    }
  }

  GameSpec base;
  base.horizon = cfg.horizon;
  base.dt = cfg.dt;
  base.wheelbase = cfg.wheelbase;
  base.collision = cfg.collision;
  base.footprint = cfg.footprint();
  std::vector<std::vector<double>> trivial(2, std::vector<double>{1.0});
  base.prior = BeliefPrior::independent(trivial);
  for (int i = 0; i < 2; ++i) {
    TypePlayer tp;
    tp.agent = i;
    tp.type_index = 0;
    tp.initial_state = cfg.agents[i].initial_state;
    tp.reference.assign(cfg.horizon + 1, cfg.agents[i].initial_state);
    base.players.push_back(tp);
    base.q_state.push_back(cfg.agents[i].q_state);
    base.r_control.push_back(cfg.agents[i].r_control);
  }
  return {std::move(hs), std::move(base)};
}

// ---------------------------------------------------------------------------
// JSON parsing
// ---------------------------------------------------------------------------

namespace detail {

using nlohmann::json;

inline const json& require(const json& j, const std::string& key,
                           const std::string& path) {
  if (!j.contains(key)) throw ConfigError(path + "." + key + ": missing");
  return j.at(key);
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

inline Vec4 parse_vec4(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 4)
    throw ConfigError(path + ": expected 4 numbers");
  return Vec4(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
              j[3].get<double>());
}

inline Vec2 parse_vec2(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2)
    throw ConfigError(path + ": expected 2 numbers");
  return Vec2(j[0].get<double>(), j[1].get<double>());
}

}  // namespace detail

inline ScenarioConfig parse_scenario(const nlohmann::json& j) {
  using detail::get_or;
  using detail::require;
  ScenarioConfig cfg;
  try {
    cfg.kind = require(j, "scenario", "$").get<std::string>();
    cfg.horizon = require(j, "horizon", "$").get<int>();
    cfg.dt = require(j, "dt", "$").get<double>();
    cfg.wheelbase = require(j, "wheelbase", "$").get<double>();
    cfg.circle_offset = get_or(j, "circle_offset", -1.0);
    cfg.collision.d_safe = require(j, "d_safe", "$").get<double>();
    cfg.collision.beta = require(j, "beta", "$").get<double>();
    cfg.delta_limit = get_or(j, "delta_limit", 0.0);
    cfg.accel_limit = get_or(j, "accel_limit", 0.0);
    cfg.seed = get_or<std::uint64_t>(j, "seed", 0);

    const auto& agents = require(j, "agents", "$");
    for (std::size_t i = 0; i < agents.size(); ++i) {
      const std::string path = "$.agents[" + std::to_string(i) + "]";
      const auto& a = agents[i];
      ScenarioAgent agent;
      agent.name = get_or<std::string>(a, "name", "agent" + std::to_string(i));
      const Vec4 x0 = detail::parse_vec4(require(a, "initial_state", path),
                                         path + ".initial_state");
      agent.initial_state = State::from_vec(x0);
      agent.q_state = detail::parse_vec4(require(a, "q", path), path + ".q");
      agent.r_control =
          detail::parse_vec2(require(a, "r", path), path + ".r");
      if (a.contains("lane")) {
        const auto& lane = a.at("lane");
        agent.lane.origin = detail::parse_vec2(
            require(lane, "origin", path + ".lane"), path + ".lane.origin");
        agent.lane.heading =
            require(lane, "heading", path + ".lane").get<double>();
      } else {
        agent.lane.origin = agent.initial_state.position();
        agent.lane.heading = agent.initial_state.theta;
      }
      const auto& intent = require(a, "intent", path);
      if (intent.contains("v_ref")) {
        agent.intent.fixed_v_ref = intent.at("v_ref").get<double>();
      } else if (intent.contains("mixture")) {
        const auto& mix = intent.at("mixture");
        GaussianMixture gm;
        gm.weights =
            require(mix, "weights", path + ".intent.mixture").get<std::vector<double>>();
        gm.means =
            require(mix, "means", path + ".intent.mixture").get<std::vector<double>>();
        gm.stds =
            require(mix, "stds", path + ".intent.mixture").get<std::vector<double>>();
        if (gm.weights.size() != gm.means.size() ||
            gm.means.size() != gm.stds.size())
          throw ConfigError(path + ".intent.mixture: ragged arrays");
        double wsum = 0.0;
        for (double w : gm.weights) wsum += w;
        if (std::abs(wsum - 1.0) > 1e-9)
          throw ConfigError(path + ".intent.mixture.weights: sum to " +
                            std::to_string(wsum) + ", not 1");
        agent.intent.mixture = std::move(gm);
        agent.intent.samples_per_mode =
            get_or(intent, "samples_per_mode", 5);
      } else {
        throw ConfigError(path + ".intent: v_ref or mixture required");
      }
      cfg.agents.push_back(std::move(agent));
    }

    if (j.contains("contingency")) {
      const auto& c = j.at("contingency");
      ContingencySetup setup;
      setup.ego = get_or(c, "ego", 0);
      setup.rival = get_or(c, "rival", 1);
      setup.branching_step =
          require(c, "branching_step", "$.contingency").get<int>();
      setup.q_contingency =
          detail::parse_vec4(require(c, "q_contingency", "$.contingency"),
                             "$.contingency.q_contingency");
      setup.lanes = require(c, "lanes", "$.contingency")
                        .get<std::vector<double>>();
      setup.oa_velocities = require(c, "oa_velocities", "$.contingency")
                                .get<std::vector<double>>();
      setup.p_up = get_or(c, "p_up", 0.5);
      setup.ea_v_ref = get_or(c, "ea_v_ref", 1.0);
      cfg.contingency = std::move(setup);
    }

    if (j.contains("closed_loop")) {
      const auto& cl = j.at("closed_loop");
      cfg.closed_loop.duration_steps =
          get_or(cl, "duration_steps", cfg.closed_loop.duration_steps);
      cfg.closed_loop.replan_steps =
          get_or(cl, "replan_steps", cfg.closed_loop.replan_steps);
      cfg.closed_loop.obs_std = get_or(cl, "obs_std", cfg.closed_loop.obs_std);
      cfg.closed_loop.belief_floor =
          get_or(cl, "belief_floor", cfg.closed_loop.belief_floor);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  cfg.finalize();
  return cfg;
}

inline ScenarioConfig load_scenario(const std::string& config_path) {
  std::ifstream in(config_path);
  if (!in) throw ConfigError("config: cannot open " + config_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: parse failure in " + config_path + ": " +
                      e.what());
  }
  return parse_scenario(j);
}

}  // namespace trajgame
