#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "trajgame/belief.hpp"
#include "trajgame/dynamics.hpp"
#include "trajgame/game.hpp"
#include "trajgame/graph.hpp"
#include "trajgame/types.hpp"

namespace trajgame {

/// A set of scenario outcomes. Hypothesis theta assigns one type-player per
/// agent; types[theta][agent] carries that agent's reference and initial
/// state under the outcome.
struct HypothesisSet {
  std::vector<double> probs;                   // p(theta), strictly positive
  std::vector<std::vector<TypePlayer>> types;  // [theta][agent]

  int num_hypotheses() const { return static_cast<int>(probs.size()); }
  int num_agents() const {
    return types.empty() ? 0 : static_cast<int>(types.front().size());
  }

  void validate() const {
    if (probs.empty()) throw ConfigError("hypotheses: empty set");
    if (types.size() != probs.size())
      throw ConfigError("hypotheses: one type row per hypothesis required");
    double sum = 0.0;
    for (double p : probs) {
      if (!(p > kMinTypeProbability))
        throw ConfigError("hypotheses: probabilities must be strictly positive");
      sum += p;
    }
    if (std::abs(sum - 1.0) > kProbabilitySumTol)
      throw ConfigError("hypotheses: probabilities sum to " +
                        std::to_string(sum) + ", not 1");
    for (const auto& row : types) {
      if (row.size() != types.front().size())
        throw ConfigError("hypotheses: ragged type rows");
    }
  }
};

struct ContingencyConfig {
  AgentId ego = 0;
  int branching_step = 0;              // t_b
  Vec4 q_contingency = Vec4::Zero();   // diagonal consensus weight
};

/// Correlated prior of the contingency game: each agent's types are indexed
/// by hypothesis, marginals equal p(theta), and the pairwise tables are
/// block-diagonal: p(t^theta_i, t^theta'_j) = p(theta) iff theta == theta'.
inline BeliefPrior build_correlated_prior(const HypothesisSet& hypotheses) {
  hypotheses.validate();
  const int H = hypotheses.num_hypotheses();
  const int N = hypotheses.num_agents();
  std::vector<std::vector<double>> marginals(N, hypotheses.probs);
  BeliefPrior prior(std::move(marginals));
  MatX table = MatX::Zero(H, H);
  for (int h = 0; h < H; ++h) table(h, h) = hypotheses.probs[h];
  for (AgentId i = 0; i < N; ++i) {
    for (AgentId j = i + 1; j < N; ++j) prior.set_pair_table(i, j, table);
  }
  return prior;
}

/// Maps the contingency game onto the Bayesian-game machinery: the returned
/// GameSpec carries the correlated prior (so potential() equals the
/// hypothesis-weighted contingency potential P'), and the graph adds one
/// consensus edge per unordered ego-hypothesis pair so that
/// graph_potential() equals P' plus the soft pre-branch penalty.
///
/// `base` supplies horizon, timestep, wheelbase, collision parameters and
/// per-agent cost weights; it must hold exactly one type per agent.
inline std::pair<GameSpec, InteractionGraph> build_contingency_game(
    const HypothesisSet& hypotheses, const ContingencyConfig& cfg,
    const GameSpec& base) {
  hypotheses.validate();
  const int H = hypotheses.num_hypotheses();
  const int N = hypotheses.num_agents();
  if (base.num_agents() != N || base.num_vertices() != N)
    throw ConfigError(
        "build_contingency_game: base must hold exactly one type per agent");
  if (cfg.ego < 0 || cfg.ego >= N)
    throw ConfigError("build_contingency_game: ego agent out of range");
  if (cfg.branching_step < 0 || cfg.branching_step > base.horizon)
    throw ConfigError("build_contingency_game: branching step out of range");
  if ((cfg.q_contingency.array() < 0.0).any())
    throw ConfigError("build_contingency_game: negative consensus weight");

  GameSpec game;
  game.horizon = base.horizon;
  game.dt = base.dt;
  game.wheelbase = base.wheelbase;
  game.collision = base.collision;
  game.footprint = base.footprint;
  game.prior = build_correlated_prior(hypotheses);
  for (AgentId i = 0; i < N; ++i) {
    const int base_vertex = base.agent_vertices(i).front();
    for (int h = 0; h < H; ++h) {
      TypePlayer tp = hypotheses.types[h][i];
      tp.agent = i;
      tp.type_index = h;
      game.players.push_back(std::move(tp));
      game.q_state.push_back(base.q_state[base_vertex]);
      game.r_control.push_back(base.r_control[base_vertex]);
    }
  }
  game.validate();

  InteractionGraph graph = build_bayesian_graph(game);
  for (int h = 0; h < H; ++h) {
    for (int h2 = h + 1; h2 < H; ++h2) {
      InteractionEdge edge;
      edge.a = game.vertex_index(cfg.ego, h);
      edge.b = game.vertex_index(cfg.ego, h2);
      edge.kind = EdgeKind::kConsensus;
      edge.branch_steps = cfg.branching_step;
      edge.weight = cfg.q_contingency;
      graph.edges.push_back(edge);
    }
  }
  graph.finalize();
  return {std::move(game), std::move(graph)};
}

/// Deviation used by the contingency-potential identity check: either the ego agent's
/// full hypothesis stack moves at once, or a single rival (agent, theta)
/// plan moves.
struct ContingencyPerturbation {
  bool ego_stack = false;
  std::vector<Trajectory> ego_plans;  // one per hypothesis when ego_stack
  AgentId agent = 0;                  // != ego when !ego_stack
  int hypothesis = 0;
  Trajectory plan;
};

/// Residual of the contingency-potential identity on the correlated game
/// (no consensus edges involved):
///   ego stack:   | dP' - sum_theta p(theta) dC_{t^theta_ego} |
///   rival (i,h): | dP' - p(h) dC_{t^h_i} |.
inline double contingency_identity_residual(
    const HypothesisSet& hypotheses, const ContingencyConfig& cfg,
    const GameSpec& base, const JointStrategy& X,
    const ContingencyPerturbation& perturbation) {
  const auto built = build_contingency_game(hypotheses, cfg, base);
  const GameSpec& game = built.first;
  check_complete(game, X);

  if (!perturbation.ego_stack) {
    if (perturbation.agent == cfg.ego)
      throw ConfigError(
          "contingency_identity_residual: single-plan deviation must target "
          "a rival agent");
    const int v = game.vertex_index(perturbation.agent, perturbation.hypothesis);
    return potential_identity_residual(game, X, v, perturbation.plan);
  }

  if (static_cast<int>(perturbation.ego_plans.size()) !=
      hypotheses.num_hypotheses())
    throw ConfigError(
        "contingency_identity_residual: ego stack needs one plan per "
        "hypothesis");
  JointStrategy X_dev = X;
  for (int h = 0; h < hypotheses.num_hypotheses(); ++h) {
    const int v = game.vertex_index(cfg.ego, h);
    if (!X[v].shape_matches(perturbation.ego_plans[h]))
      throw ConfigError("contingency_identity_residual: plan shape mismatch");
    X_dev[v] = perturbation.ego_plans[h];
  }
  const double lhs = potential(game, X) - potential(game, X_dev);
  double rhs = 0.0;
  for (int h = 0; h < hypotheses.num_hypotheses(); ++h) {
    const int v = game.vertex_index(cfg.ego, h);
    rhs += hypotheses.probs[h] * (expected_type_cost(game, X, v) -
                                  expected_type_cost(game, X_dev, v));
  }
  return std::abs(lhs - rhs);
}

/// Replaces the ego plans' pre-branch controls by their probability-weighted
/// mean and re-rolls each plan, making the contingency plan strictly
/// executable before t_b.
inline void snap_pre_branch(const GameSpec& game, const HypothesisSet& hypotheses,
                            const ContingencyConfig& cfg, JointStrategy& X) {
  const int H = hypotheses.num_hypotheses();
  std::vector<int> ego_vertices(H);
  for (int h = 0; h < H; ++h) ego_vertices[h] = game.vertex_index(cfg.ego, h);
  for (int tau = 0; tau < cfg.branching_step; ++tau) {
    Vec2 mean = Vec2::Zero();
    for (int h = 0; h < H; ++h) {
      mean += hypotheses.probs[h] * X[ego_vertices[h]].controls[tau].vec();
    }
    for (int h = 0; h < H; ++h)
      X[ego_vertices[h]].controls[tau] = Control::from_vec(mean);
  }
  for (int v : ego_vertices) {
    X[v] = rollout(X[v].states[0], X[v].controls, game.dt, game.wheelbase);
  }
}

}  // namespace trajgame
