#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "trajgame/belief.hpp"
#include "trajgame/costs.hpp"
#include "trajgame/types.hpp"

namespace trajgame {

/// Full description of one Bayesian trajectory game instance. Vertices
/// (type-players) are stored in ascending (agent, type_index) order and are
/// addressed everywhere by their index in `players`.
struct GameSpec {
  std::vector<TypePlayer> players;
  BeliefPrior prior;
  int horizon = 0;   // T: number of control steps
  double dt = 0.1;   // seconds
  double wheelbase = 2.0;
  std::vector<Vec4> q_state;    // per vertex, diagonal of Q
  std::vector<Vec2> r_control;  // per vertex, diagonal of R
  CollisionSpec collision;
  FootprintModel footprint;

  int num_vertices() const { return static_cast<int>(players.size()); }

  int num_agents() const { return prior.num_agents(); }

  double vertex_prob(int v) const {
    const TypePlayer& tp = players[v];
    return prior.marginal(tp.agent, tp.type_index);
  }

  double pair_prob(int v, int w) const {
    const TypePlayer& a = players[v];
    const TypePlayer& b = players[w];
    return prior.pair(a.agent, a.type_index, b.agent, b.type_index);
  }

  int vertex_index(AgentId agent, int type_index) const {
    for (int v = 0; v < num_vertices(); ++v) {
      if (players[v].agent == agent && players[v].type_index == type_index)
        return v;
    }
    throw ConfigError("vertex_index: unknown type-player (" +
                      std::to_string(agent) + "," +
                      std::to_string(type_index) + ")");
  }

  std::vector<int> agent_vertices(AgentId agent) const {
    std::vector<int> out;
    for (int v = 0; v < num_vertices(); ++v) {
      if (players[v].agent == agent) out.push_back(v);
    }
    return out;
  }

  void validate() const {
    if (horizon < 1) throw ConfigError("game.horizon: must be >= 1");
    if (dt <= 0.0) throw ConfigError("game.dt: must be positive");
    if (wheelbase <= 0.0) throw ConfigError("game.wheelbase: must be positive");
    if (collision.d_safe <= 0.0) throw ConfigError("game.d_safe: must be positive");
    if (collision.beta <= 0.0) throw ConfigError("game.beta: must be positive");
    if (static_cast<int>(q_state.size()) != num_vertices() ||
        static_cast<int>(r_control.size()) != num_vertices())
      throw ConfigError("game.weights: one Q/R diagonal per type-player required");
    for (int v = 0; v < num_vertices(); ++v) {
      if ((q_state[v].array() < 0.0).any() || (r_control[v].array() < 0.0).any())
        throw ConfigError("game.weights: diagonals must be nonnegative");
      if (static_cast<int>(players[v].reference.size()) != horizon + 1)
        throw ConfigError("game.players[" + std::to_string(v) +
                          "].reference: length must be horizon+1");
    }
    for (int v = 1; v < num_vertices(); ++v) {
      const TypePlayer& prev = players[v - 1];
      const TypePlayer& cur = players[v];
      if (std::make_pair(prev.agent, prev.type_index) >=
          std::make_pair(cur.agent, cur.type_index))
        throw ConfigError("game.players: must be strictly ascending in (agent, type)");
    }
  }
};

/// One trajectory per type-player, indexed like GameSpec::players.
using JointStrategy = std::vector<Trajectory>;

inline void check_complete(const GameSpec& game, const JointStrategy& strategy) {
  if (static_cast<int>(strategy.size()) != game.num_vertices())
    throw ConfigError("strategy: one trajectory per type-player required");
  for (const Trajectory& traj : strategy) {
    if (traj.horizon() != game.horizon)
      throw ConfigError("strategy: trajectory horizon mismatch");
  }
}

/// Expected cost of type-player v under the common prior, in the
/// pair-marginalized form
///   C_v = c_v(X^v) + sum_{j != agent(v)} sum_{t_j} p(t_j | t_v) c_{v,t_j}.
inline double expected_type_cost(const GameSpec& game, const JointStrategy& X,
                                 int v) {
  check_complete(game, X);
  const TypePlayer& tp = game.players[v];
  double cost = ego_cost(X[v], tp.reference, game.q_state[v], game.r_control[v]);
  for (int w = 0; w < game.num_vertices(); ++w) {
    if (game.players[w].agent == tp.agent) continue;
    const double cond = game.prior.conditional(
        game.players[w].agent, game.players[w].type_index, tp.agent,
        tp.type_index);
    if (cond <= 0.0) continue;
    cost += cond * collision_cost(X[v], X[w], game.footprint, game.collision);
  }
  return cost;
}

/// Potential of the Bayesian game:
///   P(X) = sum_v p(t_v) c_v(X^v)
///        + sum_{cross-agent pairs v < w} p(t_v, t_w) c_{vw}(X^v, X^w).
inline double potential(const GameSpec& game, const JointStrategy& X) {
  check_complete(game, X);
  double value = 0.0;
  for (int v = 0; v < game.num_vertices(); ++v) {
    value += game.vertex_prob(v) *
             ego_cost(X[v], game.players[v].reference, game.q_state[v],
                      game.r_control[v]);
  }
  for (int v = 0; v < game.num_vertices(); ++v) {
    for (int w = v + 1; w < game.num_vertices(); ++w) {
      if (game.players[v].agent == game.players[w].agent) continue;
      const double p = game.pair_prob(v, w);
      if (p <= 0.0) continue;
      value += p * collision_cost(X[v], X[w], game.footprint, game.collision);
    }
  }
  return value;
}

/// Residual of the potential-game identity for a unilateral deviation of
/// vertex v to X_alt:
///   | [P(X) - P(X_alt-in-place)] - p(t_v) [C_v(X) - C_v(X_alt-in-place)] |.
inline double potential_identity_residual(const GameSpec& game,
                                          const JointStrategy& X, int v,
                                          const Trajectory& x_alt) {
  if (!X.at(v).shape_matches(x_alt))
    throw ConfigError("potential_identity_residual: deviation shape mismatch");
  JointStrategy X_dev = X;
  X_dev[v] = x_alt;
  const double lhs = potential(game, X) - potential(game, X_dev);
  const double rhs = game.vertex_prob(v) * (expected_type_cost(game, X, v) -
                                            expected_type_cost(game, X_dev, v));
  return std::abs(lhs - rhs);
}

/// Type of `agent` minimizing the expected cost under X; ties broken by
/// lowest type_index.
inline int best_type(const GameSpec& game, const JointStrategy& X,
                     AgentId agent) {
  const std::vector<int> verts = game.agent_vertices(agent);
  if (verts.empty())
    throw ConfigError("best_type: agent " + std::to_string(agent) +
                      " has no types");
  int best = verts.front();
  double best_cost = expected_type_cost(game, X, best);
  for (std::size_t k = 1; k < verts.size(); ++k) {
    const double c = expected_type_cost(game, X, verts[k]);
    if (c < best_cost) {
      best_cost = c;
      best = verts[k];
    }
  }
  return best;
}

}  // namespace trajgame
