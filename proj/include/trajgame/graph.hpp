#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "trajgame/costs.hpp"
#include "trajgame/game.hpp"
#include "trajgame/types.hpp"

namespace trajgame {

enum class EdgeKind {
  kCollision,  // cross-agent circle-pair hinge cost, weighted by p(t_a, t_b)
  kConsensus,  // same-agent pre-branch gap penalty between contingency plans
};

/// Undirected coupling edge between two type-players. Endpoints satisfy
/// a < b. Every edge carries a 4-slice of consensus variables per timestep:
/// circle pairs (ff, fr, rf, rr) for collision edges, state components for
/// consensus edges.
struct InteractionEdge {
  int a = 0;
  int b = 0;
  EdgeKind kind = EdgeKind::kCollision;
  double pair_prob = 0.0;        // collision edges: p(t_a, t_b)
  int branch_steps = 0;          // consensus edges: penalty active for tau < t_b
  Vec4 weight = Vec4::Zero();    // consensus edges: Q_contingency diagonal

  int other(int v) const { return v == a ? b : a; }
};

inline constexpr int kEdgeSliceDim = 4;

/// Interaction graph over type-players. Per vertex, adjacent edges are kept
/// in ascending neighbor order; the stacked ADMM vectors of a vertex
/// concatenate one 4-slice per adjacent edge per timestep in that order.
struct InteractionGraph {
  int num_vertices = 0;
  std::vector<InteractionEdge> edges;
  std::vector<std::vector<int>> adjacency;  // vertex -> edge indices

  int degree(int v) const { return static_cast<int>(adjacency[v].size()); }

  /// Dimension of the stacked per-timestep vector of vertex v.
  int stacked_dim(int v) const { return kEdgeSliceDim * degree(v); }

  /// Position of edge e within vertex v's adjacency list.
  int slot_of(int v, int e) const {
    const auto& adj = adjacency[v];
    for (std::size_t k = 0; k < adj.size(); ++k) {
      if (adj[k] == e) return static_cast<int>(k);
    }
    throw ConfigError("graph: edge " + std::to_string(e) +
                      " not adjacent to vertex " + std::to_string(v));
  }

  void finalize() {
    adjacency.assign(num_vertices, {});
    for (std::size_t e = 0; e < edges.size(); ++e) {
      adjacency[edges[e].a].push_back(static_cast<int>(e));
      adjacency[edges[e].b].push_back(static_cast<int>(e));
    }
    // Ascending neighbor order fixes the selector layout deterministically.
    for (int v = 0; v < num_vertices; ++v) {
      std::sort(adjacency[v].begin(), adjacency[v].end(),
                [&](int lhs, int rhs) {
                  return edges[lhs].other(v) < edges[rhs].other(v);
                });
    }
  }
};

/// Graph of the plain Bayesian game: one collision edge per cross-agent
/// type pair with positive joint probability.
inline InteractionGraph build_bayesian_graph(const GameSpec& game) {
  InteractionGraph graph;
  graph.num_vertices = game.num_vertices();
  for (int v = 0; v < game.num_vertices(); ++v) {
    for (int w = v + 1; w < game.num_vertices(); ++w) {
      if (game.players[v].agent == game.players[w].agent) continue;
      const double p = game.pair_prob(v, w);
      if (p <= 0.0) continue;
      InteractionEdge edge;
      edge.a = v;
      edge.b = w;
      edge.kind = EdgeKind::kCollision;
      edge.pair_prob = p;
      graph.edges.push_back(edge);
    }
  }
  graph.finalize();
  return graph;
}

/// Extracts the 4-entry slice of edge e from vertex v's stacked vector.
inline Vec4 selector_apply(const InteractionGraph& graph, int e, int v,
                           const VecX& stacked) {
  if (stacked.size() != graph.stacked_dim(v))
    throw ConfigError("selector_apply: stacked vector length mismatch");
  return stacked.segment<kEdgeSliceDim>(kEdgeSliceDim * graph.slot_of(v, e));
}

/// Adds `slice` into edge e's slot of vertex v's stacked vector (the
/// transpose-scatter of selector_apply).
inline void selector_scatter(const InteractionGraph& graph, int e, int v,
                             const Vec4& slice, VecX& stacked) {
  stacked.segment<kEdgeSliceDim>(kEdgeSliceDim * graph.slot_of(v, e)) += slice;
}

/// True (non-convexified) cost carried by one edge under strategy X, as it
/// enters the solver objective.
inline double edge_cost(const GameSpec& game, const InteractionEdge& edge,
                        const JointStrategy& X) {
  if (edge.kind == EdgeKind::kCollision) {
    return edge.pair_prob *
           collision_cost(X[edge.a], X[edge.b], game.footprint, game.collision);
  }
  double cost = 0.0;
  for (int tau = 0; tau < edge.branch_steps; ++tau) {
    const Vec4 gap = X[edge.a].states[tau].vec() - X[edge.b].states[tau].vec();
    cost += 2.0 * weighted_sqnorm(gap, edge.weight);
  }
  return cost;
}


/// Solver objective: weighted ego costs plus all edge costs. For a plain
/// Bayesian graph this equals potential(); for a contingency graph it is
/// the contingency potential plus the soft consensus penalty.
inline double graph_potential(const GameSpec& game,
                              const InteractionGraph& graph,
                              const JointStrategy& X) {
  check_complete(game, X);
  double value = 0.0;
  for (int v = 0; v < game.num_vertices(); ++v) {
    value += game.vertex_prob(v) *
             ego_cost(X[v], game.players[v].reference, game.q_state[v],
                      game.r_control[v]);
  }
  for (const InteractionEdge& edge : graph.edges) {
    value += edge_cost(game, edge, X);
  }
  return value;
}

/// Convexified edge: per timestep an affine form
///   coeff_a dx^a + coeff_b dx^b + offset
/// whose squared norm reproduces the edge cost to first order at the
/// nominal. Probability weights are already absorbed (sqrt(p_e) for
/// collision edges, sqrt(2 Q_c) for consensus edges). Coefficient entries
/// are only written where active[tau] is set; readers must check the flag.
struct EdgeConvexification {
  std::vector<Mat4> coeff_a;
  std::vector<Mat4> coeff_b;
  std::vector<Vec4> offsets;
  std::vector<char> active;
  int active_lo = 0;  // [active_lo, active_hi): hull of the active timesteps
  int active_hi = 0;

  double evaluate(const std::vector<Vec4>& dxa,
                  const std::vector<Vec4>& dxb) const {
    double val = 0.0;
    for (std::size_t tau = 0; tau < offsets.size(); ++tau) {
      if (!active[tau]) continue;
      const Vec4 affine =
          coeff_a[tau] * dxa[tau] + coeff_b[tau] * dxb[tau] + offsets[tau];
      val += affine.squaredNorm();
    }
    return val;
  }
};

/// Per-trajectory position bounds over fixed timestep blocks; lets edge
/// scans rule out whole blocks against the activation cutoff.
struct PositionBlocks {
  static constexpr int kBlock = 16;
  // per block: min_x, max_x, min_y, max_y
  std::vector<std::array<double, 4>> bounds;

  void build(const Trajectory& traj) {
    const int n = static_cast<int>(traj.states.size());
    bounds.assign((n + kBlock - 1) / kBlock,
                  {std::numeric_limits<double>::infinity(),
                   -std::numeric_limits<double>::infinity(),
                   std::numeric_limits<double>::infinity(),
                   -std::numeric_limits<double>::infinity()});
    for (int tau = 0; tau < n; ++tau) {
      auto& b = bounds[tau / kBlock];
      b[0] = std::min(b[0], traj.states[tau].px);
      b[1] = std::max(b[1], traj.states[tau].px);
      b[2] = std::min(b[2], traj.states[tau].py);
      b[3] = std::max(b[3], traj.states[tau].py);
    }
  }

  /// Lower bound on the center distance between the two blocks.
  static double gap(const std::array<double, 4>& a,
                    const std::array<double, 4>& b) {
    const double dx = std::max({0.0, a[0] - b[1], b[0] - a[1]});
    const double dy = std::max({0.0, a[2] - b[3], b[2] - a[3]});
    return std::sqrt(dx * dx + dy * dy);
  }
};

/// collision_cost with block-level skipping; bit-identical to the plain
/// evaluation (skipped blocks contribute exactly zero).
inline double collision_cost_blocked(const Trajectory& traj_i,
                                     const Trajectory& traj_j,
                                     const FootprintModel& footprint,
                                     const CollisionSpec& spec,
                                     const PositionBlocks& blocks_i,
                                     const PositionBlocks& blocks_j) {
  const double reach = std::max(std::abs(footprint.front_offset),
                                std::abs(footprint.rear_offset));
  const double cutoff = spec.d_safe + 2.0 * reach;
  double cost = 0.0;
  const std::size_t len = traj_i.states.size();
  for (std::size_t tau = 0; tau < len; ++tau) {
    if (tau % PositionBlocks::kBlock == 0) {
      const std::size_t block = tau / PositionBlocks::kBlock;
      if (PositionBlocks::gap(blocks_i.bounds[block],
                              blocks_j.bounds[block]) >= cutoff) {
        tau += PositionBlocks::kBlock - 1;
        continue;
      }
    }
    if ((traj_i.states[tau].position() - traj_j.states[tau].position())
            .squaredNorm() >= cutoff * cutoff) {
      continue;
    }
    const auto ci = circle_centers(traj_i.states[tau], footprint);
    const auto cj = circle_centers(traj_j.states[tau], footprint);
    const auto sq = [&](const Vec2& a, const Vec2& b) {
      const double l = hinge_l((a - b).norm(), spec);
      return l * l;
    };
    cost += (sq(ci[0], cj[0]) + sq(ci[1], cj[1])) +
            (sq(ci[0], cj[1]) + sq(ci[1], cj[0]));
  }
  return cost;
}

/// In-place convexification; reuses the target's buffers across outer
/// iterations. When block bounds for both endpoints are supplied, blocks
/// provably outside the activation cutoff are skipped without scanning.
inline void convexify_edge_into(const GameSpec& game,
                                const InteractionEdge& edge,
                                const JointStrategy& nominal,
                                EdgeConvexification& cx,
                                const PositionBlocks* blocks_a = nullptr,
                                const PositionBlocks* blocks_b = nullptr) {
  const std::size_t len = nominal[edge.a].states.size();
  cx.coeff_a.resize(len);
  cx.coeff_b.resize(len);
  cx.offsets.resize(len);
  cx.active.assign(len, 0);
  cx.active_lo = static_cast<int>(len);
  cx.active_hi = 0;

  if (edge.kind == EdgeKind::kCollision) {
    const Trajectory& ta = nominal[edge.a];
    const Trajectory& tb = nominal[edge.b];
    const FootprintModel& fp = game.footprint;
    const CollisionSpec& spec = game.collision;
    const double scale = std::sqrt(edge.pair_prob) * std::sqrt(spec.beta);
    const double reach =
        std::max(std::abs(fp.front_offset), std::abs(fp.rear_offset));
    const double cutoff = spec.d_safe + 2.0 * reach;
    const auto offs = fp.offsets();
    for (std::size_t tau = 0; tau < len; ++tau) {
      if (blocks_a && blocks_b && tau % PositionBlocks::kBlock == 0) {
        const std::size_t block = tau / PositionBlocks::kBlock;
        if (PositionBlocks::gap(blocks_a->bounds[block],
                                blocks_b->bounds[block]) >= cutoff) {
          tau += PositionBlocks::kBlock - 1;
          continue;
        }
      }
      const State& xa = ta.states[tau];
      const State& xb = tb.states[tau];
      if ((xa.position() - xb.position()).squaredNorm() >= cutoff * cutoff)
        continue;
      const auto ca = circle_centers(xa, fp);
      const auto cb = circle_centers(xb, fp);
      double dist[4];
      bool any = false;
      for (int eta = 0; eta < 2; ++eta) {
        for (int gamma = 0; gamma < 2; ++gamma) {
          const double d = (ca[eta] - cb[gamma]).norm();
          dist[2 * eta + gamma] = d;
          any = any || (d < spec.d_safe && d >= 1e-12);
        }
      }
      if (!any) continue;
      cx.active[tau] = 1;
      cx.active_lo = std::min(cx.active_lo, static_cast<int>(tau));
      cx.active_hi = std::max(cx.active_hi, static_cast<int>(tau) + 1);
      cx.coeff_a[tau].setZero();
      cx.coeff_b[tau].setZero();
      cx.offsets[tau].setZero();
      for (int eta = 0; eta < 2; ++eta) {
        for (int gamma = 0; gamma < 2; ++gamma) {
          const int pair = 2 * eta + gamma;
          const double d = dist[pair];
          if (d >= spec.d_safe || d < 1e-12) continue;
          const Vec2 dir = (ca[eta] - cb[gamma]) / d;
          cx.offsets[tau][pair] = scale * (d - spec.d_safe);
          cx.coeff_a[tau].row(pair) =
              scale * dir.transpose() * detail::center_jacobian(xa, offs[eta]);
          cx.coeff_b[tau].row(pair) = -scale * dir.transpose() *
                                      detail::center_jacobian(xb, offs[gamma]);
        }
      }
    }
    return;
  }
  // Consensus edge: the gap penalty is already a squared function of a
  // linear combination, so the affine form is exact (no approximation).
  const Vec4 scale = (2.0 * edge.weight).cwiseSqrt();
  const Mat4 coeff = scale.asDiagonal();
  for (int tau = 0; tau < edge.branch_steps; ++tau) {
    cx.coeff_a[tau] = coeff;
    cx.coeff_b[tau] = -coeff;
    cx.offsets[tau] = scale.cwiseProduct(nominal[edge.a].states[tau].vec() -
                                         nominal[edge.b].states[tau].vec());
    cx.active[tau] = 1;
  }
  if (edge.branch_steps > 0) {
    cx.active_lo = 0;
    cx.active_hi = edge.branch_steps;
  }
}

inline EdgeConvexification convexify_edge(const GameSpec& game,
                                          const InteractionEdge& edge,
                                          const JointStrategy& nominal) {
  EdgeConvexification cx;
  convexify_edge_into(game, edge, nominal, cx);
  return cx;
}

}  // namespace trajgame
