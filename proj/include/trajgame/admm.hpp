#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "trajgame/dynamics.hpp"
#include "trajgame/game.hpp"
#include "trajgame/graph.hpp"
#include "trajgame/lqr.hpp"
#include "trajgame/thread_pool.hpp"
#include "trajgame/types.hpp"

namespace trajgame {

/// Parameters of the dual-consensus ADMM game solver.
///
/// The inner loop performs `admm_max_iter` dual-consensus iterations per
/// convexification; when `inner_consensus_tol > 0` it instead iterates until
/// the edge consensus residual drops below the tolerance (capped by
/// `inner_iteration_cap`). The outer loop stops once the accepted potential
/// change falls below `potential_tolerance`.
struct SolverParams {
  double sigma = 1.0;
  double rho = 1.0;
  int admm_max_iter = 3;
  double inner_consensus_tol = -1.0;
  int inner_iteration_cap = 200;
  double potential_tolerance = 0.1;
  int max_outer_iterations = 300;
  int max_stall_iterations = 5;
  std::vector<double> alpha_schedule = {1.0, 0.5, 0.25, 0.125, 0.0625};
  bool warm_start_duals = true;
  int workers = 1;
  double delta_limit = 0.0;  // |delta| clamp after the update, 0 = off
  double accel_limit = 0.0;  // |a| clamp after the update, 0 = off
};

struct OuterIterationDiag {
  int iteration = 0;
  double potential = 0.0;
  double alpha = 0.0;  // 0 when no step was accepted
  double kkt_residual = 0.0;
  double wall_ms = 0.0;
};

struct SolveDiagnostics {
  std::vector<OuterIterationDiag> iterations;
  bool converged = false;
  bool stalled = false;
  double final_potential = 0.0;
  double wall_ms = 0.0;
};

struct SolveResult {
  JointStrategy strategy;
  SolveDiagnostics diagnostics;
};

/// Zero-control rollout from each type-player's initial state; always
/// dynamically feasible.
inline JointStrategy default_initial_strategy(const GameSpec& game) {
  JointStrategy init;
  init.reserve(game.num_vertices());
  const std::vector<Control> zeros(game.horizon);
  for (const TypePlayer& tp : game.players) {
    init.push_back(rollout(tp.initial_state, zeros, game.dt, game.wheelbase));
  }
  return init;
}

/// Distributed solver for the potential game over an interaction graph.
///
/// Outer loop (per convexification):
///   1. linearize dynamics and expand all edge costs about the nominal;
///   2. run dual-consensus ADMM iterations, each solving one LQR subproblem
///      per vertex;
///   3. update trajectories with the resulting feedback policies under a
///      backtracking line search on the true potential.
///
/// Per vertex v and timestep tau, one ADMM iteration computes
///   r = sigma z - lambda - s + sum_edges (rho/2) (own + neighbor y slices)
///   dX = argmin  p_v c_hat_v(dX) + ||C dX + r||^2 / (2(sigma+rho))   (LQR)
///   y' = (C dx + r) / (sigma+rho)
///   z' = (4 s + 4 sigma y' + 2 ell) / (4 sigma + 1)
///   s' = s + sigma (y' - z')
///   lambda'_e = lambda_e + (rho/2) (own y' slice - neighbor y' slice)
///
/// All vertex updates within a phase are independent; a barrier separates
/// the y-exchange from the lambda updates. Results are bit-identical for
/// any worker count.
class AdmmSolver {
 public:
  AdmmSolver(const GameSpec& game, const InteractionGraph& graph,
             SolverParams params)
      : game_(game),
        graph_(graph),
        params_(std::move(params)),
        pool_(std::make_unique<ThreadPool>(params_.workers)) {
    game_.validate();
    const int V = graph_.num_vertices;
    vertices_.resize(V);
    edge_cx_.resize(graph_.edges.size());
    edge_window_.assign(graph_.edges.size(), {0, 0});
    for (int v = 0; v < V; ++v) {
      auto& vs = vertices_[v];
      vs.y.assign(graph_.degree(v),
                  std::vector<Vec4>(game_.horizon + 1, Vec4::Zero()));
      vs.y_next = vs.y;
      vs.z = vs.y;
      vs.s = vs.y;
      vs.lambda = vs.y;
      vs.r = vs.y;
      vs.prob = game_.vertex_prob(v);
      // Cache the neighbor-side slot of every adjacent edge.
      for (int e : graph_.adjacency[v]) {
        const int other = graph_.edges[e].other(v);
        vs.neighbor.push_back(other);
        vs.neighbor_slot.push_back(graph_.slot_of(other, e));
        vs.is_side_a.push_back(graph_.edges[e].a == v);
      }
      vs.lqr_problem.A.resize(game_.horizon);
      vs.lqr_problem.B.resize(game_.horizon);
      vs.lqr_problem.Qxx.resize(game_.horizon + 1);
      vs.lqr_problem.qx.resize(game_.horizon + 1);
      vs.lqr_problem.Ruu.resize(game_.horizon);
      vs.lqr_problem.qu.resize(game_.horizon);
    }
  }

  const GameSpec& game() const { return game_; }
  const InteractionGraph& graph() const { return graph_; }

  /// Replaces the nominal strategy and re-convexifies about it.
  void set_nominal(const JointStrategy& nominal, bool reset_duals) {
    check_complete(game_, nominal);
    nominal_ = nominal;
    if (reset_duals) zero_duals();
    convexify();
  }

  /// One dual-consensus ADMM iteration on the current convexified problem.
  void inner_iteration() {
    const int V = graph_.num_vertices;
    pool_->parallel_for(V, [&](int v) { vertex_iteration(v); });
    pool_->parallel_for(V, [&](int v) { vertex_lambda_update(v); });
    for (auto& vs : vertices_) vs.y.swap(vs.y_next);
  }

  /// Full Algorithm-2 solve from a feasible initial strategy.
  SolveResult solve(const JointStrategy& init) {
    const auto t_start = std::chrono::steady_clock::now();
    check_complete(game_, init);
    for (int v = 0; v < game_.num_vertices(); ++v) {
      if (dynamics_residual(init[v], game_.dt, game_.wheelbase) > 1e-6)
        throw ConfigError("solve: initial trajectory of vertex " +
                          std::to_string(v) + " is not dynamically feasible");
    }
    nominal_ = init;
    zero_duals();

    SolveResult result;
    double current = potential_of(nominal_);
    int stalls = 0;
    for (int outer = 0; outer < params_.max_outer_iterations; ++outer) {
      const auto t_iter = std::chrono::steady_clock::now();
      if (!params_.warm_start_duals) zero_duals();
      convexify();

      if (params_.inner_consensus_tol > 0.0) {
        for (int k = 0; k < params_.inner_iteration_cap; ++k) {
          inner_iteration();
          if (max_consensus_residual() < params_.inner_consensus_tol) break;
        }
      } else {
        for (int k = 0; k < params_.admm_max_iter; ++k) inner_iteration();
      }

      const LineSearchOutcome ls = line_search(current);
      OuterIterationDiag diag;
      diag.iteration = outer;
      diag.alpha = ls.accepted ? ls.alpha : 0.0;
      diag.kkt_residual = std::max(max_consensus_residual(), max_lambda_sum());
      if (ls.accepted) {
        const double drop = current - ls.potential;
        nominal_ = std::move(ls_candidate_);
        current = ls.potential;
        stalls = 0;
        diag.potential = current;
        diag.wall_ms = ms_since(t_iter);
        result.diagnostics.iterations.push_back(diag);
        if (drop < params_.potential_tolerance) {
          result.diagnostics.converged = true;
          break;
        }
      } else {
        diag.potential = current;
        diag.wall_ms = ms_since(t_iter);
        result.diagnostics.iterations.push_back(diag);
        if (ls.best_change < params_.potential_tolerance) {
          // No descent step exists and every candidate moves the potential
          // by less than the tolerance: converged.
          result.diagnostics.converged = true;
          break;
        }
        if (++stalls >= params_.max_stall_iterations) {
          result.diagnostics.stalled = true;
          break;
        }
      }
    }
    result.strategy = nominal_;
    result.diagnostics.final_potential = current;
    result.diagnostics.wall_ms = ms_since(t_start);
    return result;
  }

  /// Potential of X under the solver's graph. Per-vertex and per-edge terms
  /// are computed in parallel into slots and reduced in index order, so the
  /// value is identical for any worker count.
  double potential_of(const JointStrategy& X) const {
    const int V = graph_.num_vertices;
    const int E = static_cast<int>(graph_.edges.size());
    potential_terms_.assign(V + E, 0.0);
    pool_->parallel_for(V + E, [&](int item) {
      if (item < V) {
        const int v = item;
        potential_terms_[item] =
            game_.vertex_prob(v) *
            ego_cost(X[v], game_.players[v].reference, game_.q_state[v],
                     game_.r_control[v]);
      } else {
        potential_terms_[item] = edge_cost(game_, graph_.edges[item - V], X);
      }
    });
    double value = 0.0;
    for (double term : potential_terms_) value += term;
    return value;
  }

  const JointStrategy& nominal() const { return nominal_; }

  /// Deviations solved by the latest LQR subproblem of vertex v.
  const LqrSolution<4, 2>& vertex_solution(int v) const {
    return vertices_[v].lqr;
  }

  // Dual-state accessors (stacked per-timestep vectors of dimension
  // 4 * degree(v), slots in adjacency order), for diagnostics and
  // cross-checks.
  VecX y_value(int v, int tau) const { return stack(vertices_[v].y, v, tau); }
  VecX z_value(int v, int tau) const { return stack(vertices_[v].z, v, tau); }
  VecX s_value(int v, int tau) const { return stack(vertices_[v].s, v, tau); }
  VecX lambda_value(int v, int tau) const {
    return stack(vertices_[v].lambda, v, tau);
  }

  /// Convexified objective at the current per-vertex deviations.
  double convexified_objective() const {
    double val = 0.0;
    for (int v = 0; v < graph_.num_vertices; ++v) {
      const auto& vs = vertices_[v];
      for (int tau = 0; tau <= game_.horizon; ++tau) {
        const Vec4& dx = vs.lqr.dx[tau];
        val += vs.prob * (weighted_sqnorm(dx, game_.q_state[v]) +
                          vs.grad_x[tau].dot(dx));
      }
      for (int tau = 0; tau < game_.horizon; ++tau) {
        const Vec2& du = vs.lqr.du[tau];
        val += vs.prob * (du.cwiseProduct(game_.r_control[v]).dot(du) +
                          vs.grad_u[tau].dot(du));
      }
      val += vs.prob * vs.ego_value;
    }
    for (std::size_t e = 0; e < graph_.edges.size(); ++e) {
      const InteractionEdge& edge = graph_.edges[e];
      const EdgeConvexification& cx = edge_cx_[e];
      for (int tau = 0; tau <= game_.horizon; ++tau) {
        if (!cx.active[tau]) continue;
        const Vec4 affine = cx.coeff_a[tau] * vertices_[edge.a].lqr.dx[tau] +
                            cx.coeff_b[tau] * vertices_[edge.b].lqr.dx[tau] +
                            cx.offsets[tau];
        val += affine.squaredNorm();
      }
    }
    return val;
  }

  /// max over edges and timesteps of || E_a y_a - E_b y_b ||_inf.
  double max_consensus_residual() const {
    double res = 0.0;
    for (std::size_t e = 0; e < graph_.edges.size(); ++e) {
      const InteractionEdge& edge = graph_.edges[e];
      const int sa = graph_.slot_of(edge.a, static_cast<int>(e));
      const int sb = graph_.slot_of(edge.b, static_cast<int>(e));
      for (int tau = 0; tau <= game_.horizon; ++tau) {
        const Vec4 diff =
            vertices_[edge.a].y[sa][tau] - vertices_[edge.b].y[sb][tau];
        res = std::max(res, diff.cwiseAbs().maxCoeff());
      }
    }
    return res;
  }

  /// max over edges and timesteps of || sum_{v in e} lambda_{v,e} ||_inf.
  double max_lambda_sum() const {
    double res = 0.0;
    for (std::size_t e = 0; e < graph_.edges.size(); ++e) {
      const InteractionEdge& edge = graph_.edges[e];
      const int sa = graph_.slot_of(edge.a, static_cast<int>(e));
      const int sb = graph_.slot_of(edge.b, static_cast<int>(e));
      for (int tau = 0; tau <= game_.horizon; ++tau) {
        const Vec4 sum = vertices_[edge.a].lambda[sa][tau] +
                         vertices_[edge.b].lambda[sb][tau];
        res = std::max(res, sum.cwiseAbs().maxCoeff());
      }
    }
    return res;
  }

  /// max over edges and timesteps of the primal coupling residual
  /// || C_a dx_a + C_b dx_b - w_e ||_inf with w_e = sum_{v in e} E_{v,e} s_v.
  double max_primal_coupling_residual() const {
    double res = 0.0;
    for (std::size_t e = 0; e < graph_.edges.size(); ++e) {
      const InteractionEdge& edge = graph_.edges[e];
      const EdgeConvexification& cx = edge_cx_[e];
      const int sa = graph_.slot_of(edge.a, static_cast<int>(e));
      const int sb = graph_.slot_of(edge.b, static_cast<int>(e));
      for (int tau = 0; tau <= game_.horizon; ++tau) {
        const Vec4 coupled =
            cx.active[tau]
                ? Vec4(cx.coeff_a[tau] * vertices_[edge.a].lqr.dx[tau] +
                       cx.coeff_b[tau] * vertices_[edge.b].lqr.dx[tau])
                : Vec4(Vec4::Zero());
        const Vec4 w =
            vertices_[edge.a].s[sa][tau] + vertices_[edge.b].s[sb][tau];
        res = std::max(res, (coupled - w).cwiseAbs().maxCoeff());
      }
    }
    return res;
  }

  /// Reduced-space stationarity residual of vertex v's subproblem against
  /// the edge-consensus duals: adjoint pass of
  ///   p_v c_hat_v(dX) + sum_tau (C_v dx_tau) . y_e
  /// through the linearized dynamics; returns max_tau of the control
  /// gradient infinity norm.
  double vertex_stationarity_residual(int v) const {
    const auto& vs = vertices_[v];
    const int T = game_.horizon;
    std::vector<Vec4> gx(T + 1);
    std::vector<Vec2> gu(T);
    for (int tau = 0; tau <= T; ++tau) {
      gx[tau] = vs.prob * (2.0 * game_.q_state[v].cwiseProduct(vs.lqr.dx[tau]) +
                           vs.grad_x[tau]);
      for (std::size_t m = 0; m < vs.neighbor.size(); ++m) {
        const int e = graph_.adjacency[v][m];
        if (!edge_cx_[e].active[tau]) continue;
        const InteractionEdge& edge = graph_.edges[e];
        const Vec4 y_edge =
            0.5 * (vertices_[edge.a].y[graph_.slot_of(edge.a, e)][tau] +
                   vertices_[edge.b].y[graph_.slot_of(edge.b, e)][tau]);
        const Mat4& coeff =
            vs.is_side_a[m] ? edge_cx_[e].coeff_a[tau] : edge_cx_[e].coeff_b[tau];
        gx[tau] += coeff.transpose() * y_edge;
      }
    }
    for (int tau = 0; tau < T; ++tau) {
      gu[tau] = vs.prob * (2.0 * game_.r_control[v].cwiseProduct(vs.lqr.du[tau]) +
                           vs.grad_u[tau]);
    }
    double res = 0.0;
    Vec4 mu = gx[T];
    for (int tau = T - 1; tau >= 0; --tau) {
      const Vec2 grad = gu[tau] + vs.lqr_problem.B[tau].transpose() * mu;
      res = std::max(res, grad.cwiseAbs().maxCoeff());
      mu = gx[tau] + vs.lqr_problem.A[tau].transpose() * mu;
    }
    return res;
  }

 private:
  struct VertexState {
    // Dual state, slot-major: one contiguous per-timestep array per
    // adjacent edge, so the windowed update loops stream sequentially.
    using SlotArray = std::vector<std::vector<Vec4>>;  // [slot][tau]
    SlotArray y, y_next, z, s, lambda;
    SlotArray r;  // scratch for the r-update
    double prob = 0.0;
    std::vector<int> neighbor;        // per adjacency slot
    std::vector<int> neighbor_slot;   // slot of the shared edge at the neighbor
    std::vector<char> is_side_a;      // whether v is endpoint a of the edge
    LinearizedDynamics lin;
    std::vector<Vec4> grad_x;  // 2 Q (x - ref), unweighted by p_v
    std::vector<Vec2> grad_u;  // 2 R u
    double ego_value = 0.0;
    LqrProblem<4, 2> lqr_problem;
    LqrSolution<4, 2> lqr;
  };

  struct LineSearchOutcome {
    bool accepted = false;
    double alpha = 0.0;
    double potential = 0.0;
    double best_change = std::numeric_limits<double>::infinity();
  };

  VecX stack(const VertexState::SlotArray& arr, int v, int tau) const {
    VecX out = VecX::Zero(graph_.stacked_dim(v));
    for (int m = 0; m < graph_.degree(v); ++m) {
      out.segment<4>(4 * m) = arr[m][tau];
    }
    return out;
  }

  static double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - t0)
        .count();
  }

  void zero_duals() {
    const auto clear = [](VertexState::SlotArray& arr) {
      for (auto& slot : arr) {
        for (Vec4& vec : slot) vec.setZero();
      }
    };
    for (auto& vs : vertices_) {
      clear(vs.y);
      clear(vs.y_next);
      clear(vs.z);
      clear(vs.s);
      clear(vs.lambda);
    }
    edge_window_.assign(graph_.edges.size(), {0, 0});
  }

  void convexify() {
    const int E = static_cast<int>(graph_.edges.size());
    blocks_.resize(graph_.num_vertices);
    for (int v = 0; v < graph_.num_vertices; ++v) blocks_[v].build(nominal_[v]);
    pool_->parallel_for(E + graph_.num_vertices, [&](int item) {
      if (item < E) {
        const int e = item;
        convexify_edge_into(game_, graph_.edges[e], nominal_, edge_cx_[e],
                            &blocks_[graph_.edges[e].a],
                            &blocks_[graph_.edges[e].b]);
        // Live windows grow monotonically until the duals are reset.
        auto& win = edge_window_[e];
        if (edge_cx_[e].active_lo < edge_cx_[e].active_hi) {
          if (win.first >= win.second) {
            win = {edge_cx_[e].active_lo, edge_cx_[e].active_hi};
          } else {
            win.first = std::min(win.first, edge_cx_[e].active_lo);
            win.second = std::max(win.second, edge_cx_[e].active_hi);
          }
        }
        return;
      }
      const int v = item - E;
      auto& vs = vertices_[v];
      vs.lin = linearize(nominal_[v], game_.dt, game_.wheelbase);
      const EgoQuadratic ego =
          convexify_ego(nominal_[v], game_.players[v].reference,
                        game_.q_state[v], game_.r_control[v]);
      vs.grad_x = ego.grad_x;
      vs.grad_u = ego.grad_u;
      vs.ego_value = ego.value_at_zero;
    });
  }

  /// Steps 5-10 of the dual-consensus iteration for one vertex: r-update,
  /// LQR subproblem, then the y/z/s updates.
  ///
  /// Per adjacent edge, work is confined to the edge's live window: outside
  /// it all dual state is exactly zero and every update maps zero to zero,
  /// so skipping reproduces the full iteration bit for bit.
  void vertex_iteration(int v) {
    auto& vs = vertices_[v];
    const int T = game_.horizon;
    const int deg = graph_.degree(v);
    const double sigma = params_.sigma;
    const double rho = params_.rho;
    const double inv_sr = 1.0 / (sigma + rho);

    const Mat4 q_weight = (vs.prob * game_.q_state[v]).asDiagonal();
    const Mat2 r_weight = (vs.prob * game_.r_control[v]).asDiagonal();
    for (int tau = 0; tau <= T; ++tau) {
      vs.lqr_problem.Qxx[tau] = q_weight;
      vs.lqr_problem.qx[tau] = vs.prob * vs.grad_x[tau];
    }
    for (int m = 0; m < deg; ++m) {
      const int e = graph_.adjacency[v][m];
      const auto [lo, hi] = edge_window_[e];
      const EdgeConvexification& cx = edge_cx_[e];
      const auto& y_nb = vertices_[vs.neighbor[m]].y[vs.neighbor_slot[m]];
      const auto& y_own = vs.y[m];
      const auto& z_own = vs.z[m];
      const auto& l_own = vs.lambda[m];
      const auto& s_own = vs.s[m];
      auto& r_own = vs.r[m];
      for (int tau = lo; tau < hi; ++tau) {
        const Vec4 r_seg = sigma * z_own[tau] - l_own[tau] - s_own[tau] +
                           (rho / 2.0) * (y_own[tau] + y_nb[tau]);
        r_own[tau] = r_seg;
        if (cx.active[tau]) {
          const Mat4& coeff = vs.is_side_a[m] ? cx.coeff_a[tau] : cx.coeff_b[tau];
          vs.lqr_problem.Qxx[tau] += (0.5 * inv_sr) * coeff.transpose() * coeff;
          vs.lqr_problem.qx[tau] += inv_sr * coeff.transpose() * r_seg;
        }
      }
    }
    for (int tau = 0; tau < T; ++tau) {
      vs.lqr_problem.A[tau] = vs.lin.A[tau];
      vs.lqr_problem.B[tau] = vs.lin.B[tau];
      vs.lqr_problem.Ruu[tau] = r_weight;
      vs.lqr_problem.qu[tau] = vs.prob * vs.grad_u[tau];
    }
    vs.lqr = solve_lqr(vs.lqr_problem);

    for (int m = 0; m < deg; ++m) {
      const int e = graph_.adjacency[v][m];
      const auto [lo, hi] = edge_window_[e];
      const EdgeConvexification& cx = edge_cx_[e];
      auto& y_next = vs.y_next[m];
      auto& z_own = vs.z[m];
      auto& s_own = vs.s[m];
      const auto& r_own = vs.r[m];
      for (int tau = lo; tau < hi; ++tau) {
        Vec4 y_seg = r_own[tau];
        Vec4 ell = Vec4::Zero();
        if (cx.active[tau]) {
          const Mat4& coeff = vs.is_side_a[m] ? cx.coeff_a[tau] : cx.coeff_b[tau];
          y_seg += coeff * vs.lqr.dx[tau];
          ell = cx.offsets[tau];
        }
        y_seg *= inv_sr;
        y_next[tau] = y_seg;
        const Vec4 z_seg = (4.0 * s_own[tau] + 4.0 * sigma * y_seg + 2.0 * ell) /
                           (4.0 * sigma + 1.0);
        z_own[tau] = z_seg;
        s_own[tau] += sigma * (y_seg - z_seg);
      }
    }
  }

  /// Steps 12-13: lambda update from the freshly exchanged y values.
  void vertex_lambda_update(int v) {
    auto& vs = vertices_[v];
    const int deg = graph_.degree(v);
    for (int m = 0; m < deg; ++m) {
      const int e = graph_.adjacency[v][m];
      const auto [lo, hi] = edge_window_[e];
      const auto& y_nb = vertices_[vs.neighbor[m]].y_next[vs.neighbor_slot[m]];
      const auto& y_own = vs.y_next[m];
      auto& l_own = vs.lambda[m];
      for (int tau = lo; tau < hi; ++tau) {
        l_own[tau] += (params_.rho / 2.0) * (y_own[tau] - y_nb[tau]);
      }
    }
  }

  /// potential_of with block-skipped collision scans over the candidate's
  /// position blocks; bit-identical to the plain evaluation.
  double candidate_potential(const JointStrategy& X) const {
    const int V = graph_.num_vertices;
    const int E = static_cast<int>(graph_.edges.size());
    potential_terms_.assign(V + E, 0.0);
    pool_->parallel_for(V + E, [&](int item) {
      if (item < V) {
        const int v = item;
        potential_terms_[item] =
            game_.vertex_prob(v) *
            ego_cost(X[v], game_.players[v].reference, game_.q_state[v],
                     game_.r_control[v]);
      } else {
        const InteractionEdge& edge = graph_.edges[item - V];
        if (edge.kind == EdgeKind::kCollision) {
          potential_terms_[item] =
              edge.pair_prob *
              collision_cost_blocked(X[edge.a], X[edge.b], game_.footprint,
                                     game_.collision, cand_blocks_[edge.a],
                                     cand_blocks_[edge.b]);
        } else {
          potential_terms_[item] = edge_cost(game_, edge, X);
        }
      }
    });
    double value = 0.0;
    for (double term : potential_terms_) value += term;
    return value;
  }

  /// Rolls out the feedback policies at step size alpha; empty result when
  /// any vertex hits an infeasible control. Also refreshes the candidate
  /// position blocks used by the blocked potential evaluation.
  bool rollout_candidate(double alpha, JointStrategy& out) const {
    const int V = graph_.num_vertices;
    out.assign(V, Trajectory{});
    cand_blocks_.resize(V);
    std::vector<char> ok(V, 1);
    pool_->parallel_for(V, [&](int v) {
      const auto& vs = vertices_[v];
      const Trajectory& nom = nominal_[v];
      Trajectory traj;
      traj.states.reserve(game_.horizon + 1);
      traj.controls.resize(game_.horizon);
      traj.states.push_back(nom.states[0]);
      try {
        for (int tau = 0; tau < game_.horizon; ++tau) {
          Vec2 u = nom.controls[tau].vec() + alpha * vs.lqr.k[tau] +
                   vs.lqr.K[tau] *
                       (traj.states[tau].vec() - nom.states[tau].vec());
          if (params_.delta_limit > 0.0)
            u[0] = std::clamp(u[0], -params_.delta_limit, params_.delta_limit);
          if (params_.accel_limit > 0.0)
            u[1] = std::clamp(u[1], -params_.accel_limit, params_.accel_limit);
          traj.controls[tau] = Control::from_vec(u);
          traj.states.push_back(
              step(traj.states[tau], traj.controls[tau], game_.dt,
                   game_.wheelbase));
        }
        cand_blocks_[v].build(traj);
        out[v] = std::move(traj);
      } catch (const InfeasibleControlError&) {
        ok[v] = 0;
      }
    });
    for (char flag : ok) {
      if (!flag) return false;
    }
    return true;
  }

  LineSearchOutcome line_search(double current) {
    LineSearchOutcome outcome;
    for (double alpha : params_.alpha_schedule) {
      JointStrategy candidate;
      if (!rollout_candidate(alpha, candidate)) continue;
      const double p = candidate_potential(candidate);
      outcome.best_change = std::min(outcome.best_change, std::abs(p - current));
      if (p < current) {
        outcome.accepted = true;
        outcome.alpha = alpha;
        outcome.potential = p;
        ls_candidate_ = std::move(candidate);
        return outcome;
      }
    }
    return outcome;
  }

  GameSpec game_;
  InteractionGraph graph_;
  SolverParams params_;
  std::unique_ptr<ThreadPool> pool_;
  JointStrategy nominal_;
  std::vector<VertexState> vertices_;
  std::vector<EdgeConvexification> edge_cx_;
  std::vector<std::pair<int, int>> edge_window_;
  std::vector<PositionBlocks> blocks_;
  mutable std::vector<PositionBlocks> cand_blocks_;
  mutable std::vector<double> potential_terms_;
  JointStrategy ls_candidate_;
};

/// Convenience wrapper matching the solve(game, graph, init, params)
/// call shape.
inline SolveResult solve(const GameSpec& game, const InteractionGraph& graph,
                         const JointStrategy& init, const SolverParams& params) {
  AdmmSolver solver(game, graph, params);
  return solver.solve(init);
}

}  // namespace trajgame
