#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <vector>

#include "trajgame/admm.hpp"
#include "trajgame/dynamics.hpp"
#include "trajgame/game.hpp"
#include "trajgame/graph.hpp"
#include "trajgame/lqr.hpp"
#include "trajgame/types.hpp"

namespace trajgame {

/// Convexified problem of one outer iteration with all type-players stacked
/// into a single system: joint quadratic stage costs including the coupling
/// cross terms, and block-diagonal linearized dynamics. Deliberately carries
/// the centralized cost (dense in the total vertex count).
struct StackedQuadratic {
  int num_vertices = 0;
  int horizon = 0;
  std::vector<MatX> A, B;          // T entries, 4V x 4V and 4V x 2V
  std::vector<MatX> Qxx;           // T+1 entries, 4V x 4V
  std::vector<VecX> qx;            // T+1
  std::vector<MatX> Ruu;           // T, 2V x 2V
  std::vector<VecX> qu;            // T
  double constant = 0.0;           // value of the model at zero deviation
};

inline StackedQuadratic assemble_stacked_quadratic(const GameSpec& game,
                                                   const InteractionGraph& graph,
                                                   const JointStrategy& nominal) {
  const int V = game.num_vertices();
  const int T = game.horizon;
  StackedQuadratic sq;
  sq.num_vertices = V;
  sq.horizon = T;
  sq.A.assign(T, MatX::Zero(4 * V, 4 * V));
  sq.B.assign(T, MatX::Zero(4 * V, 2 * V));
  sq.Qxx.assign(T + 1, MatX::Zero(4 * V, 4 * V));
  sq.qx.assign(T + 1, VecX::Zero(4 * V));
  sq.Ruu.assign(T, MatX::Zero(2 * V, 2 * V));
  sq.qu.assign(T, VecX::Zero(2 * V));

  for (int v = 0; v < V; ++v) {
    const double p = game.vertex_prob(v);
    const LinearizedDynamics lin = linearize(nominal[v], game.dt, game.wheelbase);
    const EgoQuadratic ego = convexify_ego(nominal[v], game.players[v].reference,
                                           game.q_state[v], game.r_control[v]);
    sq.constant += p * ego.value_at_zero;
    for (int tau = 0; tau < T; ++tau) {
      sq.A[tau].block<4, 4>(4 * v, 4 * v) = lin.A[tau];
      sq.B[tau].block<4, 2>(4 * v, 2 * v) = lin.B[tau];
      sq.Ruu[tau].block<2, 2>(2 * v, 2 * v) =
          (p * game.r_control[v]).asDiagonal();
      sq.qu[tau].segment<2>(2 * v) = p * ego.grad_u[tau];
    }
    for (int tau = 0; tau <= T; ++tau) {
      sq.Qxx[tau].block<4, 4>(4 * v, 4 * v) = (p * game.q_state[v]).asDiagonal();
      sq.qx[tau].segment<4>(4 * v) = p * ego.grad_x[tau];
    }
  }

  for (const InteractionEdge& edge : graph.edges) {
    const EdgeConvexification cx = convexify_edge(game, edge, nominal);
    for (int tau = 0; tau <= T; ++tau) {
      if (!cx.active[tau]) continue;
      const Mat4& Ca = cx.coeff_a[tau];
      const Mat4& Cb = cx.coeff_b[tau];
      const Vec4& ell = cx.offsets[tau];
      sq.Qxx[tau].block<4, 4>(4 * edge.a, 4 * edge.a) += Ca.transpose() * Ca;
      sq.Qxx[tau].block<4, 4>(4 * edge.b, 4 * edge.b) += Cb.transpose() * Cb;
      sq.Qxx[tau].block<4, 4>(4 * edge.a, 4 * edge.b) += Ca.transpose() * Cb;
      sq.Qxx[tau].block<4, 4>(4 * edge.b, 4 * edge.a) += Cb.transpose() * Ca;
      sq.qx[tau].segment<4>(4 * edge.a) += 2.0 * Ca.transpose() * ell;
      sq.qx[tau].segment<4>(4 * edge.b) += 2.0 * Cb.transpose() * ell;
      sq.constant += ell.squaredNorm();
    }
  }
  return sq;
}

/// Centralized minimizer of the potential over the stacked system: repeated
/// quadratization + one joint Riccati solve + line-searched rollout. Shares
/// the dynamics and cost expansions with the distributed solver but none of
/// the ADMM machinery; serves as the cost-parity oracle.
inline SolveResult centralized_solve(const GameSpec& game,
                                     const InteractionGraph& graph,
                                     const JointStrategy& init,
                                     const SolverParams& params) {
  const auto t_start = std::chrono::steady_clock::now();
  check_complete(game, init);
  const int V = game.num_vertices();
  const int T = game.horizon;

  JointStrategy nominal = init;
  double current = graph_potential(game, graph, nominal);

  SolveResult result;
  int stalls = 0;
  for (int outer = 0; outer < params.max_outer_iterations; ++outer) {
    const auto t_iter = std::chrono::steady_clock::now();
    const StackedQuadratic sq = assemble_stacked_quadratic(game, graph, nominal);
    LqrProblem<Eigen::Dynamic, Eigen::Dynamic> prob;
    prob.A = sq.A;
    prob.B = sq.B;
    prob.Qxx = sq.Qxx;
    prob.qx = sq.qx;
    prob.Ruu = sq.Ruu;
    prob.qu = sq.qu;
    const auto sol = solve_lqr(prob);

    bool accepted = false;
    double accepted_alpha = 0.0;
    double best_change = std::numeric_limits<double>::infinity();
    for (double alpha : params.alpha_schedule) {
      JointStrategy candidate(V);
      bool feasible = true;
      for (int v = 0; v < V; ++v) {
        candidate[v].states.reserve(T + 1);
        candidate[v].controls.resize(T);
        candidate[v].states.push_back(nominal[v].states[0]);
      }
      for (int tau = 0; tau < T && feasible; ++tau) {
        VecX dx_stacked(4 * V);
        for (int v = 0; v < V; ++v) {
          dx_stacked.segment<4>(4 * v) =
              candidate[v].states[tau].vec() - nominal[v].states[tau].vec();
        }
        const VecX du =
            alpha * sol.k[tau] + sol.K[tau] * dx_stacked;
        for (int v = 0; v < V; ++v) {
          Vec2 u = nominal[v].controls[tau].vec() + du.segment<2>(2 * v);
          if (params.delta_limit > 0.0)
            u[0] = std::clamp(u[0], -params.delta_limit, params.delta_limit);
          if (params.accel_limit > 0.0)
            u[1] = std::clamp(u[1], -params.accel_limit, params.accel_limit);
          candidate[v].controls[tau] = Control::from_vec(u);
          try {
            candidate[v].states.push_back(step(candidate[v].states[tau],
                                               candidate[v].controls[tau],
                                               game.dt, game.wheelbase));
          } catch (const InfeasibleControlError&) {
            feasible = false;
            break;
          }
        }
      }
      if (!feasible) continue;
      const double p = graph_potential(game, graph, candidate);
      best_change = std::min(best_change, std::abs(p - current));
      if (p < current) {
        accepted = true;
        accepted_alpha = alpha;
        nominal = std::move(candidate);
        const double drop = current - p;
        current = p;
        OuterIterationDiag diag;
        diag.iteration = outer;
        diag.potential = current;
        diag.alpha = accepted_alpha;
        diag.wall_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - t_iter)
                           .count();
        result.diagnostics.iterations.push_back(diag);
        if (drop < params.potential_tolerance)
          result.diagnostics.converged = true;
        break;
      }
    }
    if (result.diagnostics.converged) break;
    if (!accepted) {
      OuterIterationDiag diag;
      diag.iteration = outer;
      diag.potential = current;
      diag.alpha = 0.0;
      diag.wall_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t_iter)
                         .count();
      result.diagnostics.iterations.push_back(diag);
      if (best_change < params.potential_tolerance) {
        result.diagnostics.converged = true;
        break;
      }
      if (++stalls >= params.max_stall_iterations) {
        result.diagnostics.stalled = true;
        break;
      }
    } else {
      stalls = 0;
    }
  }
  result.strategy = std::move(nominal);
  result.diagnostics.final_potential = current;
  result.diagnostics.wall_ms = std::chrono::duration<double, std::milli>(
                                   std::chrono::steady_clock::now() - t_start)
                                   .count();
  return result;
}

struct DenseQpResult {
  std::vector<std::vector<Vec4>> dx;  // per vertex, per timestep
  std::vector<std::vector<Vec2>> du;
  double objective = 0.0;  // includes the model constant
  bool regularized = false;
};

/// Exact KKT solve of the convexified inner problem (equality-constrained
/// convex QP over all vertices' deviations). Direct factorization, fully
/// independent of the Riccati recursion; validates the ADMM inner loop.
inline DenseQpResult dense_qp_solve(const GameSpec& game,
                                    const InteractionGraph& graph,
                                    const JointStrategy& nominal) {
  const StackedQuadratic sq = assemble_stacked_quadratic(game, graph, nominal);
  const int V = sq.num_vertices;
  const int T = sq.horizon;
  const int nx = 4 * V;
  const int nu = 2 * V;
  const int n = nx * (T + 1) + nu * T;
  const int m = nx * (T + 1);  // dx_0 = 0 plus T dynamics rows

  const auto xi = [&](int tau) { return nx * tau; };
  const auto ui = [&](int tau) { return nx * (T + 1) + nu * tau; };

  MatX H = MatX::Zero(n, n);
  VecX g = VecX::Zero(n);
  for (int tau = 0; tau <= T; ++tau) {
    H.block(xi(tau), xi(tau), nx, nx) = 2.0 * sq.Qxx[tau];
    g.segment(xi(tau), nx) = sq.qx[tau];
  }
  for (int tau = 0; tau < T; ++tau) {
    H.block(ui(tau), ui(tau), nu, nu) = 2.0 * sq.Ruu[tau];
    g.segment(ui(tau), nu) = sq.qu[tau];
  }

  MatX C = MatX::Zero(m, n);
  C.block(0, 0, nx, nx).setIdentity();
  for (int tau = 0; tau < T; ++tau) {
    const int row = nx * (tau + 1);
    C.block(row, xi(tau + 1), nx, nx) = MatX::Identity(nx, nx);
    C.block(row, xi(tau), nx, nx) = -sq.A[tau];
    C.block(row, ui(tau), nx, nu) = -sq.B[tau];
  }

  DenseQpResult out;
  MatX kkt = MatX::Zero(n + m, n + m);
  kkt.topLeftCorner(n, n) = H;
  kkt.topRightCorner(n, m) = C.transpose();
  kkt.bottomLeftCorner(m, n) = C;
  VecX rhs = VecX::Zero(n + m);
  rhs.head(n) = -g;

  Eigen::FullPivLU<MatX> lu(kkt);
  if (!lu.isInvertible()) {
    std::cerr << "dense_qp_solve: singular KKT system, regularizing with 1e-9"
              << std::endl;
    kkt.topLeftCorner(n, n) += 1e-9 * MatX::Identity(n, n);
    kkt.bottomRightCorner(m, m) -= 1e-9 * MatX::Identity(m, m);
    lu.compute(kkt);
    out.regularized = true;
  }
  const VecX z = lu.solve(rhs).head(n);

  out.objective = 0.5 * z.dot(H * z) + g.dot(z) + sq.constant;
  out.dx.assign(V, std::vector<Vec4>(T + 1));
  out.du.assign(V, std::vector<Vec2>(T));
  for (int v = 0; v < V; ++v) {
    for (int tau = 0; tau <= T; ++tau)
      out.dx[v][tau] = z.segment<4>(xi(tau) + 4 * v);
    for (int tau = 0; tau < T; ++tau)
      out.du[v][tau] = z.segment<2>(ui(tau) + 2 * v);
  }
  return out;
}

/// Dense KKT solve of a single LqrProblem; reference for solve_lqr.
template <int NX, int NU>
DenseQpResult dense_lqr_solve(const LqrProblem<NX, NU>& prob) {
  const int T = prob.horizon();
  const int nx = static_cast<int>(prob.Qxx[0].rows());
  const int nu = static_cast<int>(prob.Ruu[0].rows());
  const int n = nx * (T + 1) + nu * T;
  const int m = nx * (T + 1);
  const auto xi = [&](int tau) { return nx * tau; };
  const auto ui = [&](int tau) { return nx * (T + 1) + nu * tau; };

  MatX H = MatX::Zero(n, n);
  VecX g = VecX::Zero(n);
  for (int tau = 0; tau <= T; ++tau) {
    H.block(xi(tau), xi(tau), nx, nx) = 2.0 * MatX(prob.Qxx[tau]);
    g.segment(xi(tau), nx) = prob.qx[tau];
  }
  for (int tau = 0; tau < T; ++tau) {
    H.block(ui(tau), ui(tau), nu, nu) = 2.0 * MatX(prob.Ruu[tau]);
    g.segment(ui(tau), nu) = prob.qu[tau];
  }
  MatX C = MatX::Zero(m, n);
  C.block(0, 0, nx, nx).setIdentity();
  for (int tau = 0; tau < T; ++tau) {
    const int row = nx * (tau + 1);
    C.block(row, xi(tau + 1), nx, nx) = MatX::Identity(nx, nx);
    C.block(row, xi(tau), nx, nx) = -MatX(prob.A[tau]);
    C.block(row, ui(tau), nx, nu) = -MatX(prob.B[tau]);
  }
  MatX kkt = MatX::Zero(n + m, n + m);
  kkt.topLeftCorner(n, n) = H;
  kkt.topRightCorner(n, m) = C.transpose();
  kkt.bottomLeftCorner(m, n) = C;
  VecX rhs = VecX::Zero(n + m);
  rhs.head(n) = -g;
  const VecX z = Eigen::FullPivLU<MatX>(kkt).solve(rhs).head(n);

  DenseQpResult out;
  out.objective = 0.5 * z.dot(H * z) + g.dot(z);
  out.dx.assign(1, std::vector<Vec4>());
  out.du.assign(1, std::vector<Vec2>());
  if (nx == 4 && nu == 2) {
    out.dx[0].resize(T + 1);
    out.du[0].resize(T);
    for (int tau = 0; tau <= T; ++tau) out.dx[0][tau] = z.segment<4>(xi(tau));
    for (int tau = 0; tau < T; ++tau) out.du[0][tau] = z.segment<2>(ui(tau));
  }
  return out;
}

}  // namespace trajgame
