#include <catch2/catch_amalgamated.hpp>

#include "support/test_util.hpp"
#include "trajgame/admm.hpp"
#include "trajgame/graph.hpp"
#include "trajgame/lqr.hpp"
#include "trajgame/oracle.hpp"

using namespace trajgame;
using test::Rng;

namespace {

LqrProblem<Eigen::Dynamic, Eigen::Dynamic> random_lqr(Rng& rng, int T, int nx,
                                                      int nu) {
  LqrProblem<Eigen::Dynamic, Eigen::Dynamic> prob;
  for (int tau = 0; tau < T; ++tau) {
    prob.A.push_back(MatX::Random(nx, nx) * 0.8);
    prob.B.push_back(MatX::Random(nx, nu));
    MatX R = MatX::Random(nu, nu);
    prob.Ruu.push_back(R * R.transpose() + 0.5 * MatX::Identity(nu, nu));
    prob.qu.push_back(VecX::Random(nu));
  }
  for (int tau = 0; tau <= T; ++tau) {
    MatX Q = MatX::Random(nx, nx);
    prob.Qxx.push_back(Q * Q.transpose() + 0.1 * MatX::Identity(nx, nx));
    prob.qx.push_back(VecX::Random(nx));
  }
  (void)rng;
  return prob;
}

/// Random well-posed game whose zero-control rollouts actually collide, so
/// the convexified inner problem has active coupling.
struct InnerInstance {
  GameSpec game;
  InteractionGraph graph;
  JointStrategy nominal;
};

InnerInstance random_inner_instance(Rng& rng, int max_agents, int max_types,
                                    int max_horizon) {
  InnerInstance inst;
  GameSpec& game = inst.game;
  const int N = test::uniform_int(rng, 2, max_agents);
  const int T = test::uniform_int(rng, 2, max_horizon);
  game.horizon = T;
  game.dt = 0.1;
  game.wheelbase = 1.0;
  game.collision.d_safe = 2.0;
  game.collision.beta = 1.4;
  game.footprint = FootprintModel{0.25, -0.25};

  std::vector<std::vector<double>> marginals;
  for (int i = 0; i < N; ++i) {
    const int K = test::uniform_int(rng, 1, max_types);
    std::vector<double> m(K);
    double sum = 0.0;
    for (double& p : m) {
      p = test::uniform(rng, 0.2, 1.0);
      sum += p;
    }
    for (double& p : m) p /= sum;
    marginals.push_back(m);
    for (int t = 0; t < K; ++t) {
      TypePlayer tp;
      tp.agent = i;
      tp.type_index = t;
      // Clustered initial states so couplings activate.
      tp.initial_state =
          State{test::uniform(rng, -1.0, 1.0), test::uniform(rng, -1.0, 1.0),
                test::uniform(rng, -0.4, 0.4), test::uniform(rng, 0.5, 1.5)};
      tp.reference.assign(T + 1, State{test::uniform(rng, -2.0, 2.0),
                                       test::uniform(rng, -2.0, 2.0), 0.0,
                                       test::uniform(rng, 0.5, 1.5)});
      game.players.push_back(tp);
      game.q_state.push_back(Vec4(test::uniform(rng, 0.1, 1.0),
                                  test::uniform(rng, 0.1, 1.0),
                                  test::uniform(rng, 0.0, 0.5),
                                  test::uniform(rng, 0.1, 1.0)));
      game.r_control.push_back(
          Vec2(test::uniform(rng, 0.5, 2.0), test::uniform(rng, 0.1, 1.0)));
    }
  }
  game.prior = BeliefPrior::independent(marginals);
  game.validate();
  inst.graph = build_bayesian_graph(game);
  inst.nominal = default_initial_strategy(game);
  return inst;
}

SolverParams quiet_params() {
  SolverParams params;
  params.workers = 1;
  return params;
}

}  // namespace

TEST_CASE("lqr: zero gradient yields the zero minimizer") {
  LqrProblem<4, 2> prob;
  const int T = 5;
  for (int tau = 0; tau < T; ++tau) {
    prob.A.push_back(Mat4::Identity());
    prob.B.push_back(Mat42::Zero());
    prob.Ruu.push_back(Mat2::Identity());
    prob.qu.push_back(Vec2::Zero());
  }
  prob.B[0](0, 0) = 0.1;
  prob.B[0](3, 1) = 0.1;
  for (int tau = 0; tau <= T; ++tau) {
    prob.Qxx.push_back(Mat4::Identity());
    prob.qx.push_back(Vec4::Zero());
  }
  const auto sol = solve_lqr(prob);
  for (const auto& du : sol.du) CHECK(du.norm() == 0.0);
  for (const auto& k : sol.k) CHECK(k.norm() == 0.0);
  for (const auto& dx : sol.dx) CHECK(dx.norm() == 0.0);
}

TEST_CASE("lqr: T = 1 matches the closed-form normal equation") {
  // dx_1 = B du_0, objective dx_1'Q dx_1 + q.dx_1 + du'R du + qu.du:
  // du* = -(R + B'QB)^{-1} (qu + B'q) / 2.
  Rng rng(5);
  for (int rep = 0; rep < 25; ++rep) {
    LqrProblem<Eigen::Dynamic, Eigen::Dynamic> prob = random_lqr(rng, 1, 3, 2);
    const auto sol = solve_lqr(prob);
    const MatX H = prob.Ruu[0] + prob.B[0].transpose() * prob.Qxx[1] * prob.B[0];
    const VecX rhs = prob.qu[0] + prob.B[0].transpose() * prob.qx[1];
    const VecX du_star = -0.5 * H.ldlt().solve(rhs);
    CHECK((sol.du[0] - du_star).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("lqr matches the dense KKT oracle on random instances") {
  Rng rng(9);
  for (int rep = 0; rep < 25; ++rep) {
    const int T = test::uniform_int(rng, 1, 5);
    const auto prob = random_lqr(rng, T, 4, 2);
    const auto sol = solve_lqr(prob);
    const auto dense = dense_lqr_solve(prob);
    std::vector<VecX> dx_dyn(sol.dx.begin(), sol.dx.end());
    std::vector<VecX> du_dyn(sol.du.begin(), sol.du.end());
    const double obj_riccati = lqr_objective(prob, dx_dyn, du_dyn);
    CHECK(obj_riccati == Catch::Approx(dense.objective).margin(1e-8));
    for (int tau = 0; tau <= T; ++tau) {
      CHECK((sol.dx[tau] - dense.dx[0][tau]).cwiseAbs().maxCoeff() < 1e-7);
    }
    // Minimizer objective never exceeds the zero candidate (= 0 here since
    // dx_0 = 0 and constants are excluded).
    CHECK(obj_riccati <= 1e-12);
  }
}

TEST_CASE("selector: slice, scatter, reassembly") {
  Rng rng(13);
  const InnerInstance inst = random_inner_instance(rng, 3, 2, 4);
  const InteractionGraph& graph = inst.graph;
  for (int v = 0; v < graph.num_vertices; ++v) {
    if (graph.degree(v) == 0) continue;
    const VecX stacked = VecX::Random(graph.stacked_dim(v));
    VecX rebuilt = VecX::Zero(graph.stacked_dim(v));
    for (int e : graph.adjacency[v]) {
      const Vec4 slice = selector_apply(graph, e, v, stacked);
      selector_scatter(graph, e, v, slice, rebuilt);
    }
    CHECK((rebuilt - stacked).cwiseAbs().maxCoeff() == 0.0);

    // scatter of a single slice zeroes all other slots.
    const int e0 = graph.adjacency[v][0];
    VecX lone = VecX::Zero(graph.stacked_dim(v));
    selector_scatter(graph, e0, v, selector_apply(graph, e0, v, stacked), lone);
    CHECK(lone.head<4>() == stacked.head<4>());
    if (graph.degree(v) > 1) CHECK(lone.tail(lone.size() - 4).norm() == 0.0);
  }
  CHECK_THROWS_AS(
      selector_apply(inst.graph, static_cast<int>(inst.graph.edges.size()) - 1,
                     /*v=*/inst.graph.edges.back().a == 0 ? 1 : 0,
                     VecX::Zero(4)),
      ConfigError);
}

TEST_CASE("admm inner solution matches the dense KKT oracle") {
  Rng rng(17);
  int with_active_coupling = 0;
  for (int rep = 0; rep < 50; ++rep) {
    const InnerInstance inst = random_inner_instance(rng, 4, 2, 5);
    SolverParams params = quiet_params();
    AdmmSolver solver(inst.game, inst.graph, params);
    solver.set_nominal(inst.nominal, /*reset_duals=*/true);

    double worst_lambda = 0.0;
    for (int k = 0; k < 5000; ++k) {
      solver.inner_iteration();
      worst_lambda = std::max(worst_lambda, solver.max_lambda_sum());
      if (k >= 5 && solver.max_consensus_residual() < 1e-7 &&
          solver.max_primal_coupling_residual() < 5e-5) {
        break;
      }
    }
    const auto dense = dense_qp_solve(inst.game, inst.graph, inst.nominal);
    const double obj_admm = solver.convexified_objective();
    CHECK(std::abs(obj_admm - dense.objective) <=
          1e-4 * (1.0 + std::abs(dense.objective)));
    CHECK(worst_lambda <= 1e-10);
    CHECK(solver.max_consensus_residual() <= 1e-4);
    CHECK(solver.max_primal_coupling_residual() <= 1e-4);
    for (int v = 0; v < inst.game.num_vertices(); ++v) {
      CHECK(solver.vertex_stationarity_residual(v) <= 1e-4);
    }
    for (const auto& edge : inst.graph.edges) {
      const auto cx = convexify_edge(inst.game, edge, inst.nominal);
      for (bool a : cx.active) {
        if (a) {
          ++with_active_coupling;
          goto next_rep;
        }
      }
    }
  next_rep:;
  }
  // The instance generator must actually exercise coupled problems.
  CHECK(with_active_coupling >= 25);
}

TEST_CASE("admm: edge-free graph reduces to the standalone LQR step") {
  Rng rng(19);
  InnerInstance inst = random_inner_instance(rng, 2, 1, 5);
  // Strip all edges.
  inst.graph.edges.clear();
  inst.graph.finalize();
  SolverParams params = quiet_params();
  AdmmSolver solver(inst.game, inst.graph, params);
  solver.set_nominal(inst.nominal, true);
  solver.inner_iteration();

  for (int v = 0; v < inst.game.num_vertices(); ++v) {
    // Build the pure weighted tracking subproblem and solve it directly.
    const double p = inst.game.vertex_prob(v);
    const LinearizedDynamics lin =
        linearize(inst.nominal[v], inst.game.dt, inst.game.wheelbase);
    const EgoQuadratic ego =
        convexify_ego(inst.nominal[v], inst.game.players[v].reference,
                      inst.game.q_state[v], inst.game.r_control[v]);
    LqrProblem<4, 2> prob;
    prob.A = lin.A;
    prob.B = lin.B;
    for (int tau = 0; tau <= inst.game.horizon; ++tau) {
      prob.Qxx.push_back(Mat4((p * inst.game.q_state[v]).asDiagonal()));
      prob.qx.push_back(p * ego.grad_x[tau]);
    }
    for (int tau = 0; tau < inst.game.horizon; ++tau) {
      prob.Ruu.push_back(Mat2((p * inst.game.r_control[v]).asDiagonal()));
      prob.qu.push_back(p * ego.grad_u[tau]);
    }
    const auto standalone = solve_lqr(prob);
    const auto& admm_sol = solver.vertex_solution(v);
    for (int tau = 0; tau <= inst.game.horizon; ++tau) {
      CHECK((standalone.dx[tau] - admm_sol.dx[tau]).cwiseAbs().maxCoeff() <
            1e-12);
    }
  }
}

TEST_CASE("admm z-update: zero duals and zero coupling give zero z") {
  Rng rng(23);
  InnerInstance inst = random_inner_instance(rng, 2, 2, 4);
  // Move everyone far apart: no active hinge anywhere.
  for (int v = 0; v < inst.game.num_vertices(); ++v) {
    inst.game.players[v].initial_state.px += 100.0 * (v + 1);
    for (auto& s : inst.game.players[v].reference) s.px += 100.0 * (v + 1);
  }
  inst.nominal = default_initial_strategy(inst.game);
  AdmmSolver solver(inst.game, inst.graph, quiet_params());
  solver.set_nominal(inst.nominal, true);
  solver.inner_iteration();
  for (int v = 0; v < inst.game.num_vertices(); ++v) {
    for (int tau = 0; tau <= inst.game.horizon; ++tau) {
      if (inst.graph.degree(v) == 0) continue;
      CHECK(solver.z_value(v, tau).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

// ---------------------------------------------------------------------------
// Generic-algorithm oracle: a literal transcription of the dual-consensus
// iteration with explicit selection matrices and dense KKT subproblem
// solves, run on the same convexified problem. The per-timestep solver
// iterates must reproduce it exactly.
// ---------------------------------------------------------------------------

namespace {

struct GenericAdmmOracle {
  // Stacked deviation layout per vertex: [dx_0..dx_T, du_0..du_{T-1}].
  const GameSpec& game;
  const InteractionGraph& graph;
  const JointStrategy& nominal;
  double sigma, rho;
  int T, nv;

  std::vector<MatX> Qv;       // per vertex: stacked coupling rows (m_v x nv)
  std::vector<VecX> ellv;     // per vertex: stacked offsets
  std::vector<MatX> f_quad;   // per vertex: quadratic term of f_v
  std::vector<VecX> f_lin;    // per vertex: linear term of f_v
  std::vector<MatX> Cdyn;     // per vertex: dynamics equality rows
  std::vector<MatX> E;        // per vertex: per-slot selectors stacked later
  std::vector<VecX> y, z, s, lambda;
  std::vector<VecX> X;

  GenericAdmmOracle(const GameSpec& g, const InteractionGraph& gr,
                    const JointStrategy& nom, double sig, double r)
      : game(g), graph(gr), nominal(nom), sigma(sig), rho(r) {
    T = game.horizon;
    nv = 4 * (T + 1) + 2 * T;
    const int V = game.num_vertices();
    Qv.resize(V);
    ellv.resize(V);
    f_quad.resize(V);
    f_lin.resize(V);
    Cdyn.resize(V);
    y.resize(V);
    z.resize(V);
    s.resize(V);
    lambda.resize(V);
    X.assign(V, VecX::Zero(nv));

    std::vector<EdgeConvexification> cx;
    for (const auto& edge : graph.edges)
      cx.push_back(convexify_edge(game, edge, nominal));

    for (int v = 0; v < V; ++v) {
      const int deg = graph.degree(v);
      const int rows = 4 * (T + 1) * deg;
      Qv[v] = MatX::Zero(rows, nv);
      ellv[v] = VecX::Zero(rows);
      for (int m = 0; m < deg; ++m) {
        const int e = graph.adjacency[v][m];
        const bool side_a = graph.edges[e].a == v;
        for (int tau = 0; tau <= T; ++tau) {
          if (!cx[e].active[tau]) continue;
          const int row = 4 * (T + 1) * m + 4 * tau;
          Qv[v].block<4, 4>(row, 4 * tau) =
              side_a ? cx[e].coeff_a[tau] : cx[e].coeff_b[tau];
          ellv[v].segment<4>(row) = cx[e].offsets[tau];
        }
      }

      const double p = game.vertex_prob(v);
      const LinearizedDynamics lin =
          linearize(nominal[v], game.dt, game.wheelbase);
      const EgoQuadratic ego =
          convexify_ego(nominal[v], game.players[v].reference,
                        game.q_state[v], game.r_control[v]);
      f_quad[v] = MatX::Zero(nv, nv);
      f_lin[v] = VecX::Zero(nv);
      for (int tau = 0; tau <= T; ++tau) {
        f_quad[v].block<4, 4>(4 * tau, 4 * tau) =
            Mat4((p * game.q_state[v]).asDiagonal());
        f_lin[v].segment<4>(4 * tau) = p * ego.grad_x[tau];
      }
      const int ui = 4 * (T + 1);
      for (int tau = 0; tau < T; ++tau) {
        f_quad[v].block<2, 2>(ui + 2 * tau, ui + 2 * tau) =
            Mat2((p * game.r_control[v]).asDiagonal());
        f_lin[v].segment<2>(ui + 2 * tau) = p * ego.grad_u[tau];
      }
      Cdyn[v] = MatX::Zero(4 * (T + 1), nv);
      Cdyn[v].block<4, 4>(0, 0).setIdentity();
      for (int tau = 0; tau < T; ++tau) {
        Cdyn[v].block<4, 4>(4 * (tau + 1), 4 * (tau + 1)).setIdentity();
        Cdyn[v].block<4, 4>(4 * (tau + 1), 4 * tau) = -lin.A[tau];
        Cdyn[v].block<4, 2>(4 * (tau + 1), ui + 2 * tau) = -lin.B[tau];
      }

      y[v] = VecX::Zero(rows);
      z[v] = y[v];
      s[v] = y[v];
      lambda[v] = y[v];
    }
  }

  VecX slice(const VecX& stacked, int slot) const {
    return stacked.segment(4 * (T + 1) * slot, 4 * (T + 1));
  }

  void iterate() {
    const int V = game.num_vertices();
    std::vector<VecX> y_new(V);
    for (int v = 0; v < V; ++v) {
      const int deg = graph.degree(v);
      VecX r = sigma * z[v] - lambda[v] - s[v];
      for (int m = 0; m < deg; ++m) {
        const int e = graph.adjacency[v][m];
        const int other = graph.edges[e].other(v);
        const int slot_other = graph.slot_of(other, e);
        r.segment(4 * (T + 1) * m, 4 * (T + 1)) +=
            (rho / 2.0) * (slice(y[v], m) + slice(y[other], slot_other));
      }
      // X-update: dense KKT of f_v + ||Qv X + r||^2 / (2(sigma+rho)).
      const int mrows = static_cast<int>(Cdyn[v].rows());
      MatX kkt = MatX::Zero(nv + mrows, nv + mrows);
      kkt.topLeftCorner(nv, nv) =
          2.0 * f_quad[v] + Qv[v].transpose() * Qv[v] / (sigma + rho);
      kkt.topRightCorner(nv, mrows) = Cdyn[v].transpose();
      kkt.bottomLeftCorner(mrows, nv) = Cdyn[v];
      VecX rhs = VecX::Zero(nv + mrows);
      rhs.head(nv) = -(f_lin[v] + Qv[v].transpose() * r / (sigma + rho));
      X[v] = Eigen::FullPivLU<MatX>(kkt).solve(rhs).head(nv);

      y_new[v] = (Qv[v] * X[v] + r) / (sigma + rho);
      // z-update via the conjugate prox of g_v (closed form derived from
      // g*(z) = z^2/8 - z ell / 2 per component).
      z[v] = (4.0 * s[v] + 4.0 * sigma * y_new[v] + 2.0 * ellv[v]) /
             (4.0 * sigma + 1.0);
      s[v] = s[v] + sigma * (y_new[v] - z[v]);
    }
    for (int v = 0; v < V; ++v) {
      for (int m = 0; m < graph.degree(v); ++m) {
        const int e = graph.adjacency[v][m];
        const int other = graph.edges[e].other(v);
        const int slot_other = graph.slot_of(other, e);
        lambda[v].segment(4 * (T + 1) * m, 4 * (T + 1)) +=
            (rho / 2.0) *
            (slice(y_new[v], m) - slice(y_new[other], slot_other));
      }
    }
    y = std::move(y_new);
  }
};

}  // namespace

TEST_CASE("per-timestep updates reproduce the generic-algorithm oracle") {
  Rng rng(29);
  for (int rep = 0; rep < 5; ++rep) {
    const InnerInstance inst = random_inner_instance(rng, 3, 2, 3);
    SolverParams params = quiet_params();
    params.sigma = 0.7;
    params.rho = 1.3;
    AdmmSolver solver(inst.game, inst.graph, params);
    solver.set_nominal(inst.nominal, true);
    GenericAdmmOracle oracle(inst.game, inst.graph, inst.nominal, params.sigma,
                             params.rho);

    for (int k = 0; k < 8; ++k) {
      solver.inner_iteration();
      oracle.iterate();
      for (int v = 0; v < inst.game.num_vertices(); ++v) {
        for (int tau = 0; tau <= inst.game.horizon; ++tau) {
          for (int m = 0; m < inst.graph.degree(v); ++m) {
            const Vec4 y_solver = solver.y_value(v, tau).segment<4>(4 * m);
            const Vec4 y_oracle =
                oracle.y[v].segment<4>(4 * (inst.game.horizon + 1) * m + 4 * tau);
            CHECK((y_solver - y_oracle).cwiseAbs().maxCoeff() < 1e-9);
            const Vec4 l_solver = solver.lambda_value(v, tau).segment<4>(4 * m);
            const Vec4 l_oracle =
                oracle.lambda[v].segment<4>(4 * (inst.game.horizon + 1) * m +
                                            4 * tau);
            CHECK((l_solver - l_oracle).cwiseAbs().maxCoeff() < 1e-9);
          }
        }
        // Deviations from the LQR match the dense X-update.
        const auto& sol = solver.vertex_solution(v);
        for (int tau = 0; tau <= inst.game.horizon; ++tau) {
          CHECK((sol.dx[tau] - oracle.X[v].segment<4>(4 * tau))
                    .cwiseAbs()
                    .maxCoeff() < 1e-8);
        }
      }
    }
  }
}

TEST_CASE("solver is deterministic across worker counts") {
  Rng rng(31);
  const InnerInstance inst = random_inner_instance(rng, 3, 2, 6);
  SolverParams p1 = quiet_params();
  p1.max_outer_iterations = 12;
  SolverParams p4 = p1;
  p4.workers = 4;

  const SolveResult r1 = solve(inst.game, inst.graph, inst.nominal, p1);
  const SolveResult r4 = solve(inst.game, inst.graph, inst.nominal, p4);
  REQUIRE(r1.strategy.size() == r4.strategy.size());
  for (std::size_t v = 0; v < r1.strategy.size(); ++v) {
    for (std::size_t tau = 0; tau < r1.strategy[v].states.size(); ++tau) {
      CHECK(r1.strategy[v].states[tau].vec() ==
            r4.strategy[v].states[tau].vec());
    }
    for (std::size_t tau = 0; tau < r1.strategy[v].controls.size(); ++tau) {
      CHECK(r1.strategy[v].controls[tau].vec() ==
            r4.strategy[v].controls[tau].vec());
    }
  }
  CHECK(r1.diagnostics.final_potential == r4.diagnostics.final_potential);
}

TEST_CASE("line search: zero feedforward keeps the nominal trajectory") {
  Rng rng(37);
  const InnerInstance inst = random_inner_instance(rng, 2, 1, 5);
  // A nominal on its reference with zero controls and no coupling is a
  // fixed point: the LQR step is zero and alpha never changes anything.
  GameSpec game = inst.game;
  for (int v = 0; v < game.num_vertices(); ++v) {
    game.players[v].initial_state.px += 50.0 * v;  // decouple
    const Trajectory traj = rollout(game.players[v].initial_state,
                                    std::vector<Control>(game.horizon),
                                    game.dt, game.wheelbase);
    game.players[v].reference.assign(traj.states.begin(), traj.states.end());
  }
  const InteractionGraph graph = build_bayesian_graph(game);
  const JointStrategy init = default_initial_strategy(game);
  SolverParams params = quiet_params();
  params.max_outer_iterations = 3;
  const SolveResult res = solve(game, graph, init, params);
  CHECK(res.diagnostics.converged);
  for (int v = 0; v < game.num_vertices(); ++v) {
    for (int tau = 0; tau < game.horizon; ++tau) {
      CHECK(res.strategy[v].controls[tau].vec() ==
            init[v].controls[tau].vec());
    }
  }
}

TEST_CASE("single-agent solve equals the standalone iLQR oracle") {
  GameSpec game;
  game.horizon = 30;
  game.dt = 0.1;
  game.wheelbase = 1.0;
  game.prior = BeliefPrior::independent({{1.0}});
  TypePlayer tp;
  tp.agent = 0;
  tp.type_index = 0;
  tp.initial_state = State{0, 1.5, 0, 1.0};
  for (int tau = 0; tau <= 30; ++tau) {
    tp.reference.push_back(State{0.2 * tau, 0.0, 0.0, 2.0});
  }
  game.players.push_back(tp);
  game.q_state.push_back(Vec4(1, 1, 0, 1));
  game.r_control.push_back(Vec2(2, 0.5));
  game.validate();
  const InteractionGraph graph = build_bayesian_graph(game);
  const JointStrategy init = default_initial_strategy(game);

  SolverParams params = quiet_params();
  params.potential_tolerance = 1e-7;

  const SolveResult distributed = solve(game, graph, init, params);
  const SolveResult central = centralized_solve(game, graph, init, params);
  CHECK(std::abs(distributed.diagnostics.final_potential -
                 central.diagnostics.final_potential) <= 1e-6);

  // One outer iteration strictly decreases the potential from cold start.
  SolverParams one_iter = params;
  one_iter.max_outer_iterations = 1;
  const SolveResult first = solve(game, graph, init, one_iter);
  CHECK(first.diagnostics.final_potential <
        graph_potential(game, graph, init));
}
