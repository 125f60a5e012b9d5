#pragma once

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "trajgame/admm.hpp"
#include "trajgame/contingency.hpp"
#include "trajgame/costs.hpp"
#include "trajgame/dynamics.hpp"
#include "trajgame/game.hpp"
#include "trajgame/oracle.hpp"

namespace trajgame {

/// Result of one verification suite (the executable counterparts of the
/// potential-game identities and the numerical cross-checks).
struct SuiteResult {
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

namespace verify_detail {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline State random_state(Rng& rng) {
  return State{uniform(rng, -8.0, 8.0), uniform(rng, -8.0, 8.0),
               uniform(rng, -1.2, 1.2), uniform(rng, 0.0, 4.0)};
}

inline Trajectory random_free_trajectory(Rng& rng, int horizon) {
  Trajectory traj;
  traj.states.resize(horizon + 1);
  traj.controls.resize(horizon);
  for (auto& x : traj.states) x = random_state(rng);
  for (auto& u : traj.controls)
    u = Control{uniform(rng, -0.3, 0.3), uniform(rng, -1.5, 1.5)};
  return traj;
}

/// Random game instance with a strictly positive full joint over type
/// tuples; pairwise tables are its exact marginalizations.
struct RandomInstance {
  GameSpec game;
  JointStrategy strategy;
};

inline RandomInstance random_instance(Rng& rng, int max_agents, int max_types,
                                      int max_horizon) {
  RandomInstance inst;
  const int N = uniform_int(rng, 1, max_agents);
  const int T = uniform_int(rng, 1, max_horizon);
  std::vector<int> shape(N);
  for (int& s : shape) s = uniform_int(rng, 1, max_types);

  int tuples = 1;
  for (int s : shape) tuples *= s;
  std::vector<double> joint(tuples);
  double total = 0.0;
  for (double& p : joint) {
    p = uniform(rng, 0.05, 1.0);
    total += p;
  }
  for (double& p : joint) p /= total;

  const auto tuple_type = [&](int index, int agent) {
    for (int i = N - 1; i > agent; --i) index /= shape[i];
    return index % shape[agent];
  };

  std::vector<std::vector<double>> marginals(N);
  for (int i = 0; i < N; ++i) marginals[i].assign(shape[i], 0.0);
  for (int k = 0; k < tuples; ++k) {
    for (int i = 0; i < N; ++i) marginals[i][tuple_type(k, i)] += joint[k];
  }
  BeliefPrior prior(marginals);
  for (int i = 0; i < N; ++i) {
    for (int j = i + 1; j < N; ++j) {
      MatX table = MatX::Zero(shape[i], shape[j]);
      for (int k = 0; k < tuples; ++k)
        table(tuple_type(k, i), tuple_type(k, j)) += joint[k];
      prior.set_pair_table(i, j, table);
    }
  }

  GameSpec& game = inst.game;
  game.prior = std::move(prior);
  game.horizon = T;
  game.dt = 0.1;
  game.wheelbase = uniform(rng, 0.5, 2.5);
  game.collision.d_safe = uniform(rng, 1.0, 6.0);
  game.collision.beta = uniform(rng, 0.5, 3.0);
  game.footprint.front_offset = uniform(rng, 0.1, 0.8);
  game.footprint.rear_offset = -uniform(rng, 0.1, 0.8);
  for (int i = 0; i < N; ++i) {
    for (int t = 0; t < shape[i]; ++t) {
      TypePlayer tp;
      tp.agent = i;
      tp.type_index = t;
      tp.initial_state = random_state(rng);
      tp.reference.resize(T + 1);
      for (auto& x : tp.reference) x = random_state(rng);
      game.players.push_back(std::move(tp));
      game.q_state.push_back(Vec4(uniform(rng, 0.0, 2.0), uniform(rng, 0.0, 2.0),
                                  uniform(rng, 0.0, 1.0), uniform(rng, 0.0, 2.0)));
      game.r_control.push_back(
          Vec2(uniform(rng, 0.1, 2.0), uniform(rng, 0.1, 1.0)));
    }
  }
  game.validate();
  for (int v = 0; v < game.num_vertices(); ++v)
    inst.strategy.push_back(random_free_trajectory(rng, T));
  return inst;
}

template <typename Fn>
SuiteResult timed_suite(const std::string& name, Fn&& body) {
  SuiteResult result;
  result.name = name;
  const auto t0 = std::chrono::steady_clock::now();
  std::ostringstream detail;
  result.pass = body(detail);
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  result.detail = detail.str();
  return result;
}

}  // namespace verify_detail

/// Potential-game identity: unilateral potential change equals the weighted
/// expected-cost change, over random games and deviations.
inline SuiteResult verify_potential_identity(int instances = 1000,
                                             std::uint64_t seed = 1) {
  using namespace verify_detail;
  return timed_suite("potential-identity", [&](std::ostringstream& detail) {
    Rng rng(seed);
    double worst = 0.0;
    for (int k = 0; k < instances; ++k) {
      const RandomInstance inst = random_instance(rng, 4, 3, 10);
      const int v = uniform_int(rng, 0, inst.game.num_vertices() - 1);
      const Trajectory alt = random_free_trajectory(rng, inst.game.horizon);
      JointStrategy dev = inst.strategy;
      dev[v] = alt;
      const double dP =
          potential(inst.game, inst.strategy) - potential(inst.game, dev);
      const double res =
          potential_identity_residual(inst.game, inst.strategy, v, alt);
      worst = std::max(worst, res / (1.0 + std::abs(dP)));
    }
    detail << "worst scaled residual " << worst << " over " << instances
           << " instances";
    return worst <= 1e-8;
  });
}

/// Contingency-potential identity: ego-stack and rival deviations on random contingency
/// games with correlated priors.
inline SuiteResult verify_contingency_identity(int instances = 500,
                                               std::uint64_t seed = 2) {
  using namespace verify_detail;
  return timed_suite("contingency-identity", [&](std::ostringstream& detail) {
    Rng rng(seed);
    double worst = 0.0;
    for (int k = 0; k < instances; ++k) {
      const int H = uniform_int(rng, 1, 3);
      const int N = uniform_int(rng, 2, 3);
      const int T = uniform_int(rng, 1, 6);
      HypothesisSet hs;
      hs.probs.resize(H);
      double sum = 0.0;
      for (double& p : hs.probs) {
        p = uniform(rng, 0.1, 1.0);
        sum += p;
      }
      for (double& p : hs.probs) p /= sum;
      hs.types.assign(H, std::vector<TypePlayer>(N));
      for (auto& row : hs.types) {
        for (auto& tp : row) {
          tp.initial_state = random_state(rng);
          tp.reference.resize(T + 1);
          for (auto& x : tp.reference) x = random_state(rng);
        }
      }
      ContingencyConfig cfg;
      cfg.ego = uniform_int(rng, 0, N - 1);
      cfg.branching_step = uniform_int(rng, 0, T);
      cfg.q_contingency = Vec4(uniform(rng, 0.0, 50.0), uniform(rng, 0.0, 50.0),
                               uniform(rng, 0.0, 100.0), uniform(rng, 0.0, 10.0));
      GameSpec base;
      base.horizon = T;
      base.dt = 0.1;
      base.wheelbase = 1.0;
      base.collision.d_safe = uniform(rng, 1.0, 5.0);
      base.collision.beta = 1.4;
      base.footprint = FootprintModel{0.3, -0.3};
      base.prior = BeliefPrior::independent(
          std::vector<std::vector<double>>(N, {1.0}));
      for (int i = 0; i < N; ++i) {
        TypePlayer tp;
        tp.agent = i;
        tp.type_index = 0;
        tp.reference.resize(T + 1);
        for (auto& x : tp.reference) x = random_state(rng);
        base.players.push_back(tp);
        base.q_state.push_back(Vec4(uniform(rng, 0.0, 2.0),
                                    uniform(rng, 0.0, 2.0),
                                    uniform(rng, 0.0, 1.0),
                                    uniform(rng, 0.0, 2.0)));
        base.r_control.push_back(
            Vec2(uniform(rng, 0.1, 2.0), uniform(rng, 0.1, 1.0)));
      }

      const auto [game, graph] = build_contingency_game(hs, cfg, base);
      JointStrategy X;
      for (int v = 0; v < game.num_vertices(); ++v)
        X.push_back(random_free_trajectory(rng, T));

      ContingencyPerturbation pert;
      JointStrategy dev = X;
      if (k % 2 == 0 || N < 2) {
        pert.ego_stack = true;
        for (int h = 0; h < H; ++h) {
          pert.ego_plans.push_back(random_free_trajectory(rng, T));
          dev[game.vertex_index(cfg.ego, h)] = pert.ego_plans[h];
        }
      } else {
        pert.ego_stack = false;
        pert.agent = (cfg.ego + 1) % N;
        pert.hypothesis = uniform_int(rng, 0, H - 1);
        pert.plan = random_free_trajectory(rng, T);
        dev[game.vertex_index(pert.agent, pert.hypothesis)] = pert.plan;
      }
      const double dP = potential(game, X) - potential(game, dev);
      const double res =
          contingency_identity_residual(hs, cfg, base, X, pert);
      worst = std::max(worst, res / (1.0 + std::abs(dP)));
    }
    detail << "worst scaled residual " << worst << " over " << instances
           << " instances";
    return worst <= 1e-8;
  });
}

/// Analytic dynamics Jacobians against central finite differences.
inline SuiteResult verify_jacobians(int points = 100, std::uint64_t seed = 3) {
  using namespace verify_detail;
  return timed_suite("dynamics-jacobians", [&](std::ostringstream& detail) {
    Rng rng(seed);
    double worst = 0.0;
    const double h = 1e-6;
    for (int k = 0; k < points; ++k) {
      const State x = random_state(rng);
      const Control u{uniform(rng, -0.3, 0.3), uniform(rng, -1.5, 1.5)};
      const double b = uniform(rng, 0.5, 3.0);
      Mat4 A;
      Mat42 B;
      linearize_step(x, u, 0.1, b, A, B);
      for (int i = 0; i < 4; ++i) {
        Vec4 xp = x.vec(), xm = x.vec();
        xp[i] += h;
        xm[i] -= h;
        const Vec4 col = (step(State::from_vec(xp), u, 0.1, b).vec() -
                          step(State::from_vec(xm), u, 0.1, b).vec()) /
                         (2.0 * h);
        const double scale = std::max(1.0, col.cwiseAbs().maxCoeff());
        worst = std::max(worst, (A.col(i) - col).cwiseAbs().maxCoeff() / scale);
      }
      for (int i = 0; i < 2; ++i) {
        Vec2 up = u.vec(), um = u.vec();
        up[i] += h;
        um[i] -= h;
        const Vec4 col = (step(x, Control::from_vec(up), 0.1, b).vec() -
                          step(x, Control::from_vec(um), 0.1, b).vec()) /
                         (2.0 * h);
        const double scale = std::max(1.0, col.cwiseAbs().maxCoeff());
        worst = std::max(worst, (B.col(i) - col).cwiseAbs().maxCoeff() / scale);
      }
    }
    detail << "worst relative error " << worst << " over " << points
           << " points";
    return worst <= 1e-5;
  });
}

/// Gauss-Newton coupling model gradient at zero against finite differences
/// of the true collision cost, on random violating configurations.
inline SuiteResult verify_gauss_newton_gradients(int points = 100,
                                                 std::uint64_t seed = 4) {
  using namespace verify_detail;
  return timed_suite("gauss-newton-gradient", [&](std::ostringstream& detail) {
    Rng rng(seed);
    const FootprintModel fp{0.4, -0.4};
    const CollisionSpec spec{3.0, 1.4};
    double worst = 0.0;
    int active = 0;
    while (active < points) {
      Trajectory a, b;
      a.states = {random_state(rng)};
      State xb = random_state(rng);
      xb.px = a.states[0].px + uniform(rng, -2.5, 2.5);
      xb.py = a.states[0].py + uniform(rng, -2.5, 2.5);
      b.states = {xb};
      const GaussNewtonCoupling gn = convexify_coupling(a, b, fp, spec);
      if (!gn.any_active[0]) continue;
      ++active;
      Vec4 model_grad = Vec4::Zero();
      for (int pair = 0; pair < 4; ++pair)
        model_grad +=
            2.0 * gn.offsets[0][pair] * gn.rows_i[0].row(pair).transpose();
      const double h = 1e-6;
      Vec4 fd;
      for (int i = 0; i < 4; ++i) {
        Trajectory ap = a, am = a;
        Vec4 xp = a.states[0].vec(), xm = a.states[0].vec();
        xp[i] += h;
        xm[i] -= h;
        ap.states[0] = State::from_vec(xp);
        am.states[0] = State::from_vec(xm);
        fd[i] = (collision_cost(ap, b, fp, spec) -
                 collision_cost(am, b, fp, spec)) /
                (2.0 * h);
      }
      const double scale = std::max(1.0, fd.cwiseAbs().maxCoeff());
      worst = std::max(worst, (model_grad - fd).cwiseAbs().maxCoeff() / scale);
    }
    detail << "worst relative error " << worst << " over " << points
           << " violating configurations";
    return worst <= 1e-4;
  });
}

/// Inner convexified problem: ADMM run to consensus against the dense KKT
/// oracle, with the lambda-conservation invariant monitored throughout.
inline SuiteResult verify_inner_admm(int instances = 50,
                                     std::uint64_t seed = 5) {
  using namespace verify_detail;
  return timed_suite("inner-admm-vs-kkt", [&](std::ostringstream& detail) {
    Rng rng(seed);
    double worst_obj = 0.0, worst_lambda = 0.0, worst_consensus = 0.0;
    for (int k = 0; k < instances; ++k) {
      // Clustered feasible instances so couplings activate.
      GameSpec game;
      const int N = uniform_int(rng, 2, 4);
      const int T = uniform_int(rng, 2, 5);
      game.horizon = T;
      game.dt = 0.1;
      game.wheelbase = 1.0;
      game.collision.d_safe = 2.0;
      game.collision.beta = 1.4;
      game.footprint = FootprintModel{0.25, -0.25};
      std::vector<std::vector<double>> marginals;
      for (int i = 0; i < N; ++i) {
        const int K = uniform_int(rng, 1, 2);
        std::vector<double> m(K);
        double sum = 0.0;
        for (double& p : m) {
          p = uniform(rng, 0.2, 1.0);
          sum += p;
        }
        for (double& p : m) p /= sum;
        marginals.push_back(m);
        for (int t = 0; t < K; ++t) {
          TypePlayer tp;
          tp.agent = i;
          tp.type_index = t;
          tp.initial_state = State{uniform(rng, -1.0, 1.0),
                                   uniform(rng, -1.0, 1.0),
                                   uniform(rng, -0.4, 0.4),
                                   uniform(rng, 0.5, 1.5)};
          tp.reference.assign(T + 1,
                              State{uniform(rng, -2.0, 2.0),
                                    uniform(rng, -2.0, 2.0), 0.0, 1.0});
          game.players.push_back(tp);
          game.q_state.push_back(Vec4(uniform(rng, 0.1, 1.0),
                                      uniform(rng, 0.1, 1.0), 0.0,
                                      uniform(rng, 0.1, 1.0)));
          game.r_control.push_back(
              Vec2(uniform(rng, 0.5, 2.0), uniform(rng, 0.1, 1.0)));
        }
      }
      game.prior = BeliefPrior::independent(marginals);
      game.validate();
      const InteractionGraph graph = build_bayesian_graph(game);
      const JointStrategy nominal = default_initial_strategy(game);

      SolverParams params;
      AdmmSolver solver(game, graph, params);
      solver.set_nominal(nominal, true);
      for (int it = 0; it < 5000; ++it) {
        solver.inner_iteration();
        worst_lambda = std::max(worst_lambda, solver.max_lambda_sum());
        if (it >= 5 && solver.max_consensus_residual() < 1e-7 &&
            solver.max_primal_coupling_residual() < 5e-5) {
          break;
        }
      }
      const DenseQpResult dense = dense_qp_solve(game, graph, nominal);
      const double gap =
          std::abs(solver.convexified_objective() - dense.objective) /
          (1.0 + std::abs(dense.objective));
      worst_obj = std::max(worst_obj, gap);
      worst_consensus =
          std::max(worst_consensus, solver.max_consensus_residual());
    }
    detail << "worst objective gap " << worst_obj << ", lambda-sum "
           << worst_lambda << ", consensus " << worst_consensus << " over "
           << instances << " instances";
    return worst_obj <= 1e-4 && worst_lambda <= 1e-10 &&
           worst_consensus <= 1e-4;
  });
}

inline std::vector<SuiteResult> run_verification_suites(bool quick = false,
                                                        std::uint64_t seed = 7) {
  std::vector<SuiteResult> results;
  results.push_back(
      verify_potential_identity(quick ? 200 : 1000, seed + 1));
  results.push_back(
      verify_contingency_identity(quick ? 100 : 500, seed + 2));
  results.push_back(verify_jacobians(100, seed + 3));
  results.push_back(verify_gauss_newton_gradients(100, seed + 4));
  results.push_back(verify_inner_admm(quick ? 10 : 50, seed + 5));
  return results;
}

}  // namespace trajgame
