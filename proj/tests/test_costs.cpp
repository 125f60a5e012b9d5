#include <catch2/catch_amalgamated.hpp>

#include "support/test_util.hpp"
#include "trajgame/costs.hpp"

using namespace trajgame;
using test::Rng;

namespace {

Trajectory single_state_traj(const State& x) {
  Trajectory traj;
  traj.states = {x};
  return traj;
}

}  // namespace

TEST_CASE("ego cost: exact tracking with zero controls costs nothing") {
  Rng rng(11);
  const Trajectory traj = rollout(State{0, 0, 0, 2}, std::vector<Control>(5),
                                  0.1, 1.0);
  ReferenceTrajectory ref(traj.states.begin(), traj.states.end());
  CHECK(ego_cost(traj, ref, Vec4(1, 1, 1, 1), Vec2(1, 1)) == 0.0);
}

TEST_CASE("ego cost: single-timestep weighted norm") {
  // Q = diag(0,1,0,2), x - x_ref = [5,1,0,0.5], u = 0 -> 1*1 + 2*0.25 = 1.5
  Trajectory traj = single_state_traj(State{5, 1, 0, 0.5});
  ReferenceTrajectory ref = {State{0, 0, 0, 0}};
  const double c = ego_cost(traj, ref, Vec4(0, 1, 0, 2), Vec2(10, 0.1));
  CHECK(c == Catch::Approx(1.5).epsilon(1e-14));
}

TEST_CASE("ego cost: linear in the weights") {
  Rng rng(5);
  const Trajectory traj = test::random_free_trajectory(rng, 6);
  const ReferenceTrajectory ref = test::random_reference(rng, 6);
  const Vec4 q(0.5, 1.0, 0.2, 2.0);
  const Vec2 r(1.5, 0.3);
  CHECK(ego_cost(traj, ref, 2.0 * q, 2.0 * r) ==
        Catch::Approx(2.0 * ego_cost(traj, ref, q, r)));
}

TEST_CASE("ego cost rejects mismatched lengths") {
  Trajectory traj = single_state_traj(State{});
  ReferenceTrajectory ref(3);
  CHECK_THROWS_AS(ego_cost(traj, ref, Vec4::Ones(), Vec2::Ones()), ConfigError);
}

TEST_CASE("circle centers follow the body axis") {
  FootprintModel fp{0.5, -0.5};
  SECTION("theta = 0 moves along x") {
    const auto c = circle_centers(State{1, 2, 0, 0}, fp);
    CHECK(c[0].x() == Catch::Approx(1.5));
    CHECK(c[0].y() == Catch::Approx(2.0));
    CHECK(c[1].x() == Catch::Approx(0.5));
  }
  SECTION("theta = pi/2 moves along y") {
    const auto c = circle_centers(State{1, 2, M_PI / 2.0, 0}, fp);
    CHECK(c[0].x() == Catch::Approx(1.0));
    CHECK(c[0].y() == Catch::Approx(2.5));
    CHECK(c[1].y() == Catch::Approx(1.5));
  }
  SECTION("random pose agrees with a rotation-matrix oracle") {
    Rng rng(17);
    for (int rep = 0; rep < 50; ++rep) {
      const State x = test::random_state(rng);
      const auto c = circle_centers(x, fp);
      Eigen::Rotation2D<double> rot(x.theta);
      const Vec2 front = x.position() + rot * Vec2(fp.front_offset, 0.0);
      const Vec2 rear = x.position() + rot * Vec2(fp.rear_offset, 0.0);
      CHECK((c[0] - front).norm() < 1e-12);
      CHECK((c[1] - rear).norm() < 1e-12);
    }
  }
}

TEST_CASE("collision cost: support and symmetry") {
  FootprintModel fp{0.25, -0.25};
  CollisionSpec spec{4.5, 1.4};
  SECTION("far apart costs nothing") {
    Trajectory a = single_state_traj(State{0, 0, 0, 0});
    Trajectory b = single_state_traj(State{100, 0, 0, 0});
    CHECK(collision_cost(a, b, fp, spec) == 0.0);
  }
  SECTION("single violating pair matches the hinge formula") {
    // Point-like footprints: all 4 circle pairs coincide at distance 3.5.
    FootprintModel point{0.0, 0.0};
    Trajectory a = single_state_traj(State{0, 0, 0, 0});
    Trajectory b = single_state_traj(State{3.5, 0, 0, 0});
    // Each of the 4 pairs contributes 1.4 * (3.5 - 4.5)^2 = 1.4.
    CHECK(collision_cost(a, b, point, spec) == Catch::Approx(4 * 1.4));
  }
  SECTION("symmetric in its arguments") {
    Rng rng(23);
    for (int rep = 0; rep < 30; ++rep) {
      const Trajectory a = test::random_free_trajectory(rng, 4);
      const Trajectory b = test::random_free_trajectory(rng, 4);
      CHECK(collision_cost(a, b, fp, spec) ==
            collision_cost(b, a, fp, spec));
    }
  }
}

TEST_CASE("convexify_ego is the exact quadratic model") {
  Rng rng(31);
  const Trajectory traj = test::random_free_trajectory(rng, 5);
  const ReferenceTrajectory ref = test::random_reference(rng, 5);
  const Vec4 q(0.3, 1.0, 0.0, 2.0);
  const Vec2 r(1.0, 0.2);
  const EgoQuadratic model = convexify_ego(traj, ref, q, r);

  SECTION("zero displacement reproduces the cost") {
    std::vector<Vec4> dx(6, Vec4::Zero());
    std::vector<Vec2> du(5, Vec2::Zero());
    CHECK(model.evaluate(dx, du) == Catch::Approx(ego_cost(traj, ref, q, r)));
  }
  SECTION("model equals the shifted cost identically") {
    std::vector<Vec4> dx(6);
    std::vector<Vec2> du(5);
    Trajectory shifted = traj;
    for (int tau = 0; tau <= 5; ++tau) {
      dx[tau] = 0.1 * test::random_state(rng).vec();
      shifted.states[tau] = State::from_vec(traj.states[tau].vec() + dx[tau]);
    }
    for (int tau = 0; tau < 5; ++tau) {
      du[tau] = 0.1 * test::random_control(rng).vec();
      shifted.controls[tau] =
          Control::from_vec(traj.controls[tau].vec() + du[tau]);
    }
    CHECK(model.evaluate(dx, du) ==
          Catch::Approx(ego_cost(shifted, ref, q, r)).epsilon(1e-12));
  }
  SECTION("gradient at zero matches finite differences") {
    const auto f = [&](const Vec4& x0) {
      Trajectory t = traj;
      t.states[2] = State::from_vec(x0);
      return ego_cost(t, ref, q, r);
    };
    const Vec4 fd = test::fd_state_gradient(f, traj.states[2].vec());
    CHECK((model.grad_x[2] - fd).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("convexify_coupling: Gauss-Newton fidelity") {
  FootprintModel fp{0.4, -0.4};
  CollisionSpec spec{3.0, 1.4};
  SECTION("non-overlapping nominals produce an identically zero model") {
    Trajectory a = single_state_traj(State{0, 0, 0, 0});
    Trajectory b = single_state_traj(State{50, 0, 0, 0});
    const GaussNewtonCoupling gn = convexify_coupling(a, b, fp, spec);
    CHECK_FALSE(gn.any_active[0]);
    CHECK(gn.rows_i[0].cwiseAbs().maxCoeff() == 0.0);
    CHECK(gn.offsets[0].cwiseAbs().maxCoeff() == 0.0);
  }
  SECTION("zero displacement reproduces the collision cost") {
    Rng rng(41);
    for (int rep = 0; rep < 20; ++rep) {
      Trajectory a = test::random_free_trajectory(rng, 3);
      Trajectory b = test::random_free_trajectory(rng, 3);
      // Pull them close together so the hinge activates.
      for (auto& s : b.states) {
        s.px = a.states[0].px + test::uniform(rng, -2.0, 2.0);
        s.py = a.states[0].py + test::uniform(rng, -2.0, 2.0);
      }
      const GaussNewtonCoupling gn = convexify_coupling(a, b, fp, spec);
      std::vector<Vec4> zero(4, Vec4::Zero());
      CHECK(gn.evaluate(zero, zero) ==
            Catch::Approx(collision_cost(a, b, fp, spec)).margin(1e-12));
    }
  }
  SECTION("coefficient rows and model gradient match finite differences") {
    Rng rng(43);
    double worst_row = 0.0;
    double worst_grad = 0.0;
    int active_cases = 0;
    for (int rep = 0; rep < 100; ++rep) {
      Trajectory a = single_state_traj(test::random_state(rng));
      State xb = test::random_state(rng);
      xb.px = a.states[0].px + test::uniform(rng, -2.5, 2.5);
      xb.py = a.states[0].py + test::uniform(rng, -2.5, 2.5);
      Trajectory b = single_state_traj(xb);
      const GaussNewtonCoupling gn = convexify_coupling(a, b, fp, spec);
      if (!gn.any_active[0]) continue;
      ++active_cases;

      // True-cost gradient w.r.t. trajectory a's state.
      const auto f = [&](const Vec4& x) {
        Trajectory t = a;
        t.states[0] = State::from_vec(x);
        return collision_cost(t, b, fp, spec);
      };
      const Vec4 fd = test::fd_state_gradient(f, a.states[0].vec());
      // Model gradient at zero: sum over pairs of 2 l row.
      Vec4 model_grad = Vec4::Zero();
      for (int pair = 0; pair < 4; ++pair) {
        model_grad +=
            2.0 * gn.offsets[0][pair] * gn.rows_i[0].row(pair).transpose();
      }
      const double scale = std::max(1.0, fd.cwiseAbs().maxCoeff());
      worst_grad =
          std::max(worst_grad, (model_grad - fd).cwiseAbs().maxCoeff() / scale);

      // Row check: finite differences of l itself for each active pair.
      const auto offs = fp.offsets();
      for (int eta = 0; eta < 2; ++eta) {
        for (int gamma = 0; gamma < 2; ++gamma) {
          const int pair = 2 * eta + gamma;
          if (gn.offsets[0][pair] == 0.0) continue;
          const auto l_of = [&](const Vec4& x) {
            const auto ca = circle_centers(State::from_vec(x), fp)[eta];
            const auto cb = circle_centers(xb, fp)[gamma];
            return hinge_l((ca - cb).norm(), spec);
          };
          const Vec4 fd_row = test::fd_state_gradient(l_of, a.states[0].vec());
          const double rs = std::max(1.0, fd_row.cwiseAbs().maxCoeff());
          worst_row = std::max(
              worst_row,
              (gn.rows_i[0].row(pair).transpose() - fd_row).cwiseAbs().maxCoeff() /
                  rs);
        }
      }
    }
    REQUIRE(active_cases > 30);
    CHECK(worst_row <= 1e-5);
    CHECK(worst_grad <= 1e-4);
  }
  SECTION("model is convex: nonnegative on random displacement rays") {
    Rng rng(47);
    Trajectory a = single_state_traj(State{0, 0, 0.2, 1});
    Trajectory b = single_state_traj(State{1.5, 0.5, -0.1, 1});
    const GaussNewtonCoupling gn = convexify_coupling(a, b, fp, spec);
    REQUIRE(gn.any_active[0]);
    for (int rep = 0; rep < 100; ++rep) {
      std::vector<Vec4> da{test::random_state(rng).vec()};
      std::vector<Vec4> db{test::random_state(rng).vec()};
      std::vector<Vec4> zero{Vec4::Zero()};
      // Quadratic part of the model: g(d) - g(0) - grad.d must be >= 0.
      const double g0 = gn.evaluate(zero, zero);
      Vec4 grad_a = Vec4::Zero(), grad_b = Vec4::Zero();
      for (int pair = 0; pair < 4; ++pair) {
        grad_a += 2.0 * gn.offsets[0][pair] * gn.rows_i[0].row(pair).transpose();
        grad_b += 2.0 * gn.offsets[0][pair] * gn.rows_j[0].row(pair).transpose();
      }
      const double quad = gn.evaluate(da, db) - g0 - grad_a.dot(da[0]) -
                          grad_b.dot(db[0]);
      CHECK(quad >= -1e-10);
    }
  }
}

TEST_CASE("contingency penalty") {
  const Vec4 qc(50, 50, 100, 10);
  Rng rng(53);
  std::vector<Trajectory> plans(3);
  for (auto& p : plans) p = rollout(State{0, 0, 0, 1}, std::vector<Control>(6), 0.1, 1.0);

  SECTION("identical plans cost nothing") {
    CHECK(contingency_penalty(plans, 4, qc) == 0.0);
  }
  SECTION("t_b = 0 deactivates the penalty") {
    plans[1].states[0].py += 3.0;
    CHECK(contingency_penalty(plans, 0, qc) == 0.0);
  }
  SECTION("one pre-branch gap counts both ordered pairs") {
    std::vector<Trajectory> two(plans.begin(), plans.begin() + 2);
    two[1].states[2].py += 0.1;
    // 2 * (50 * 0.01) = 1.0
    CHECK(contingency_penalty(two, 4, qc) == Catch::Approx(1.0));
  }
  SECTION("branch step out of range is rejected") {
    CHECK_THROWS_AS(contingency_penalty(plans, 99, qc), ConfigError);
  }
}
