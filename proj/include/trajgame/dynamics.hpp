#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "trajgame/types.hpp"

namespace trajgame {

/// Kinematic single-track bicycle model, discretized with timestep `dt`
/// and wheelbase `b`:
///
///   p_x' = p_x + f_r(v, delta) cos(theta)
///   p_y' = p_y + f_r(v, delta) sin(theta)
///   theta' = theta + arcsin(dt v sin(delta) / b)
///   v' = v + dt a
///
/// with arc advance f_r(v, delta) = b + dt v cos(delta)
///                                  - sqrt(b^2 - (dt v sin(delta))^2).

inline double f_r(double v, double delta, double dt, double b) {
  const double s = dt * v * std::sin(delta);
  const double root_arg = b * b - s * s;
  if (root_arg < 0.0) {
    throw InfeasibleControlError(
        "arc advance undefined: |dt*v*sin(delta)| exceeds wheelbase (v=" +
            std::to_string(v) + ", delta=" + std::to_string(delta) + ")",
        v, delta);
  }
  return b + dt * v * std::cos(delta) - std::sqrt(root_arg);
}

inline State step(const State& x, const Control& u, double dt, double b) {
  const double arc = f_r(x.v, u.delta, dt, b);
  const double sine = dt * x.v * std::sin(u.delta) / b;
  if (std::abs(sine) > 1.0) {
    throw InfeasibleControlError(
        "heading update undefined: |dt*v*sin(delta)/b| > 1 (v=" +
            std::to_string(x.v) + ", delta=" + std::to_string(u.delta) + ")",
        x.v, u.delta);
  }
  State next;
  next.px = x.px + arc * std::cos(x.theta);
  next.py = x.py + arc * std::sin(x.theta);
  next.theta = x.theta + std::asin(sine);
  next.v = x.v + dt * u.a;
  return next;
}

inline Trajectory rollout(const State& x0, const std::vector<Control>& controls,
                          double dt, double b) {
  Trajectory traj;
  traj.states.reserve(controls.size() + 1);
  traj.controls = controls;
  traj.states.push_back(x0);
  for (std::size_t tau = 0; tau < controls.size(); ++tau) {
    try {
      traj.states.push_back(step(traj.states.back(), controls[tau], dt, b));
    } catch (const InfeasibleControlError& e) {
      throw InfeasibleControlError(
          std::string(e.what()) + " at step " + std::to_string(tau),
          e.v, e.delta, static_cast<int>(tau));
    }
  }
  return traj;
}

/// Analytic Jacobians of step() about a nominal trajectory: A_tau = df/dx,
/// B_tau = df/du, one pair per control step.
struct LinearizedDynamics {
  std::vector<Mat4> A;
  std::vector<Mat42> B;
};

inline void linearize_step(const State& x, const Control& u, double dt,
                           double b, Mat4& A, Mat42& B) {
  const double sd = std::sin(u.delta);
  const double cd = std::cos(u.delta);
  const double st = std::sin(x.theta);
  const double ct = std::cos(x.theta);
  const double s = dt * x.v * sd;
  const double root = std::sqrt(b * b - s * s);
  const double arc = b + dt * x.v * cd - root;

  // d f_r / dv and d f_r / ddelta
  const double dfr_dv = dt * cd + s * dt * sd / root;
  const double dfr_dd = -dt * x.v * sd + s * dt * x.v * cd / root;

  // d asin(dt v sin(delta)/b) / {dv, ddelta}
  const double asin_arg = s / b;
  const double asin_den = std::sqrt(1.0 - asin_arg * asin_arg);
  const double dth_dv = (dt * sd / b) / asin_den;
  const double dth_dd = (dt * x.v * cd / b) / asin_den;

  A.setIdentity();
  A(0, 2) = -arc * st;
  A(0, 3) = dfr_dv * ct;
  A(1, 2) = arc * ct;
  A(1, 3) = dfr_dv * st;
  A(2, 3) = dth_dv;

  B.setZero();
  B(0, 0) = dfr_dd * ct;
  B(1, 0) = dfr_dd * st;
  B(2, 0) = dth_dd;
  B(3, 1) = dt;
}

inline LinearizedDynamics linearize(const Trajectory& traj, double dt,
                                    double b) {
  LinearizedDynamics lin;
  const int horizon = traj.horizon();
  lin.A.resize(horizon);
  lin.B.resize(horizon);
  for (int tau = 0; tau < horizon; ++tau) {
    linearize_step(traj.states[tau], traj.controls[tau], dt, b, lin.A[tau],
                   lin.B[tau]);
  }
  return lin;
}

/// Max dynamics residual ||x_{tau+1} - step(x_tau, u_tau)||_inf; zero for
/// trajectories produced by rollout().
inline double dynamics_residual(const Trajectory& traj, double dt, double b) {
  double res = 0.0;
  for (int tau = 0; tau < traj.horizon(); ++tau) {
    const State pred = step(traj.states[tau], traj.controls[tau], dt, b);
    const Vec4 diff = traj.states[tau + 1].vec() - pred.vec();
    res = std::max(res, diff.cwiseAbs().maxCoeff());
  }
  return res;
}

}  // namespace trajgame
