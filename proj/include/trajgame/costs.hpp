#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "trajgame/types.hpp"

namespace trajgame {

/// Two-circle footprint: circle centers sit on the longitudinal body axis
/// at the given signed offsets from the reference point.
struct FootprintModel {
  double front_offset = 0.5;
  double rear_offset = -0.5;

  std::array<double, 2> offsets() const { return {front_offset, rear_offset}; }
};

struct CollisionSpec {
  double d_safe = 4.5;  // meters, center-to-center
  double beta = 1.4;    // penalty weight
};

inline double weighted_sqnorm(const Vec4& x, const Vec4& w) {
  return x.cwiseProduct(w).dot(x);
}

/// Quadratic tracking cost sum_tau ||x - x_ref||^2_Q + ||u||^2_R with
/// diagonal weights.
inline double ego_cost(const Trajectory& traj, const ReferenceTrajectory& ref,
                       const Vec4& q_diag, const Vec2& r_diag) {
  if (traj.states.size() != ref.size())
    throw ConfigError("ego_cost: trajectory/reference length mismatch");
  double cost = 0.0;
  for (std::size_t tau = 0; tau < traj.states.size(); ++tau) {
    cost += weighted_sqnorm(traj.states[tau].vec() - ref[tau].vec(), q_diag);
  }
  for (const Control& u : traj.controls) {
    const Vec2 uv = u.vec();
    cost += uv.cwiseProduct(r_diag).dot(uv);
  }
  return cost;
}

inline std::array<Vec2, 2> circle_centers(const State& x,
                                          const FootprintModel& footprint) {
  const Vec2 axis(std::cos(x.theta), std::sin(x.theta));
  return {x.position() + footprint.front_offset * axis,
          x.position() + footprint.rear_offset * axis};
}

/// Hinge term l = sqrt(beta) (d - d_safe) for d < d_safe, else 0.
inline double hinge_l(double d, const CollisionSpec& spec) {
  return d < spec.d_safe ? std::sqrt(spec.beta) * (d - spec.d_safe) : 0.0;
}

/// Pairwise collision cost sum_tau sum_{circle pairs} l^2. Symmetric in its
/// trajectory arguments.
inline double collision_cost(const Trajectory& traj_i, const Trajectory& traj_j,
                             const FootprintModel& footprint,
                             const CollisionSpec& spec) {
  if (traj_i.states.size() != traj_j.states.size())
    throw ConfigError("collision_cost: horizon mismatch");
  // Circle centers sit within max |offset| of the reference point, so all
  // four pairs are inactive whenever the reference points are farther than
  // d_safe plus both reaches.
  const double reach = std::max(std::abs(footprint.front_offset),
                                std::abs(footprint.rear_offset));
  const double cutoff = spec.d_safe + 2.0 * reach;
  double cost = 0.0;
  for (std::size_t tau = 0; tau < traj_i.states.size(); ++tau) {
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
    // Grouped so that swapping the argument order permutes only the
    // operands of commutative additions: the cost is bitwise symmetric.
    cost += (sq(ci[0], cj[0]) + sq(ci[1], cj[1])) +
            (sq(ci[0], cj[1]) + sq(ci[1], cj[0]));
  }
  return cost;
}

/// Exact quadratic model of the ego cost in (dx, du):
///   c(X + dX) = c(X) + sum_tau gx_tau . dx_tau + dx_tau^T Q dx_tau
///             + sum_tau gu_tau . du_tau + du_tau^T R du_tau.
struct EgoQuadratic {
  double value_at_zero = 0.0;
  std::vector<Vec4> grad_x;  // 2 Q (x - x_ref), length T+1
  std::vector<Vec2> grad_u;  // 2 R u, length T
  Vec4 q_diag;
  Vec2 r_diag;

  double evaluate(const std::vector<Vec4>& dx,
                  const std::vector<Vec2>& du) const {
    double val = value_at_zero;
    for (std::size_t tau = 0; tau < dx.size(); ++tau) {
      val += grad_x[tau].dot(dx[tau]) + weighted_sqnorm(dx[tau], q_diag);
    }
    for (std::size_t tau = 0; tau < du.size(); ++tau) {
      val += grad_u[tau].dot(du[tau]) +
             du[tau].cwiseProduct(r_diag).dot(du[tau]);
    }
    return val;
  }
};

inline EgoQuadratic convexify_ego(const Trajectory& traj,
                                  const ReferenceTrajectory& ref,
                                  const Vec4& q_diag, const Vec2& r_diag) {
  EgoQuadratic model;
  model.q_diag = q_diag;
  model.r_diag = r_diag;
  model.value_at_zero = ego_cost(traj, ref, q_diag, r_diag);
  model.grad_x.resize(traj.states.size());
  model.grad_u.resize(traj.controls.size());
  for (std::size_t tau = 0; tau < traj.states.size(); ++tau) {
    model.grad_x[tau] =
        2.0 * q_diag.cwiseProduct(traj.states[tau].vec() - ref[tau].vec());
  }
  for (std::size_t tau = 0; tau < traj.controls.size(); ++tau) {
    model.grad_u[tau] = 2.0 * r_diag.cwiseProduct(traj.controls[tau].vec());
  }
  return model;
}

/// Gauss-Newton expansion of the pairwise collision cost about a nominal
/// trajectory pair. Rows follow the circle-pair order (ff, fr, rf, rr),
/// where the first letter is trajectory i's circle. For pair (eta, gamma):
///   row_i = d l / d x_i,  row_j = d l / d x_j,  offset = l at the nominal.
/// Rows and offsets are identically zero for inactive (d >= d_safe) pairs.
struct GaussNewtonCoupling {
  std::vector<Mat4> rows_i;     // per timestep, 4 stacked 1x4 rows
  std::vector<Mat4> rows_j;
  std::vector<Vec4> offsets;    // per timestep, l per circle pair
  std::vector<bool> any_active;

  /// Model value at displacement (dxi, dxj): sum of squared affine forms.
  double evaluate(const std::vector<Vec4>& dxi,
                  const std::vector<Vec4>& dxj) const {
    double val = 0.0;
    for (std::size_t tau = 0; tau < offsets.size(); ++tau) {
      if (!any_active[tau]) continue;
      const Vec4 affine =
          rows_i[tau] * dxi[tau] + rows_j[tau] * dxj[tau] + offsets[tau];
      val += affine.squaredNorm();
    }
    return val;
  }
};

namespace detail {

// d(center)/d(state) for a circle at signed offset o: 2x4.
inline Eigen::Matrix<double, 2, 4> center_jacobian(const State& x, double o) {
  Eigen::Matrix<double, 2, 4> jac = Eigen::Matrix<double, 2, 4>::Zero();
  jac(0, 0) = 1.0;
  jac(1, 1) = 1.0;
  jac(0, 2) = -o * std::sin(x.theta);
  jac(1, 2) = o * std::cos(x.theta);
  return jac;
}

}  // namespace detail

inline GaussNewtonCoupling convexify_coupling(const Trajectory& traj_i,
                                              const Trajectory& traj_j,
                                              const FootprintModel& footprint,
                                              const CollisionSpec& spec) {
  if (traj_i.states.size() != traj_j.states.size())
    throw ConfigError("convexify_coupling: horizon mismatch");
  const std::size_t len = traj_i.states.size();
  GaussNewtonCoupling gn;
  gn.rows_i.assign(len, Mat4::Zero());
  gn.rows_j.assign(len, Mat4::Zero());
  gn.offsets.assign(len, Vec4::Zero());
  gn.any_active.assign(len, false);

  const double sqrt_beta = std::sqrt(spec.beta);
  const double reach = std::max(std::abs(footprint.front_offset),
                                std::abs(footprint.rear_offset));
  const double cutoff = spec.d_safe + 2.0 * reach;
  for (std::size_t tau = 0; tau < len; ++tau) {
    const State& xi = traj_i.states[tau];
    const State& xj = traj_j.states[tau];
    if ((xi.position() - xj.position()).squaredNorm() >= cutoff * cutoff) {
      continue;
    }
    const auto ci = circle_centers(xi, footprint);
    const auto cj = circle_centers(xj, footprint);
    const auto offs = footprint.offsets();
    int pair = 0;
    for (int eta = 0; eta < 2; ++eta) {
      for (int gamma = 0; gamma < 2; ++gamma, ++pair) {
        const Vec2 diff = ci[eta] - cj[gamma];
        const double d = diff.norm();
        if (d >= spec.d_safe || d < 1e-12) continue;
        gn.any_active[tau] = true;
        gn.offsets[tau][pair] = sqrt_beta * (d - spec.d_safe);
        const Vec2 dir = diff / d;
        gn.rows_i[tau].row(pair) =
            sqrt_beta * dir.transpose() * detail::center_jacobian(xi, offs[eta]);
        gn.rows_j[tau].row(pair) = -sqrt_beta * dir.transpose() *
                                   detail::center_jacobian(xj, offs[gamma]);
      }
    }
  }
  return gn;
}

/// Soft consensus penalty between an ego agent's per-hypothesis plans:
/// sum over ordered pairs (theta, theta'), theta' != theta, of
/// sum_{tau < t_b} ||x^theta_tau - x^theta'_tau||^2_{Q_contingency}.
inline double contingency_penalty(const std::vector<Trajectory>& plans,
                                  int branching_step, const Vec4& q_contingency) {
  if (plans.empty()) return 0.0;
  const int len = static_cast<int>(plans.front().states.size());
  if (branching_step < 0 || branching_step > len - 1)
    throw ConfigError("contingency_penalty: branching step out of range");
  for (const Trajectory& p : plans) {
    if (static_cast<int>(p.states.size()) != len)
      throw ConfigError("contingency_penalty: plans must share horizon");
  }
  double cost = 0.0;
  for (std::size_t a = 0; a < plans.size(); ++a) {
    for (std::size_t b = a + 1; b < plans.size(); ++b) {
      for (int tau = 0; tau < branching_step; ++tau) {
        const Vec4 gap =
            plans[a].states[tau].vec() - plans[b].states[tau].vec();
        cost += 2.0 * weighted_sqnorm(gap, q_contingency);
      }
    }
  }
  return cost;
}

}  // namespace trajgame
