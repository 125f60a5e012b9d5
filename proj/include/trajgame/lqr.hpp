#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

#include "trajgame/types.hpp"

namespace trajgame {

/// Time-varying affine LQR around a fixed initial deviation dx_0 = 0:
///
///   min  sum_{tau=0}^{T} dx' Qxx dx + qx . dx
///      + sum_{tau=0}^{T-1} du' Ruu du + qu . du
///   s.t. dx_{tau+1} = A_tau dx_tau + B_tau du_tau
///
/// Backward Riccati recursion on V_tau(dx) = dx' P dx + p . dx gives the
/// policy du = K dx + k; the forward pass recovers the minimizer.
/// Quadratic terms carry no 1/2 factor, matching the cost convention used
/// throughout (||.||^2-style stage costs).
template <int NX, int NU>
struct LqrProblem {
  using MatXX = Eigen::Matrix<double, NX, NX>;
  using MatXU = Eigen::Matrix<double, NX, NU>;
  using MatUU = Eigen::Matrix<double, NU, NU>;
  using VecNX = Eigen::Matrix<double, NX, 1>;
  using VecNU = Eigen::Matrix<double, NU, 1>;

  std::vector<MatXX> A;    // length T
  std::vector<MatXU> B;    // length T
  std::vector<MatXX> Qxx;  // length T+1
  std::vector<VecNX> qx;   // length T+1
  std::vector<MatUU> Ruu;  // length T
  std::vector<VecNU> qu;   // length T

  int horizon() const { return static_cast<int>(A.size()); }
};

template <int NX, int NU>
struct LqrSolution {
  std::vector<typename LqrProblem<NX, NU>::VecNX> dx;  // length T+1
  std::vector<typename LqrProblem<NX, NU>::VecNU> du;  // length T
  std::vector<Eigen::Matrix<double, NU, NX>> K;        // feedback gains
  std::vector<typename LqrProblem<NX, NU>::VecNU> k;   // feedforward
};

template <int NX, int NU>
LqrSolution<NX, NU> solve_lqr(const LqrProblem<NX, NU>& prob) {
  using MatXX = typename LqrProblem<NX, NU>::MatXX;
  using MatUX = Eigen::Matrix<double, NU, NX>;
  using MatUU = typename LqrProblem<NX, NU>::MatUU;
  using VecNX = typename LqrProblem<NX, NU>::VecNX;
  using VecNU = typename LqrProblem<NX, NU>::VecNU;

  const int T = prob.horizon();
  LqrSolution<NX, NU> sol;
  sol.K.resize(T);
  sol.k.resize(T);

  MatXX P = prob.Qxx[T];
  VecNX p = prob.qx[T];
  for (int tau = T - 1; tau >= 0; --tau) {
    const auto& A = prob.A[tau];
    const auto& B = prob.B[tau];
    const MatUU H = prob.Ruu[tau] + B.transpose() * P * B;
    const MatUX G = B.transpose() * P * A;  // = Qux
    const VecNU gu = prob.qu[tau] + B.transpose() * p;

    Eigen::LLT<MatUU> llt(H);
    if (llt.info() != Eigen::Success)
      throw std::logic_error("solve_lqr: stage Hessian not positive definite");
    sol.K[tau] = -llt.solve(G);
    sol.k[tau] = -0.5 * llt.solve(gu);

    const MatXX Qxx = prob.Qxx[tau] + A.transpose() * P * A;
    P = Qxx + G.transpose() * sol.K[tau];
    P = 0.5 * (P + P.transpose());
    p = prob.qx[tau] + A.transpose() * p + sol.K[tau].transpose() * gu;
  }

  sol.dx.resize(T + 1);
  sol.du.resize(T);
  sol.dx[0] = VecNX::Zero(prob.Qxx[0].rows());
  for (int tau = 0; tau < T; ++tau) {
    sol.du[tau] = sol.K[tau] * sol.dx[tau] + sol.k[tau];
    sol.dx[tau + 1] = prob.A[tau] * sol.dx[tau] + prob.B[tau] * sol.du[tau];
  }
  return sol;
}

/// Objective value of an LqrProblem at a candidate (dx, du).
template <int NX, int NU>
double lqr_objective(const LqrProblem<NX, NU>& prob,
                     const std::vector<typename LqrProblem<NX, NU>::VecNX>& dx,
                     const std::vector<typename LqrProblem<NX, NU>::VecNU>& du) {
  const int T = prob.horizon();
  double val = 0.0;
  for (int tau = 0; tau <= T; ++tau) {
    val += dx[tau].dot(prob.Qxx[tau] * dx[tau]) + prob.qx[tau].dot(dx[tau]);
  }
  for (int tau = 0; tau < T; ++tau) {
    val += du[tau].dot(prob.Ruu[tau] * du[tau]) + prob.qu[tau].dot(du[tau]);
  }
  return val;
}

/// Per-timestep feedback policy {k_tau, K_tau} of one type-player.
struct FeedbackPolicy {
  std::vector<Vec2> k;
  std::vector<Mat24> K;
};

}  // namespace trajgame
