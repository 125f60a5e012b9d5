#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace trajgame {

using Vec2 = Eigen::Vector2d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat4 = Eigen::Matrix4d;
using Mat42 = Eigen::Matrix<double, 4, 2>;
using Mat24 = Eigen::Matrix<double, 2, 4>;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

inline constexpr int kStateDim = 4;    // [p_x, p_y, theta, v]
inline constexpr int kControlDim = 2;  // [delta, a]

/// Thrown when a scenario or solver input violates its contract. The
/// message carries the offending field path so the CLI can report it.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown by the bicycle model when a control drives the kinematics out
/// of their admissible domain (imaginary arc root or arcsin overflow).
class InfeasibleControlError : public std::runtime_error {
 public:
  InfeasibleControlError(const std::string& what, double v, double delta,
                         int step_index = -1)
      : std::runtime_error(what), v(v), delta(delta), step_index(step_index) {}

  double v;
  double delta;
  int step_index;  // -1 when not raised inside a rollout
};

struct State {
  double px = 0.0;
  double py = 0.0;
  double theta = 0.0;
  double v = 0.0;

  Vec4 vec() const { return Vec4(px, py, theta, v); }
  static State from_vec(const Vec4& x) { return State{x[0], x[1], x[2], x[3]}; }
  Vec2 position() const { return Vec2(px, py); }
};

struct Control {
  double delta = 0.0;  // front-wheel steering angle [rad]
  double a = 0.0;      // longitudinal acceleration [m/s^2]

  Vec2 vec() const { return Vec2(delta, a); }
  static Control from_vec(const Vec2& u) { return Control{u[0], u[1]}; }
};

/// State/control sequence of one type-player. `states` has length T+1 and
/// `controls` length T; a trajectory produced by rollout() satisfies the
/// discrete dynamics exactly.
struct Trajectory {
  std::vector<State> states;
  std::vector<Control> controls;

  int horizon() const { return static_cast<int>(controls.size()); }

  bool shape_matches(const Trajectory& other) const {
    return states.size() == other.states.size() &&
           controls.size() == other.controls.size();
  }
};

/// Per-timestep tracking target, length T+1.
using ReferenceTrajectory = std::vector<State>;

using AgentId = int;

/// One intention hypothesis of one agent: a vertex of the agent-form game.
struct TypePlayer {
  AgentId agent = 0;
  int type_index = 0;
  State initial_state;
  ReferenceTrajectory reference;
  std::string label;
};

}  // namespace trajgame
