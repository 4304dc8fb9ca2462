#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>

#include "mtquad/geom.hpp"

namespace mtquad {

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Physical parameters of the vehicle and its inner rate loop.
/// Defaults describe a 0.6 kg racing quadrotor with 20 N peak thrust.
struct QuadParams {
  double mass{0.6};                                  // kg
  Vec3 inertia{2.50e-3, 2.51e-3, 4.32e-3};           // kg m^2, diagonal
  double arm_length{0.15};                           // m, hub to motor
  double max_total_thrust{20.0};                     // N
  double thrust_to_weight{5.78};                     // informational only
  double motor_time_constant{0.033};                 // s
  double torque_coeff{0.016};                        // m, yaw torque per N thrust
  double gravity{9.81};                              // m/s^2
  Vec3 body_rate_limits{10.0, 10.0, 4.0};            // rad/s
  Vec3 rate_gains{20.0, 20.0, 8.0};                  // 1/s
  double physics_dt{1.0 / 500.0};                    // s
  double control_dt{1.0 / 50.0};                     // s

  double max_motor_thrust() const { return max_total_thrust / 4.0; }
  double hover_thrust() const { return mass * gravity; }

  /// Throws std::invalid_argument describing the first violated constraint.
  void validate() const;
};

using MotorThrusts = Eigen::Vector4d;

struct QuadState {
  Vec3 position{Vec3::Zero()};       // world frame
  Quaternion attitude{};             // body -> world
  Vec3 velocity{Vec3::Zero()};       // world frame
  Vec3 body_rates{Vec3::Zero()};     // body frame
  MotorThrusts motor_thrusts{MotorThrusts::Zero()};

  using Flat = Eigen::Matrix<double, 13, 1>;
  Flat flatten() const;
  /// Motor thrusts are not part of the flat rigid-body state.
  static QuadState unflatten(const Flat& x, const MotorThrusts& motors);

  /// Level, at rest, motors at hover thrust.
  static QuadState hover(const Vec3& position, const QuadParams& params, double yaw = 0.0);
};

/// Collective-thrust and body-rate command.
struct Action {
  double collective_thrust{0.0};  // N
  Vec3 body_rates{Vec3::Zero()};  // rad/s
};

/// Affine map from tanh-range policy output to physical command.
/// Components outside [-1, 1] are clamped and counted in `clamp_count`.
Action action_from_policy_output(const Vec4& u, const QuadParams& params,
                                 std::size_t* clamp_count = nullptr);

/// Inverse of action_from_policy_output (no clamping).
Vec4 policy_output_from_action(const Action& a, const QuadParams& params);

/// X-configuration mixer. Motor order: front-right, rear-left, front-left,
/// rear-right; the first two spin so that their drag torque is +z.
struct MotorLayout {
  std::array<Vec3, 4> positions;
  std::array<double, 4> spin;

  static MotorLayout x_config(double arm_length);
  /// Body torque produced by the given motor thrusts.
  Vec3 torque(const MotorThrusts& c, double torque_coeff) const;
};

struct AllocationResult {
  MotorThrusts thrusts;
  bool saturated{false};
};

/// Splits collective thrust and body torque over four motors. Collective
/// thrust has priority, then roll/pitch, then yaw.
AllocationResult allocate(double collective, const Vec3& torque, const QuadParams& params);

/// Proportional body-rate loop with gyroscopic feedforward, followed by
/// motor allocation. Returns per-motor thrust commands in [0, max/4].
MotorThrusts rate_controller(const QuadState& state, const Action& action,
                             const QuadParams& params, bool* saturated = nullptr);

/// Time derivative of the rigid-body state at fixed motor thrusts.
QuadState::Flat dynamics_derivative(const QuadState& state, const QuadParams& params);

/// World-frame acceleration from current motor thrusts and gravity.
Vec3 linear_acceleration(const QuadState& state, const QuadParams& params);

/// Advances `dt_ctrl` seconds: per physics sub-step the motor thrusts follow
/// a first-order lag towards the rate-loop commands, then the 13-dim state is
/// RK4-integrated and the attitude re-normalized.
QuadState step(const QuadState& state, const Action& action, double dt_ctrl,
               const QuadParams& params, std::size_t* saturation_count = nullptr);

}  // namespace mtquad
