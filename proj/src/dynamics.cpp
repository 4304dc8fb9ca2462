#include "mtquad/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mtquad {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("QuadParams: ") + what);
}

}  // namespace

void QuadParams::validate() const {
  require(mass > 0.0, "mass must be positive");
  require((inertia.array() > 0.0).all(), "inertia components must be positive");
  require(arm_length > 0.0, "arm_length must be positive");
  require(gravity > 0.0, "gravity must be positive");
  require(max_total_thrust >= mass * gravity, "max_total_thrust cannot hold hover");
  require(motor_time_constant > 0.0, "motor_time_constant must be positive");
  require(torque_coeff > 0.0, "torque_coeff must be positive");
  require((body_rate_limits.array() > 0.0).all(), "body_rate_limits must be positive");
  require((rate_gains.array() >= 0.0).all(), "rate_gains must be non-negative");
  require(physics_dt > 0.0 && control_dt > 0.0, "time steps must be positive");
  const double ratio = control_dt / physics_dt;
  require(std::abs(ratio - std::round(ratio)) < 1e-9, "control_dt must be a multiple of physics_dt");
}

QuadState::Flat QuadState::flatten() const {
  Flat x;
  x << position, attitude.coeffs(), velocity, body_rates;
  return x;
}

QuadState QuadState::unflatten(const Flat& x, const MotorThrusts& motors) {
  QuadState s;
  s.position = x.segment<3>(0);
  s.attitude = Quaternion::from_coeffs(x.segment<4>(3));
  s.velocity = x.segment<3>(7);
  s.body_rates = x.segment<3>(10);
  s.motor_thrusts = motors;
  return s;
}

QuadState QuadState::hover(const Vec3& position, const QuadParams& params, double yaw) {
  QuadState s;
  s.position = position;
  s.attitude = quat_from_axis_angle(Vec3::UnitZ(), yaw);
  s.motor_thrusts.setConstant(params.hover_thrust() / 4.0);
  return s;
}

Action action_from_policy_output(const Vec4& u, const QuadParams& params,
                                 std::size_t* clamp_count) {
  Vec4 c = u;
  for (int i = 0; i < 4; ++i) {
    if (!std::isfinite(c[i])) throw SimulationError("policy output is not finite");
    if (c[i] < -1.0 || c[i] > 1.0) {
      c[i] = std::clamp(c[i], -1.0, 1.0);
      if (clamp_count) ++*clamp_count;
    }
  }
  Action a;
  a.collective_thrust = 0.5 * (c[0] + 1.0) * params.max_total_thrust;
  a.body_rates = c.tail<3>().cwiseProduct(params.body_rate_limits);
  return a;
}

Vec4 policy_output_from_action(const Action& a, const QuadParams& params) {
  Vec4 u;
  u[0] = 2.0 * a.collective_thrust / params.max_total_thrust - 1.0;
  u.tail<3>() = a.body_rates.cwiseQuotient(params.body_rate_limits);
  return u;
}

MotorLayout MotorLayout::x_config(double arm_length) {
  const double d = arm_length / std::sqrt(2.0);
  MotorLayout m;
  m.positions = {Vec3(d, -d, 0), Vec3(-d, d, 0), Vec3(d, d, 0), Vec3(-d, -d, 0)};
  m.spin = {1.0, 1.0, -1.0, -1.0};
  return m;
}

Vec3 MotorLayout::torque(const MotorThrusts& c, double torque_coeff) const {
  Vec3 tau = Vec3::Zero();
  for (int i = 0; i < 4; ++i) {
    tau += positions[i].cross(Vec3(0, 0, c[i]));
    tau.z() += spin[i] * torque_coeff * c[i];
  }
  return tau;
}

namespace {

// Rows of the mixing matrix are mutually orthogonal (+-1 patterns), so the
// inverse is its scaled transpose; written out to keep hover exact.
MotorThrusts mix(double collective, double tau_x, double tau_y, double tau_z,
                 const QuadParams& p) {
  const double d = p.arm_length / std::sqrt(2.0);
  const double tx = tau_x / d, ty = tau_y / d, tz = tau_z / p.torque_coeff;
  // signs: y_i/d, -x_i/d, spin_i for the x_config motor order
  return 0.25 * MotorThrusts(collective - tx - ty + tz,
                             collective + tx + ty + tz,
                             collective + tx - ty - tz,
                             collective - tx + ty - tz);
}

// Largest k in [0, 1] with 0 <= base + k * delta <= hi componentwise,
// assuming base itself is feasible.
double feasible_fraction(const MotorThrusts& base, const MotorThrusts& delta, double hi) {
  double k = 1.0;
  for (int i = 0; i < 4; ++i) {
    if (delta[i] > 0.0) k = std::min(k, (hi - base[i]) / delta[i]);
    if (delta[i] < 0.0) k = std::min(k, (0.0 - base[i]) / delta[i]);
  }
  return std::clamp(k, 0.0, 1.0);
}

}  // namespace

AllocationResult allocate(double collective, const Vec3& torque, const QuadParams& p) {
  const double cmax = p.max_motor_thrust();
  AllocationResult out;
  const double c = std::clamp(collective, 0.0, p.max_total_thrust);
  out.saturated = c != collective;

  const MotorThrusts base = mix(c, 0.0, 0.0, 0.0, p);
  const MotorThrusts rp = mix(0.0, torque.x(), torque.y(), 0.0, p);
  const double k_rp = feasible_fraction(base, rp, cmax);
  const MotorThrusts with_rp = base + k_rp * rp;
  const MotorThrusts yaw = mix(0.0, 0.0, 0.0, torque.z(), p);
  const double k_yaw = feasible_fraction(with_rp, yaw, cmax);
  out.saturated = out.saturated || k_rp < 1.0 || k_yaw < 1.0;
  out.thrusts = (with_rp + k_yaw * yaw).cwiseMax(0.0).cwiseMin(cmax);
  return out;
}

MotorThrusts rate_controller(const QuadState& state, const Action& action,
                             const QuadParams& p, bool* saturated) {
  const Vec3& w = state.body_rates;
  const Vec3 Jw = p.inertia.cwiseProduct(w);
  const Vec3 rate_err = action.body_rates - w;
  const Vec3 tau = p.inertia.cwiseProduct(p.rate_gains.cwiseProduct(rate_err)) + w.cross(Jw);
  const AllocationResult r = allocate(action.collective_thrust, tau, p);
  if (saturated) *saturated = r.saturated;
  return r.thrusts;
}

Vec3 linear_acceleration(const QuadState& s, const QuadParams& p) {
  // RK4 stages see slightly non-unit quaternions
  const Mat3 R = quat_to_rotmat(quat_normalize(s.attitude));
  return R.col(2) * (s.motor_thrusts.sum() / p.mass) - Vec3(0, 0, p.gravity);
}

QuadState::Flat dynamics_derivative(const QuadState& s, const QuadParams& p) {
  const MotorLayout layout = MotorLayout::x_config(p.arm_length);
  const Vec3& w = s.body_rates;
  const Vec3 tau = layout.torque(s.motor_thrusts, p.torque_coeff);
  const Vec3 Jw = p.inertia.cwiseProduct(w);

  QuadState::Flat dx;
  dx.segment<3>(0) = s.velocity;
  dx.segment<4>(3) = quat_derivative(s.attitude, w);
  dx.segment<3>(7) = linear_acceleration(s, p);
  dx.segment<3>(10) = (tau - w.cross(Jw)).cwiseQuotient(p.inertia);
  if (!dx.allFinite()) throw SimulationError("dynamics_derivative: non-finite state");
  return dx;
}

QuadState step(const QuadState& state, const Action& action, double dt_ctrl,
               const QuadParams& p, std::size_t* saturation_count) {
  if (!state.flatten().allFinite() || !state.motor_thrusts.allFinite()) {
    throw SimulationError("step: non-finite state");
  }
  const double ratio = dt_ctrl / p.physics_dt;
  const long n_sub = std::lround(ratio);
  if (n_sub < 1 || std::abs(ratio - static_cast<double>(n_sub)) > 1e-9) {
    throw std::invalid_argument("step: dt_ctrl must be a positive multiple of physics_dt");
  }
  const double h = p.physics_dt;
  const double decay = std::exp(-h / p.motor_time_constant);

  QuadState s = state;
  for (long i = 0; i < n_sub; ++i) {
    bool sat = false;
    const MotorThrusts cmd = rate_controller(s, action, p, &sat);
    if (sat && saturation_count) ++*saturation_count;

    const MotorThrusts motors = s.motor_thrusts;
    auto f = [&](const QuadState::Flat& x) {
      return dynamics_derivative(QuadState::unflatten(x, motors), p);
    };
    QuadState::Flat x = rk4_step(f, s.flatten(), h);
    s = QuadState::unflatten(x, motors);
    s.attitude = quat_normalize(s.attitude);
    // exact discretization of the first-order motor lag
    s.motor_thrusts = cmd + (motors - cmd) * decay;
  }
  if (!s.flatten().allFinite()) throw SimulationError("step: state diverged");
  return s;
}

}  // namespace mtquad
