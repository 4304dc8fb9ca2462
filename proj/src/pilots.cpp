#include <algorithm>
#include <cmath>

#include "mtquad/harness.hpp"

namespace mtquad {

Vec4 PolicyPilot::act(const Env&, const Observation& obs) {
  const Observation n = norm_.normalize(obs);
  return actor_forward(params_, obs.task, encode(params_, n)).mean;
}

Vec4 velocity_command(const QuadState& s, const Vec3& v_desired, const Vec3& a_feedforward,
                      const QuadParams& quad, const VelocityGains& gains) {
  const Mat3 R = quat_to_rotmat(s.attitude);
  Vec3 a = a_feedforward + gains.velocity * (v_desired - s.velocity);
  const double h = a.head<2>().norm();
  if (h > gains.max_horizontal_accel) a.head<2>() *= gains.max_horizontal_accel / h;
  a.z() = std::max(a.z(), -0.7 * quad.gravity);
  const Vec3 a_cmd = a + Vec3(0, 0, quad.gravity);
  const Vec3 z_body = R.col(2);
  const double thrust = std::clamp(quad.mass * a_cmd.dot(z_body), 0.0, quad.max_total_thrust);

  // rotate the thrust axis toward the commanded direction; zero yaw rate
  const Vec3 z_des = a_cmd.normalized();
  const Vec3 err_body = R.transpose() * z_body.cross(z_des);
  Vec3 rates(gains.attitude * err_body.x(), gains.attitude * err_body.y(), 0.0);
  rates = rates.cwiseMax(-quad.body_rate_limits).cwiseMin(quad.body_rate_limits);
  return policy_output_from_action(Action{thrust, rates}, quad).cwiseMax(-1.0).cwiseMin(1.0);
}

Vec4 VelocityPilot::act(const Env& env, const Observation&) {
  Vec3 v_d = Vec3::Zero();
  Vec3 a_ff = Vec3::Zero();
  if (env.task() == TaskId::Tracking) {
    v_d = env.desired_velocity();
    const auto& accel = env.velocity_profile().accel;
    if (env.steps() < accel.size()) a_ff = accel[env.steps()];
  }
  return velocity_command(env.state(), v_d, a_ff, env.config().quad, gains_);
}

namespace {

// Quintic Hermite with zero second derivative at both ends, so the path is
// straight through every gate and curvature is continuous across segments.
Vec3 hermite(const Vec3& p0, const Vec3& m0, const Vec3& p1, const Vec3& m1, double t) {
  const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
  return (1 - 10 * t3 + 15 * t4 - 6 * t5) * p0 + (t - 6 * t3 + 8 * t4 - 3 * t5) * m0 +
         (-4 * t3 + 7 * t4 - 3 * t5) * m1 + (10 * t3 - 15 * t4 + 6 * t5) * p1;
}

constexpr int kSamplesPerSegment = 400;
constexpr double kLateralAccel = 8.0;     // m/s^2
constexpr double kTangentialAccel = 2.0;  // m/s^2

}  // namespace

void GatePilot::begin(const Env& env) {
  const Track& track = *env.track();
  const std::size_t n = track.gates.size();
  std::vector<Vec3> points{env.state().position};
  std::vector<Vec3> tangents{track.gates[env.next_gate()].normal};
  // one full circuit past the first gate plus a run-out to the gate after it
  for (std::size_t k = 0; k <= n + 1; ++k) {
    const Gate& g = track.gates[(env.next_gate() + k) % n];
    points.push_back(g.center);
    tangents.push_back(g.normal);
  }
  path_.clear();
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    const double len = (points[i + 1] - points[i]).norm();
    for (int k = i == 0 ? 0 : 1; k <= kSamplesPerSegment; ++k)
      path_.push_back(hermite(points[i], tangents[i] * len, points[i + 1], tangents[i + 1] * len,
                              static_cast<double>(k) / kSamplesPerSegment));
  }
  const std::size_t m = path_.size();
  arc_.assign(m, 0.0);
  for (std::size_t i = 1; i < m; ++i) arc_[i] = arc_[i - 1] + (path_[i] - path_[i - 1]).norm();

  tangent_.assign(m, Vec3::Zero());
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t a = i == 0 ? 0 : i - 1, b = std::min(i + 1, m - 1);
    tangent_[i] = (path_[b] - path_[a]).normalized();
  }
  curvature_.assign(m, Vec3::Zero());
  for (std::size_t i = 1; i + 1 < m; ++i)
    curvature_[i] = (tangent_[i + 1] - tangent_[i - 1]) / (arc_[i + 1] - arc_[i - 1]);

  // fastest profile within the lateral and tangential acceleration limits
  speed_profile_.assign(m, speed_);
  for (std::size_t i = 0; i < m; ++i) {
    const double k = curvature_[i].norm();
    if (k > 1e-9) speed_profile_[i] = std::min(speed_, std::sqrt(kLateralAccel / k));
  }
  speed_profile_[0] = std::min(speed_profile_[0], env.state().velocity.norm());
  auto limit = [&](std::size_t i, std::size_t j) {
    const double reach = std::sqrt(speed_profile_[j] * speed_profile_[j] +
                                   2.0 * kTangentialAccel * std::abs(arc_[i] - arc_[j]));
    speed_profile_[i] = std::min(speed_profile_[i], reach);
  };
  for (std::size_t i = 1; i < m; ++i) limit(i, i - 1);
  for (std::size_t i = m - 1; i-- > 0;) limit(i, i + 1);
  cursor_ = 0;
}

Vec4 GatePilot::act(const Env& env, const Observation&) {
  const QuadState& s = env.state();
  // advance along the path only, so the figure-eight crossing cannot capture the cursor
  const std::size_t window = std::min<std::size_t>(path_.size(), cursor_ + kSamplesPerSegment);
  double best = (path_[cursor_] - s.position).squaredNorm();
  for (std::size_t i = cursor_ + 1; i < window; ++i) {
    const double d = (path_[i] - s.position).squaredNorm();
    if (d < best) {
      best = d;
      cursor_ = i;
    }
  }
  const std::size_t c = std::min(cursor_, path_.size() - 2);
  const double v = std::max(speed_profile_[c], 0.5);
  const double dv_ds = (speed_profile_[c + 1] - speed_profile_[c]) / std::max(1e-9, arc_[c + 1] - arc_[c]);
  const Vec3 a_ff = v * v * curvature_[c] + v * dv_ds * tangent_[c];
  const Vec3 v_d = v * tangent_[c] + gains_.cross_track * (path_[c] - s.position);
  return velocity_command(s, v_d, a_ff, env.config().quad, gains_);
}

}  // namespace mtquad
