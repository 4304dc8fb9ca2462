#include "mtquad/tasks.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace mtquad {

std::string_view task_name(TaskId task) {
  switch (task) {
    case TaskId::Racing: return "racing";
    case TaskId::Stabilization: return "stabilization";
    case TaskId::Tracking: return "tracking";
  }
  return "unknown";
}

TaskId parse_task(std::string_view name) {
  for (TaskId t : kAllTasks)
    if (task_name(t) == name) return t;
  throw std::invalid_argument("unknown task '" + std::string(name) + "'");
}

int task_obs_dim(TaskId task, bool one_hot) {
  int base = 0;
  switch (task) {
    case TaskId::Racing: base = 24; break;
    case TaskId::Stabilization: base = 4; break;
    case TaskId::Tracking: base = 6; break;
  }
  return base + (one_hot ? kOneHotDim : 0);
}

// ---------------------------------------------------------------------------

Gate Gate::from_yaw(const Vec3& center, double yaw, double size) {
  Gate g;
  g.center = center;
  g.normal = Vec3(std::cos(yaw), std::sin(yaw), 0.0);
  g.up = Vec3::UnitZ();
  g.half_width = 0.5 * size;
  g.half_height = 0.5 * size;
  return g;
}

std::array<Vec3, 4> Gate::corners() const {
  const Vec3 r = half_width * right();
  const Vec3 u = half_height * up;
  return {center - r + u, center + r + u, center + r - u, center - r - u};
}

Track default_figure8_track() {
  // x = 10 sin t, y = 5 sin 2t sampled at t = pi/4 + k pi/2, skipping the crossing
  constexpr double deg = std::numbers::pi / 180.0;
  Track t;
  t.name = "figure8";
  t.gates = {
      Gate::from_yaw({7.071, 5.0, 2.5}, 0.0 * deg),
      Gate::from_yaw({10.0, 0.0, 2.5}, -90.0 * deg),
      Gate::from_yaw({7.071, -5.0, 2.5}, 180.0 * deg),
      Gate::from_yaw({-7.071, 5.0, 2.5}, 180.0 * deg),
      Gate::from_yaw({-10.0, 0.0, 2.5}, -90.0 * deg),
      Gate::from_yaw({-7.071, -5.0, 2.5}, 0.0 * deg),
  };
  return t;
}

namespace {

Vec3 yaml_vec3(const YAML::Node& n, const std::string& where) {
  if (!n || !n.IsSequence() || n.size() != 3) {
    throw std::invalid_argument(where + ": expected a list of 3 numbers");
  }
  return {n[0].as<double>(), n[1].as<double>(), n[2].as<double>()};
}

}  // namespace

Track parse_track(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw std::invalid_argument(std::string("track: ") + e.what());
  }
  if (!root["schema"] || root["schema"].as<int>() != 1) {
    throw std::invalid_argument("track.schema: expected 1");
  }
  Track t;
  t.name = root["name"] ? root["name"].as<std::string>() : "track";
  const YAML::Node gates = root["gates"];
  if (!gates || !gates.IsSequence() || gates.size() == 0) {
    throw std::invalid_argument("track.gates: expected a non-empty list");
  }
  constexpr double deg = std::numbers::pi / 180.0;
  for (std::size_t i = 0; i < gates.size(); ++i) {
    const std::string where = "track.gates[" + std::to_string(i) + "]";
    const YAML::Node g = gates[i];
    const Vec3 c = yaml_vec3(g["center"], where + ".center");
    if (!g["yaw_deg"]) throw std::invalid_argument(where + ".yaw_deg: missing");
    const double size = g["size"] ? g["size"].as<double>() : 1.5;
    if (!(size > 0.0)) throw std::invalid_argument(where + ".size: must be positive");
    t.gates.push_back(Gate::from_yaw(c, g["yaw_deg"].as<double>() * deg, size));
  }
  return t;
}

Track load_track(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open track file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_track(ss.str());
}

std::string track_to_yaml(const Track& track) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "schema: 1\nname: " << track.name << "\ngates:\n";
  for (const Gate& g : track.gates) {
    const double yaw = std::atan2(g.normal.y(), g.normal.x()) * 180.0 / std::numbers::pi;
    os << "  - {center: [" << g.center.x() << ", " << g.center.y() << ", " << g.center.z()
       << "], yaw_deg: " << yaw << ", size: " << 2.0 * g.half_width << "}\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------

Eigen::VectorXd Observation::full() const {
  Eigen::VectorXd x(kSharedObsDim + task_specific.size());
  x << shared, task_specific;
  return x;
}

SharedObs assemble_shared_obs(const QuadState& s, const Vec4& a_prev) {
  SharedObs o;
  o << s.position, rotmat_to_6d(quat_to_rotmat(s.attitude)), s.velocity, s.body_rates, a_prev;
  return o;
}

GateObs racing_task_obs(const QuadState& s, const Track& track, std::size_t next_gate) {
  const std::size_t n = track.gates.size();
  const auto c1 = track.gates[next_gate % n].corners();
  const auto c2 = track.gates[(next_gate + 1) % n].corners();
  GateObs o;
  for (int i = 0; i < 4; ++i) {
    o.segment<3>(3 * i) = c1[i] - s.position;
    o.segment<3>(12 + 3 * i) = c2[i] - c1[i];
  }
  return o;
}

GatePass gate_pass_check(const Vec3& p_prev, const Vec3& p_curr, const Gate& gate,
                         double margin) {
  GatePass r;
  const double d0 = gate.normal.dot(p_prev - gate.center);
  const double d1 = gate.normal.dot(p_curr - gate.center);
  // half-open so a crossing split across sub-segments is counted once
  if (!(d0 < 0.0 && d1 >= 0.0)) return r;
  const double t = d0 / (d0 - d1);
  const Vec3 x = p_prev + t * (p_curr - p_prev);
  const Vec3 off = x - gate.center;
  if (std::abs(off.dot(gate.right())) > gate.half_width + margin) return r;
  if (std::abs(off.dot(gate.up)) > gate.half_height + margin) return r;
  r.passed = true;
  r.crossing = x;
  r.gate_error = off.norm();
  return r;
}

double segment_distance(const Vec3& p1, const Vec3& q1, const Vec3& p2, const Vec3& q2) {
  const Vec3 d1 = q1 - p1, d2 = q2 - p2, r = p1 - p2;
  const double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
  constexpr double eps = 1e-14;
  double s = 0.0, t = 0.0;
  if (a <= eps && e <= eps) return r.norm();
  if (a <= eps) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e <= eps) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2);
      const double denom = a * e - b * b;
      s = denom > eps ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return ((p1 + s * d1) - (p2 + t * d2)).norm();
}

// ---------------------------------------------------------------------------

double Reward::term(std::string_view name) const {
  for (const RewardTerm& t : terms)
    if (t.name == name) return t.value;
  throw std::out_of_range("no reward term '" + std::string(name) + "'");
}

namespace {

Reward make_reward(std::vector<RewardTerm> terms) {
  Reward r;
  r.terms = std::move(terms);
  for (const RewardTerm& t : r.terms) r.total += t.value;
  return r;
}

}  // namespace

double camera_angle(const QuadState& s, const Vec3& target) {
  const Vec3 axis = quat_to_rotmat(s.attitude).col(0);
  const Vec3 to = target - s.position;
  const double n = to.norm();
  if (n < 1e-12) return 0.0;
  return std::atan2(axis.cross(to).norm(), axis.dot(to));
}

Reward racing_reward(const QuadState& prev, const QuadState& curr, const Vec4& u_t,
                     const Vec4& u_prev, const Track& track, std::size_t gate_index,
                     const RacingEvents& events, const RacingRewardCoeffs& k) {
  const Vec3& target = track.gates[gate_index % track.gates.size()].center;
  const double d_prev = (target - prev.position).norm();
  const double d_curr = (target - curr.position).norm();
  const double delta = camera_angle(curr, target);
  return make_reward({
      {"progress", k.progress * (d_prev - d_curr)},
      {"perception", k.perception * std::exp(k.perception_exponent * std::pow(delta, 4))},
      {"action", k.action * (u_t - u_prev).norm()},
      {"body_rate", k.body_rate * curr.body_rates.norm()},
      {"pass", events.passed ? k.pass : 0.0},
      {"crash", events.crashed ? k.crash : 0.0},
  });
}

Reward stabilization_reward(const QuadState& s, const Vec4& u_t, const Vec4& u_prev,
                            double z_target, bool hovering,
                            const StabilizationRewardCoeffs& k, AttitudeError mode) {
  const double att =
      mode == AttitudeError::Geodesic ? geodesic_angle(s.attitude) : tilt_angle(s.attitude);
  return make_reward({
      {"height", k.height * std::abs(s.position.z() - z_target)},
      {"attitude", k.attitude * att},
      {"velocity", k.velocity * s.velocity.norm()},
      {"body_rate", k.body_rate * s.body_rates.norm()},
      {"action", k.action * (u_t - u_prev).norm()},
      {"success", hovering ? k.success : 0.0},
  });
}

Reward tracking_reward(const QuadState& s, const Vec4& u_t, const Vec4& u_prev,
                       const Vec3& v_desired, const TrackingRewardCoeffs& k) {
  return make_reward({
      {"velocity", k.velocity * (s.velocity - v_desired).norm()},
      {"body_rate", k.body_rate * s.body_rates.norm()},
      {"action", k.action * (u_t - u_prev).norm()},
  });
}

// ---------------------------------------------------------------------------

CurriculumState curriculum_initial(const CurriculumConfig& cfg) {
  CurriculumState c;
  c.speed_scale = std::min(cfg.stabilization_initial_scale, cfg.stabilization_max_scale);
  c.speed_bounds = cfg.tracking_initial_bounds.cwiseMin(cfg.tracking_max_bounds);
  return c;
}

CurriculumState curriculum_update(const CurriculumState& cur, std::uint64_t new_samples,
                                  TaskId task, const CurriculumConfig& cfg) {
  CurriculumState next = curriculum_initial(cfg);
  next.samples_seen = cur.samples_seen + new_samples;
  if (!cfg.enabled || task == TaskId::Racing || cfg.samples_per_level == 0) return next;
  next.level = next.samples_seen / cfg.samples_per_level;
  for (std::uint64_t i = 0; i < next.level; ++i) {
    if (task == TaskId::Stabilization) {
      next.speed_scale = std::min(next.speed_scale * cfg.stabilization_growth,
                                  cfg.stabilization_max_scale);
      if (next.speed_scale >= cfg.stabilization_max_scale) break;
    } else {
      next.speed_bounds = (next.speed_bounds.array() + cfg.tracking_increment)
                              .matrix()
                              .cwiseMin(cfg.tracking_max_bounds);
      if (next.speed_bounds == cfg.tracking_max_bounds) break;
    }
  }
  return next;
}

double EnvConfig::horizon(TaskId task) const {
  switch (task) {
    case TaskId::Racing: return racing.horizon;
    case TaskId::Stabilization: return stabilization.horizon;
    case TaskId::Tracking: return tracking.horizon;
  }
  return 0.0;
}

QuadState sample_stabilization_initial(Rng& rng, const CurriculumState& curriculum,
                                       const StabilizationConfig& cfg, const QuadParams& quad) {
  QuadState s;
  for (int i = 0; i < 3; ++i) s.position[i] = rng.uniform(cfg.position_min[i], cfg.position_max[i]);
  const double roll = rng.uniform(-cfg.max_tilt, cfg.max_tilt);
  const double pitch = rng.uniform(-cfg.max_tilt, cfg.max_tilt);
  const double yaw = rng.uniform(-std::numbers::pi, std::numbers::pi);
  s.attitude = quat_from_euler(roll, pitch, yaw);
  for (int i = 0; i < 3; ++i) s.body_rates[i] = rng.uniform(-cfg.max_body_rate, cfg.max_body_rate);
  const double vxy = curriculum.speed_scale * cfg.max_speed_xy;
  const double vz = curriculum.speed_scale * cfg.max_speed_z;
  s.velocity = Vec3(rng.uniform(-vxy, vxy), rng.uniform(-vxy, vxy), rng.uniform(-vz, vz));
  // zero-input flight z(t) = z0 + vz t - g t^2 / 2 is concave, so checking
  // the end of the clearance window suffices
  const double T = cfg.clearance_time;
  const double z_min = 0.5 * quad.gravity * T * T - s.velocity.z() * T;
  s.position.z() = std::max(s.position.z(), z_min);
  s.motor_thrusts.setConstant(quad.hover_thrust() / 4.0);
  return s;
}

Vec3 VelocityProfile::at(std::size_t step) const {
  if (velocity.empty()) return Vec3::Zero();
  return velocity[std::min(step, velocity.size() - 1)];
}

VelocityProfile sample_velocity_profile(Rng& rng, const CurriculumState& curriculum,
                                        std::size_t steps, double dt, const TrackingConfig& cfg) {
  VelocityProfile p;
  p.dt = dt;
  const Vec3 bound = curriculum.speed_bounds;
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    const double b = cfg.initial_velocity_fraction * bound[i];
    v[i] = rng.uniform(-b, b);
  }
  Vec3 raw = v;
  p.velocity.reserve(steps + 1);
  p.unclamped.reserve(steps + 1);
  p.accel.reserve(steps);
  p.velocity.push_back(v);
  p.unclamped.push_back(raw);
  for (std::size_t k = 0; k < steps; ++k) {
    Vec3 a;
    for (int i = 0; i < 3; ++i) a[i] = rng.uniform(-cfg.accel_max, cfg.accel_max);
    p.accel.push_back(a);
    raw += a * dt;
    v = (v + a * dt).cwiseMax(-bound).cwiseMin(bound);
    p.velocity.push_back(v);
    p.unclamped.push_back(raw);
  }
  return p;
}

VelocityProfile constant_velocity_profile(const Vec3& v, std::size_t steps, double dt) {
  VelocityProfile p;
  p.dt = dt;
  p.accel.assign(steps, Vec3::Zero());
  p.velocity.assign(steps + 1, v);
  p.unclamped = p.velocity;
  return p;
}

// ---------------------------------------------------------------------------

std::string_view termination_name(Termination t) {
  switch (t) {
    case Termination::None: return "none";
    case Termination::Crash: return "crash";
    case Termination::Success: return "success";
    case Termination::Timeout: return "timeout";
  }
  return "unknown";
}

Env::Env(TaskId task, std::shared_ptr<const EnvConfig> cfg, std::shared_ptr<const Track> track,
         std::uint64_t seed)
    : task_(task), cfg_(std::move(cfg)), track_(std::move(track)), rng_(seed) {
  if (!cfg_) throw std::invalid_argument("Env: missing config");
  cfg_->quad.validate();
  if (task_ == TaskId::Racing && (!track_ || track_->gates.empty())) {
    throw std::invalid_argument("Env: racing needs a track with at least one gate");
  }
  const double steps = cfg_->horizon(task_) / cfg_->quad.control_dt;
  if (!(steps >= 1.0)) throw std::invalid_argument("Env: horizon shorter than one control step");
  horizon_steps_ = static_cast<std::size_t>(std::llround(steps));
}

Vec3 Env::racing_start_center() const {
  const Gate& g = track_->gates.front();
  return g.center - cfg_->racing.start_distance * g.normal;
}

double Env::racing_start_yaw() const {
  const Vec3& n = track_->gates.front().normal;
  return std::atan2(n.y(), n.x());
}

std::vector<QuadState> Env::racing_start_states(std::size_t n, Rng& rng) const {
  if (task_ != TaskId::Racing) throw std::logic_error("racing_start_states: not a racing env");
  const Vec3 c = racing_start_center();
  const Vec3& h = cfg_->racing.start_half_extent;
  std::vector<QuadState> out;
  out.reserve(n);
  const auto k = static_cast<std::size_t>(std::llround(std::cbrt(static_cast<double>(n))));
  if (k * k * k == n && k > 1) {
    auto coord = [&](std::size_t i, int axis) {
      return c[axis] - h[axis] + 2.0 * h[axis] * static_cast<double>(i) / static_cast<double>(k - 1);
    };
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j)
        for (std::size_t l = 0; l < k; ++l)
          out.push_back(QuadState::hover({coord(i, 0), coord(j, 1), coord(l, 2)}, cfg_->quad,
                                         racing_start_yaw()));
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      Vec3 p;
      for (int a = 0; a < 3; ++a) p[a] = rng.uniform(c[a] - h[a], c[a] + h[a]);
      out.push_back(QuadState::hover(p, cfg_->quad, racing_start_yaw()));
    }
  }
  return out;
}

Observation Env::reset(const CurriculumState& curriculum) {
  QuadState s;
  switch (task_) {
    case TaskId::Racing: {
      Vec3 p = racing_start_center();
      const Vec3& h = cfg_->racing.start_half_extent;
      for (int a = 0; a < 3; ++a) p[a] = rng_.uniform(p[a] - h[a], p[a] + h[a]);
      s = QuadState::hover(p, cfg_->quad, racing_start_yaw());
      break;
    }
    case TaskId::Stabilization:
      s = sample_stabilization_initial(rng_, curriculum, cfg_->stabilization, cfg_->quad);
      break;
    case TaskId::Tracking:
      s = QuadState::hover(cfg_->tracking.start_position, cfg_->quad);
      break;
  }
  return reset_from(s, curriculum);
}

Observation Env::reset_from(const QuadState& initial, const CurriculumState& curriculum) {
  state_ = initial;
  state_.attitude = quat_normalize(state_.attitude);
  a_prev_.setZero();
  steps_ = 0;
  done_ = false;
  next_gate_ = 0;
  progress_ = RacingProgress{};
  hover_timer_ = 0.0;
  profile_ = VelocityProfile{};
  if (task_ == TaskId::Tracking) {
    profile_ = sample_velocity_profile(rng_, curriculum, horizon_steps_, cfg_->quad.control_dt,
                                       cfg_->tracking);
  }
  return observe();
}

void Env::set_velocity_profile(VelocityProfile profile) {
  if (task_ != TaskId::Tracking) throw std::logic_error("set_velocity_profile: not a tracking env");
  profile_ = std::move(profile);
}

Observation Env::observe() const {
  Observation o;
  o.task = task_;
  o.shared = assemble_shared_obs(state_, a_prev_);
  const int dim = task_obs_dim(task_, cfg_->one_hot);
  o.task_specific = Eigen::VectorXd::Zero(dim);
  switch (task_) {
    case TaskId::Racing:
      o.task_specific.head<24>() = racing_task_obs(state_, *track_, next_gate_);
      break;
    case TaskId::Stabilization:
      o.task_specific.head<3>() = linear_acceleration(state_, cfg_->quad);
      o.task_specific[3] = cfg_->stabilization.z_target;
      break;
    case TaskId::Tracking:
      o.task_specific.head<3>() = desired_velocity();
      o.task_specific.segment<3>(3) = linear_acceleration(state_, cfg_->quad);
      break;
  }
  if (cfg_->one_hot) o.task_specific[dim - kOneHotDim + static_cast<int>(task_)] = 1.0;
  return o;
}

bool Env::racing_crashed(const Vec3& p_prev, const Vec3& p_curr) const {
  const RacingConfig& rc = cfg_->racing;
  if (p_curr.z() <= 0.0) return true;
  if ((p_curr.array() < rc.world_min.array()).any() || (p_curr.array() > rc.world_max.array()).any())
    return true;
  for (const Gate& g : track_->gates) {
    // cheap reject: far from the gate
    if ((p_curr - g.center).norm() > (p_curr - p_prev).norm() + 2.0 * (g.half_width + g.half_height))
      continue;
    const auto c = g.corners();
    for (int i = 0; i < 4; ++i) {
      if (segment_distance(p_prev, p_curr, c[i], c[(i + 1) % 4]) < rc.drone_radius) return true;
    }
  }
  return false;
}

StepResult Env::step(const Vec4& u) {
  if (done_) throw EpisodeError("Env::step called on a terminated episode");
  const Action action = action_from_policy_output(u, cfg_->quad, &clamp_count_);
  const Vec4 u_t = u.cwiseMax(-1.0).cwiseMin(1.0);
  const QuadState prev = state_;
  state_ = mtquad::step(state_, action, cfg_->quad.control_dt, cfg_->quad);
  ++steps_;

  StepResult r;
  r.time = time();
  switch (task_) {
    case TaskId::Racing: {
      const std::size_t target = next_gate_;
      const Gate& gate = track_->gates[target];
      RacingEvents ev;
      ev.crashed = racing_crashed(prev.position, state_.position);
      if (!ev.crashed) {
        r.gate = gate_pass_check(prev.position, state_.position, gate, cfg_->racing.gate_margin);
        ev.passed = r.gate.passed;
      }
      r.reward = racing_reward(prev, state_, u_t, a_prev_, *track_, target, ev, cfg_->racing.reward);
      if (ev.passed) {
        progress_.gate_errors.push_back(r.gate.gate_error);
        if (progress_.gates_passed == 0) progress_.circuit_start = r.time;
        ++progress_.gates_passed;
        next_gate_ = (next_gate_ + 1) % track_->gates.size();
        if (progress_.gates_passed == track_->gates.size() + 1 && !progress_.lap_time) {
          progress_.lap_time = r.time - *progress_.circuit_start;
        }
      }
      if (ev.crashed) {
        r.terminated = true;
        r.reason = Termination::Crash;
      } else if (cfg_->racing.terminate_on_circuit && progress_.circuit_complete()) {
        r.terminated = true;
        r.reason = Termination::Success;
      }
      break;
    }
    case TaskId::Stabilization: {
      const StabilizationConfig& sc = cfg_->stabilization;
      if (state_.velocity.norm() < sc.hover_speed) {
        hover_timer_ += cfg_->quad.control_dt;
      } else {
        hover_timer_ = 0.0;
      }
      // tolerate accumulated rounding in the window comparison
      r.success = hover_timer_ + 1e-9 >= sc.hover_window;
      r.reward = stabilization_reward(state_, u_t, a_prev_, sc.z_target, r.success, sc.reward,
                                      sc.attitude_error);
      if (state_.position.z() <= 0.0) {
        r.terminated = true;
        r.reason = Termination::Crash;
        r.reward.terms.push_back({"crash", sc.crash_penalty});
        r.reward.total += sc.crash_penalty;
      } else if (r.success && sc.terminate_on_success) {
        r.terminated = true;
        r.reason = Termination::Success;
      }
      break;
    }
    case TaskId::Tracking:
      r.reward = tracking_reward(state_, u_t, a_prev_, profile_.at(steps_ - 1),
                                 cfg_->tracking.reward);
      break;
  }
  a_prev_ = u_t;
  if (!r.terminated && steps_ >= horizon_steps_) {
    r.terminated = true;
    r.reason = Termination::Timeout;
  }
  done_ = r.terminated;
  r.observation = observe();
  return r;
}

void Env::save(BinaryWriter& out) const {
  out.tag("env");
  out.write(static_cast<int>(task_));
  out.write(rng_.state());
  out.write(state_.flatten());
  out.write(state_.motor_thrusts);
  out.write(a_prev_);
  out.write<std::uint64_t>(steps_);
  out.write<std::uint8_t>(done_ ? 1 : 0);
  out.write<std::uint64_t>(clamp_count_);
  out.write<std::uint64_t>(next_gate_);
  out.write<std::uint64_t>(progress_.gates_passed);
  out.write<std::uint8_t>(progress_.circuit_start ? 1 : 0);
  out.write(progress_.circuit_start.value_or(0.0));
  out.write<std::uint8_t>(progress_.lap_time ? 1 : 0);
  out.write(progress_.lap_time.value_or(0.0));
  out.write(progress_.gate_errors);
  out.write(hover_timer_);
  out.write(profile_.dt);
  auto write_vecs = [&out](const std::vector<Vec3>& v) {
    Eigen::MatrixXd m(3, v.size());
    for (std::size_t i = 0; i < v.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = v[i];
    out.write(m);
  };
  write_vecs(profile_.accel);
  write_vecs(profile_.velocity);
  write_vecs(profile_.unclamped);
}

void Env::load(BinaryReader& in) {
  in.expect("env");
  if (in.read<int>() != static_cast<int>(task_)) throw FormatError("env task mismatch");
  rng_.set_state(in.read_string());
  const auto flat = in.read_fixed<QuadState::Flat>();
  const auto motors = in.read_fixed<MotorThrusts>();
  state_ = QuadState::unflatten(flat, motors);
  a_prev_ = in.read_fixed<Vec4>();
  steps_ = in.read<std::uint64_t>();
  done_ = in.read<std::uint8_t>() != 0;
  clamp_count_ = in.read<std::uint64_t>();
  next_gate_ = in.read<std::uint64_t>();
  progress_ = RacingProgress{};
  progress_.gates_passed = in.read<std::uint64_t>();
  const bool has_start = in.read<std::uint8_t>() != 0;
  const double start = in.read<double>();
  if (has_start) progress_.circuit_start = start;
  const bool has_lap = in.read<std::uint8_t>() != 0;
  const double lap = in.read<double>();
  if (has_lap) progress_.lap_time = lap;
  progress_.gate_errors = in.read_doubles();
  hover_timer_ = in.read<double>();
  profile_.dt = in.read<double>();
  auto read_vecs = [&in]() {
    const Eigen::MatrixXd m = in.read_matrix();
    std::vector<Vec3> v(static_cast<std::size_t>(m.cols()));
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = m.col(static_cast<Eigen::Index>(i));
    return v;
  };
  profile_.accel = read_vecs();
  profile_.velocity = read_vecs();
  profile_.unclamped = read_vecs();
}

void write_trajectory_csv(std::ostream& os, const std::vector<TrajectoryRow>& rows) {
  const bool reference = !rows.empty() && rows.front().v_desired.has_value();
  os << "schema,t,px,py,pz,qw,qx,qy,qz,vx,vy,vz,wx,wy,wz,u0,u1,u2,u3,reward";
  if (!rows.empty())
    for (const RewardTerm& t : rows.front().reward.terms) os << ",r_" << t.name;
  if (reference) os << ",vdx,vdy,vdz";
  os << '\n';
  os << std::setprecision(10);
  for (const TrajectoryRow& r : rows) {
    const QuadState& s = r.state;
    os << kTrajectorySchema << ',' << r.time << ',' << s.position.x() << ',' << s.position.y() << ',' << s.position.z() << ','
       << s.attitude.w << ',' << s.attitude.x << ',' << s.attitude.y << ',' << s.attitude.z << ','
       << s.velocity.x() << ',' << s.velocity.y() << ',' << s.velocity.z() << ','
       << s.body_rates.x() << ',' << s.body_rates.y() << ',' << s.body_rates.z() << ','
       << r.u[0] << ',' << r.u[1] << ',' << r.u[2] << ',' << r.u[3] << ',' << r.reward.total;
    for (const RewardTerm& t : r.reward.terms) os << ',' << t.value;
    if (reference) {
      const Vec3 vd = r.v_desired.value_or(Vec3::Zero());
      os << ',' << vd.x() << ',' << vd.y() << ',' << vd.z();
    }
    os << '\n';
  }
}

}  // namespace mtquad
