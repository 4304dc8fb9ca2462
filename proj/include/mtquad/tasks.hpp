#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mtquad/dynamics.hpp"
#include "mtquad/rng.hpp"
#include "mtquad/serialize.hpp"

namespace mtquad {

enum class TaskId : int { Racing = 0, Stabilization = 1, Tracking = 2 };
inline constexpr int kNumTasks = 3;
inline constexpr std::array<TaskId, kNumTasks> kAllTasks{TaskId::Racing, TaskId::Stabilization,
                                                         TaskId::Tracking};

std::string_view task_name(TaskId task);
/// Accepts "racing", "stabilization", "tracking"; throws std::invalid_argument otherwise.
TaskId parse_task(std::string_view name);

inline constexpr int kSharedObsDim = 19;
inline constexpr int kOneHotDim = kNumTasks;

/// Task-specific observation width: 24 (racing), 4 (stabilization), 6 (tracking),
/// plus the one-hot task code when enabled.
int task_obs_dim(TaskId task, bool one_hot);

// ---------------------------------------------------------------------------
// Track geometry

struct Gate {
  Vec3 center{Vec3::Zero()};
  Vec3 normal{Vec3::UnitX()};  // passing direction
  Vec3 up{Vec3::UnitZ()};
  double half_width{0.75};
  double half_height{0.75};

  /// Upright gate facing `yaw` (rad) with square inner aperture `size`.
  static Gate from_yaw(const Vec3& center, double yaw, double size = 1.5);

  /// normal x up, i.e. the viewer's right-hand side when looking along normal.
  Vec3 right() const { return normal.cross(up); }

  /// Top-left, top-right, bottom-right, bottom-left as seen looking along normal.
  std::array<Vec3, 4> corners() const;
};

struct Track {
  std::string name;
  std::vector<Gate> gates;
};

/// Six upright gates on a lemniscate spanning 20 m x 10 m.
Track default_figure8_track();

/// Track file: YAML with `schema`, `name`, and `gates: [{center, yaw_deg, size}]`.
Track parse_track(const std::string& yaml_text);
Track load_track(const std::string& path);
std::string track_to_yaml(const Track& track);

// ---------------------------------------------------------------------------
// Observations

using SharedObs = Eigen::Matrix<double, kSharedObsDim, 1>;
using GateObs = Eigen::Matrix<double, 24, 1>;

struct Observation {
  SharedObs shared{SharedObs::Zero()};
  Eigen::VectorXd task_specific;
  TaskId task{TaskId::Racing};

  /// shared ‖ task_specific, the critic input.
  Eigen::VectorXd full() const;
};

/// [p, first two columns of R, v, omega, a_prev].
SharedObs assemble_shared_obs(const QuadState& state, const Vec4& a_prev);

/// [corners(next) - p, corners(next + 1) - corners(next)], corner-major.
GateObs racing_task_obs(const QuadState& state, const Track& track, std::size_t next_gate);

struct GatePass {
  bool passed{false};
  double gate_error{0.0};  // m, crossing point to gate center
  Vec3 crossing{Vec3::Zero()};
};

/// Detects a crossing of the gate plane along +normal between consecutive
/// positions, inside the aperture enlarged by `margin` on every side.
GatePass gate_pass_check(const Vec3& p_prev, const Vec3& p_curr, const Gate& gate,
                         double margin = 0.0);

/// Shortest distance between segments [a0, a1] and [b0, b1].
double segment_distance(const Vec3& a0, const Vec3& a1, const Vec3& b0, const Vec3& b1);

// ---------------------------------------------------------------------------
// Rewards

struct RewardTerm {
  std::string_view name;
  double value{0.0};
};

struct Reward {
  double total{0.0};
  std::vector<RewardTerm> terms;

  double term(std::string_view name) const;
};

struct RacingRewardCoeffs {
  double progress{0.5};
  double perception{0.025};
  double perception_exponent{-1.0};
  double action{-2e-4};
  double body_rate{-5e-4};
  double pass{-5.0};
  double crash{-10.0};
};

struct RacingEvents {
  bool passed{false};
  bool crashed{false};
};

/// Angle (rad) between the body x-axis in world frame and the direction to `target`.
double camera_angle(const QuadState& state, const Vec3& target);

Reward racing_reward(const QuadState& prev, const QuadState& curr, const Vec4& u_t,
                     const Vec4& u_prev, const Track& track, std::size_t gate_index,
                     const RacingEvents& events, const RacingRewardCoeffs& coeffs = {});

enum class AttitudeError { Geodesic, Tilt };

struct StabilizationRewardCoeffs {
  double height{-2e-3};
  double attitude{-2e-4};
  double velocity{-4e-5};
  double body_rate{-1e-5};
  double action{-1e-4};
  double success{10.0};
};

Reward stabilization_reward(const QuadState& state, const Vec4& u_t, const Vec4& u_prev,
                            double z_target, bool hovering,
                            const StabilizationRewardCoeffs& coeffs = {},
                            AttitudeError mode = AttitudeError::Geodesic);

struct TrackingRewardCoeffs {
  double velocity{-2e-4};
  double body_rate{-1.2e-3};
  double action{-1e-4};
};

Reward tracking_reward(const QuadState& state, const Vec4& u_t, const Vec4& u_prev,
                       const Vec3& v_desired, const TrackingRewardCoeffs& coeffs = {});

// ---------------------------------------------------------------------------
// Curricula

struct CurriculumConfig {
  bool enabled{true};
  std::uint64_t samples_per_level{100000};
  double stabilization_initial_scale{0.25};
  double stabilization_growth{1.1};
  double stabilization_max_scale{1.0};
  Vec3 tracking_initial_bounds{3.0, 3.0, 1.0};
  double tracking_increment{1.0};
  Vec3 tracking_max_bounds{15.0, 15.0, 5.0};
};

struct CurriculumState {
  std::uint64_t samples_seen{0};
  std::uint64_t level{0};
  double speed_scale{1.0};
  Vec3 speed_bounds{Vec3::Zero()};
};

CurriculumState curriculum_initial(const CurriculumConfig& cfg);

/// Adds `new_samples` and recomputes the difficulty, which depends only on
/// the cumulative count. Racing has no curriculum.
CurriculumState curriculum_update(const CurriculumState& cur, std::uint64_t new_samples,
                                  TaskId task, const CurriculumConfig& cfg);

// ---------------------------------------------------------------------------
// Task configuration

struct RacingConfig {
  double horizon{15.0};
  double start_distance{3.0};             // m before the first gate
  Vec3 start_half_extent{1.0, 1.0, 0.5};  // m, world axes
  double gate_margin{0.0};
  double drone_radius{0.15};
  Vec3 world_min{-30.0, -30.0, 0.0};
  Vec3 world_max{30.0, 30.0, 20.0};
  bool terminate_on_circuit{false};
  RacingRewardCoeffs reward{};
};

struct StabilizationConfig {
  double horizon{5.0};
  double z_target{5.0};
  Vec3 position_min{-5.0, -5.0, 4.0};
  Vec3 position_max{5.0, 5.0, 6.0};
  double max_tilt{0.5235987755982988};  // rad
  double max_body_rate{1.0};            // rad/s per axis
  double max_speed_xy{20.0};
  double max_speed_z{4.0};
  double clearance_time{1.0};  // s of zero-input flight that must stay above ground
  double hover_speed{0.5};
  double hover_window{0.5};
  bool terminate_on_success{false};
  double crash_penalty{-10.0};  // ground contact, added as the "crash" term
  AttitudeError attitude_error{AttitudeError::Geodesic};
  StabilizationRewardCoeffs reward{};
};

struct TrackingConfig {
  double horizon{10.0};
  Vec3 start_position{0.0, 0.0, 5.0};
  double accel_max{10.0};                // m/s^2 per axis
  double initial_velocity_fraction{0.5};  // of the current bounds
  TrackingRewardCoeffs reward{};
};

struct EnvConfig {
  QuadParams quad{};
  bool one_hot{true};
  RacingConfig racing{};
  StabilizationConfig stabilization{};
  TrackingConfig tracking{};
  CurriculumConfig curriculum{};

  double horizon(TaskId task) const;
};

QuadState sample_stabilization_initial(Rng& rng, const CurriculumState& curriculum,
                                       const StabilizationConfig& cfg, const QuadParams& quad);

struct VelocityProfile {
  double dt{0.02};
  std::vector<Vec3> accel;      // sampled per step
  std::vector<Vec3> velocity;   // clamped random walk, one per step (+1)
  std::vector<Vec3> unclamped;  // the same walk without clamping

  Vec3 at(std::size_t step) const;
};

VelocityProfile sample_velocity_profile(Rng& rng, const CurriculumState& curriculum,
                                        std::size_t steps, double dt, const TrackingConfig& cfg);

/// A velocity profile holding `v` for `steps` steps.
VelocityProfile constant_velocity_profile(const Vec3& v, std::size_t steps, double dt);

// ---------------------------------------------------------------------------
// Environment

enum class Termination { None, Crash, Success, Timeout };
std::string_view termination_name(Termination t);

struct StepResult {
  Observation observation;
  Reward reward;
  bool terminated{false};
  Termination reason{Termination::None};
  bool success{false};  // stabilization hover condition currently met
  GatePass gate{};      // racing: pass of the gate targeted before this step
  double time{0.0};
};

struct RacingProgress {
  std::size_t gates_passed{0};
  std::optional<double> circuit_start;
  std::optional<double> lap_time;
  std::vector<double> gate_errors;
  bool circuit_complete() const { return lap_time.has_value(); }
};

class EpisodeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class Env {
 public:
  Env(TaskId task, std::shared_ptr<const EnvConfig> cfg, std::shared_ptr<const Track> track,
      std::uint64_t seed);

  Observation reset(const CurriculumState& curriculum);
  /// Starts an episode from an explicit state (evaluation grids, oracles).
  Observation reset_from(const QuadState& initial, const CurriculumState& curriculum);
  StepResult step(const Vec4& u);

  Observation observe() const;

  TaskId task() const { return task_; }
  const EnvConfig& config() const { return *cfg_; }
  const Track* track() const { return track_.get(); }
  const QuadState& state() const { return state_; }
  const Vec4& last_action() const { return a_prev_; }
  double time() const { return static_cast<double>(steps_) * cfg_->quad.control_dt; }
  std::size_t steps() const { return steps_; }
  bool done() const { return done_; }
  std::size_t clamp_count() const { return clamp_count_; }

  std::size_t next_gate() const { return next_gate_; }
  const RacingProgress& racing_progress() const { return progress_; }
  bool hovering() const { return hover_timer_ >= cfg_->stabilization.hover_window; }
  const VelocityProfile& velocity_profile() const { return profile_; }
  Vec3 desired_velocity() const { return profile_.at(steps_); }
  void set_velocity_profile(VelocityProfile profile);

  /// Start positions for racing evaluation: a k x k x k grid over the start
  /// region when n is a perfect cube, uniform samples otherwise.
  std::vector<QuadState> racing_start_states(std::size_t n, Rng& rng) const;

  void save(BinaryWriter& out) const;
  void load(BinaryReader& in);

 private:
  Vec3 racing_start_center() const;
  double racing_start_yaw() const;
  bool racing_crashed(const Vec3& p_prev, const Vec3& p_curr) const;

  TaskId task_;
  std::shared_ptr<const EnvConfig> cfg_;
  std::shared_ptr<const Track> track_;
  Rng rng_;

  QuadState state_{};
  Vec4 a_prev_{Vec4::Zero()};
  std::size_t steps_{0};
  std::size_t horizon_steps_{0};
  bool done_{true};
  std::size_t clamp_count_{0};

  std::size_t next_gate_{0};
  RacingProgress progress_{};
  double hover_timer_{0.0};
  VelocityProfile profile_{};
};

/// One row per control step: t, p, q, v, omega, u, reward terms.
struct TrajectoryRow {
  double time{0.0};
  QuadState state{};
  Vec4 u{Vec4::Zero()};
  Reward reward{};
  std::optional<Vec3> v_desired;  // tracking reference, written when set on the first row
};

inline constexpr int kTrajectorySchema = 1;
void write_trajectory_csv(std::ostream& os, const std::vector<TrajectoryRow>& rows);

}  // namespace mtquad
