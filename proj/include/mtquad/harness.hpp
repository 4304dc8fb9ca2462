#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mtquad/trainer.hpp"

namespace mtquad {

// ---------------------------------------------------------------------------
// Configuration

class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class EvalDifficulty { Full, Training };

struct EvalConfig {
  int every_iterations{0};  // periodic evaluation during training, 0 = final only
  int racing_starts{64};
  int stabilization_trials{64};
  int tracking_trials{16};
  EvalDifficulty difficulty{EvalDifficulty::Full};
  int trajectories{2};  // per task, written as CSV
  std::uint64_t seed{12345};
  int threads{1};
};

struct OutputConfig {
  std::string dir{"runs/default"};
  int checkpoint_every{0};  // iterations, 0 = final only
};

inline constexpr int kConfigSchema = 1;

struct ExperimentConfig {
  std::string name{"default"};
  std::vector<std::uint64_t> seeds{0};
  Variant variant{Variant::Ours};
  std::vector<TaskId> tasks{kAllTasks.begin(), kAllTasks.end()};
  std::string track{"figure8"};  // built-in name or track file path
  EnvConfig env{};
  NetConfig network{};
  TrainConfig train{};
  EvalConfig eval{};
  OutputConfig output{};
};

/// Absent keys keep their defaults; unknown keys and bad values raise
/// ConfigError naming the dotted field path.
ExperimentConfig parse_experiment_config(const std::string& yaml_text);
ExperimentConfig load_experiment_config(const std::string& path);
std::string experiment_config_to_yaml(const ExperimentConfig& cfg);

/// Resolves `track`: "figure8" or a path, relative paths against `base_dir`.
Track resolve_track(const std::string& track, const std::string& base_dir = ".");

// ---------------------------------------------------------------------------
// Controllers

class Pilot {
 public:
  virtual ~Pilot() = default;
  /// Called after each reset.
  virtual void begin(const Env&) {}
  /// Normalized command in [-1, 1]^4.
  virtual Vec4 act(const Env& env, const Observation& obs) = 0;
};

using PilotFactory = std::function<std::unique_ptr<Pilot>()>;

/// Deterministic mean action of a trained policy, with frozen normalization.
class PolicyPilot : public Pilot {
 public:
  PolicyPilot(const PolicyParams& params, const ObsNormalizer& norm) : params_(params), norm_(norm) {}
  Vec4 act(const Env& env, const Observation& obs) override;

 private:
  const PolicyParams& params_;
  const ObsNormalizer& norm_;
};

/// Holds one fixed command.
class ConstantPilot : public Pilot {
 public:
  explicit ConstantPilot(const Vec4& u) : u_(u) {}
  Vec4 act(const Env&, const Observation&) override { return u_; }

 private:
  Vec4 u_;
};

/// Cascaded velocity controller: acceleration command -> thrust direction ->
/// body rates. Reads the true state.
struct VelocityGains {
  double velocity{6.0};   // 1/s
  double attitude{15.0};  // 1/s
  double cross_track{4.0};  // 1/s, gate pilot path correction
  double max_horizontal_accel{15.0};
};
Vec4 velocity_command(const QuadState& s, const Vec3& v_desired, const Vec3& a_feedforward,
                      const QuadParams& quad, const VelocityGains& gains = {});

/// Brings the vehicle to rest (stabilization) or follows the profile (tracking).
class VelocityPilot : public Pilot {
 public:
  explicit VelocityPilot(VelocityGains gains = {}) : gains_(gains) {}
  Vec4 act(const Env& env, const Observation& obs) override;

 private:
  VelocityGains gains_;
};

/// Flies a spline through the gate centers along each gate normal, at up to
/// `speed` and slower where the path curves.
class GatePilot : public Pilot {
 public:
  explicit GatePilot(double speed = 8.0, VelocityGains gains = {}) : speed_(speed), gains_(gains) {}
  void begin(const Env& env) override;
  Vec4 act(const Env& env, const Observation& obs) override;

 private:
  double speed_;
  VelocityGains gains_;
  std::vector<Vec3> path_;   // dense samples
  std::vector<double> arc_;  // cumulative length
  std::vector<Vec3> tangent_;
  std::vector<Vec3> curvature_;  // d tangent / ds
  std::vector<double> speed_profile_;
  std::size_t cursor_{0};
};

// ---------------------------------------------------------------------------
// Evaluation

struct RacingTrial {
  bool success{false};
  bool crashed{false};
  std::size_t gates_passed{0};
  std::vector<double> gate_errors;
  std::optional<double> lap_time;
};

struct RacingEval {
  std::size_t trials{0};
  double success_rate{0.0};
  std::optional<double> mean_gate_error;  // over gate passes
  std::optional<double> lap_time;         // over successful trials
  std::size_t crashes{0};
  std::vector<RacingTrial> per_trial;
};

struct StabilizationTrial {
  double initial_speed{0.0};
  std::optional<double> t_half;
  std::optional<double> t_full;
  bool crashed{false};
  bool success() const { return t_full.has_value() && !crashed; }
};

struct StabilizationEval {
  std::size_t trials{0};
  std::optional<double> t_half;  // mean over trials that reached it
  std::optional<double> t_full;
  double success_rate{0.0};  // t_full reached without crashing
  std::size_t half_failures{0};
  std::size_t crashes{0};
  std::vector<StabilizationTrial> per_trial;
};

struct TrackingEval {
  std::size_t trials{0};
  double e_v{0.0};
  std::vector<double> per_trial;
};

struct EvalOptions {
  std::uint64_t seed{12345};
  int threads{1};
  std::size_t record_trajectories{0};  // first n trials
};

using Trajectory = std::vector<TrajectoryRow>;

RacingEval eval_racing(const PilotFactory& pilot, std::shared_ptr<const EnvConfig> env,
                       std::shared_ptr<const Track> track, std::size_t n_starts,
                       const EvalOptions& opt = {}, std::vector<Trajectory>* trajectories = nullptr);

/// Initial states come from the stabilization distribution at `difficulty`.
StabilizationEval eval_stabilization(const PilotFactory& pilot, std::shared_ptr<const EnvConfig> env,
                                     std::size_t n_trials, const CurriculumState& difficulty,
                                     const EvalOptions& opt = {},
                                     std::vector<Trajectory>* trajectories = nullptr);
/// Runs from explicit initial states.
StabilizationEval eval_stabilization_from(const PilotFactory& pilot, std::shared_ptr<const EnvConfig> env,
                                          const std::vector<QuadState>& initial,
                                          const EvalOptions& opt = {},
                                          std::vector<Trajectory>* trajectories = nullptr);

/// Velocity profiles come from the tracking distribution at `difficulty`.
TrackingEval eval_tracking(const PilotFactory& pilot, std::shared_ptr<const EnvConfig> env,
                           std::size_t n_trials, const CurriculumState& difficulty,
                           const EvalOptions& opt = {}, std::vector<Trajectory>* trajectories = nullptr);
/// Runs every trial against one fixed profile from the given initial state.
TrackingEval eval_tracking_profile(const PilotFactory& pilot, std::shared_ptr<const EnvConfig> env,
                                   const QuadState& initial, const VelocityProfile& profile,
                                   std::size_t n_trials, const EvalOptions& opt = {});

/// Hardest curriculum setting reachable under `cfg`.
CurriculumState full_difficulty(const CurriculumConfig& cfg);

// ---------------------------------------------------------------------------
// Experiments

struct SummaryRow {
  std::string variant;
  std::uint64_t seed{0};
  std::uint64_t samples{0};
  std::optional<RacingEval> racing;
  std::optional<StabilizationEval> stabilization;
  std::optional<TrackingEval> tracking;
};

inline constexpr int kSummarySchema = 1;
void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows);
void write_summary_text(std::ostream& os, const std::vector<SummaryRow>& rows);
/// One JSON object per evaluation, keyed like the summary columns.
std::string eval_json(const SummaryRow& row, std::uint64_t iteration);

/// Inverse of eval_json for the summary fields; per-trial detail is not logged.
SummaryRow summary_row_from_json(const std::string& line);
/// Rebuilds the summary rows of a run directory from the last line of each
/// seed's eval.jsonl.
std::vector<SummaryRow> summarize_run(const std::string& run_dir);

/// Writes plotting CSVs for one or more run directories into `out_dir`:
/// learning_curves.csv (mean return per task over samples), summary.csv and
/// the recorded trajectories prefixed by variant and seed.
void export_plot_data(const std::vector<std::string>& run_dirs, const std::string& out_dir);

/// Evaluates a policy on each of its tasks.
SummaryRow evaluate_policy(const ExperimentConfig& cfg, const PolicyParams& params,
                           const ObsNormalizer& norm, std::shared_ptr<const EnvConfig> env,
                           std::shared_ptr<const Track> track, std::uint64_t seed,
                           const std::string& trajectory_dir = "");

struct RunOptions {
  std::string resume_state;  // training state file to continue from
  std::function<void(const std::string&)> log;
};

/// Trains and evaluates every seed. Layout under cfg.output.dir:
///   config.yaml, summary.csv, summary.txt and per seed seed_<n>/ with
///   metrics.jsonl, episodes.csv, eval.jsonl, policy.ckpt, state.bin,
///   checkpoints/, trajectories/.
std::vector<SummaryRow> run_experiment(const ExperimentConfig& cfg, const RunOptions& opt = {});

}  // namespace mtquad
