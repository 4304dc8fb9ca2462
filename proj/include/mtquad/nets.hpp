#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "mtquad/rng.hpp"
#include "mtquad/serialize.hpp"
#include "mtquad/tasks.hpp"

namespace mtquad {

class NetworkError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Activation { Identity, ReLU, Tanh };

struct MlpSpec {
  std::vector<int> widths;  // input, hidden..., output
  Activation hidden{Activation::ReLU};
  Activation output{Activation::Identity};

  int inputs() const { return widths.front(); }
  int outputs() const { return widths.back(); }
  int layers() const { return static_cast<int>(widths.size()) - 1; }
};

/// Fully connected network. Batched inputs are column-major: one sample per column.
struct Mlp {
  MlpSpec spec;
  std::vector<Eigen::MatrixXd> weights;  // [out x in]
  std::vector<Eigen::VectorXd> biases;

  static Mlp zeros(const MlpSpec& spec);
  /// Orthogonal init scaled by `hidden_gain` (hidden layers) and `output_gain`; zero biases.
  static Mlp orthogonal(const MlpSpec& spec, Rng& rng, double hidden_gain, double output_gain);

  std::size_t num_params() const;
};

/// Activations recorded by a forward pass for reverse-mode differentiation.
struct MlpTape {
  Eigen::MatrixXd input;
  std::vector<Eigen::MatrixXd> outputs;  // post-activation, per layer
};

struct MlpGrad {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  static MlpGrad zeros_like(const Mlp& net);
  void set_zero();
};

Eigen::MatrixXd mlp_forward(const Mlp& net, const Eigen::MatrixXd& x, MlpTape* tape = nullptr);
Eigen::VectorXd mlp_forward(const Mlp& net, const Eigen::VectorXd& x);

/// Accumulates dL/dparams into `grad` and returns dL/dinput.
Eigen::MatrixXd mlp_backward(const Mlp& net, const MlpTape& tape, const Eigen::MatrixXd& d_out,
                             MlpGrad& grad);

// ---------------------------------------------------------------------------
// Policy family

enum class Variant { Ours, ActorOnly, Separate, SingleTask };
std::string_view variant_name(Variant v);
Variant parse_variant(std::string_view name);

struct NetConfig {
  int encoder_hidden{128};
  int encoder_layers{2};
  int embedding{32};
  int actor_hidden{256};
  int actor_layers{2};
  int critic_hidden{256};
  int critic_layers{2};
  double log_std_init{-0.6931471805599453};  // log 0.5
  double log_std_min{-4.605170185988091};    // log 0.01
  bool one_hot{true};

  int actor_input() const { return 2 * embedding; }
};

/// Indices of the networks a task routes through.
struct Route {
  int dynamics_encoder{-1};
  int task_encoder{-1};
  int actor{-1};
  int critic{-1};
};

struct PolicyParams {
  Variant variant{Variant::Ours};
  NetConfig net{};
  std::vector<TaskId> tasks;

  std::vector<Mlp> dynamics_encoders;  // shared 19-dim observation -> embedding
  std::vector<Mlp> task_encoders;      // task observation (fused or not) -> embedding
  std::vector<Mlp> actors;             // 2 * embedding -> 4, tanh
  std::vector<Vec4> log_std;           // one per actor, state independent
  std::vector<Mlp> critics;            // full observation -> 1, one per task

  static PolicyParams create(Variant variant, std::vector<TaskId> tasks, const NetConfig& net,
                             Rng& rng);

  bool has_task(TaskId t) const;
  Route route(TaskId t) const;
  /// Whether the task encoder also reads the shared observation.
  bool fuses_shared() const { return variant != Variant::Separate; }
  int task_encoder_inputs(TaskId t) const;
  std::size_t num_params() const;
};

struct PolicyGrads {
  std::vector<MlpGrad> dynamics_encoders;
  std::vector<MlpGrad> task_encoders;
  std::vector<MlpGrad> actors;
  std::vector<Vec4> log_std;
  std::vector<MlpGrad> critics;

  static PolicyGrads zeros_like(const PolicyParams& p);
  void set_zero();
};

/// Flat view of one parameter tensor and its gradient. Tensors with the same
/// `group` are clipped together: the actor pathway (encoders, actor, log-std)
/// forms group 0, or one group per task for SingleTask; each critic follows.
struct ParamRef {
  double* value;
  double* grad;
  std::size_t size;
  int group;
};

std::vector<ParamRef> param_refs(PolicyParams& p, PolicyGrads& g);
int num_param_groups(const PolicyParams& p);

struct PolicyTape {
  MlpTape dynamics;
  MlpTape task;
  MlpTape actor;
};

/// Actor input for a batch of one task: [e_dyn ; e_task], (2 * embedding) x B.
Eigen::MatrixXd encode_batch(const PolicyParams& p, TaskId task, const Eigen::MatrixXd& shared,
                             const Eigen::MatrixXd& task_obs, PolicyTape* tape = nullptr);
/// tanh mean, 4 x B.
Eigen::MatrixXd actor_mean_batch(const PolicyParams& p, TaskId task,
                                 const Eigen::MatrixXd& actor_input, PolicyTape* tape = nullptr);
/// Accumulates gradients of the actor pathway given dL/dmean and dL/dlog_std.
void policy_backward(const PolicyParams& p, TaskId task, const PolicyTape& tape,
                     const Eigen::MatrixXd& d_mean, const Vec4& d_log_std, PolicyGrads& grads);

Eigen::RowVectorXd critic_batch(const PolicyParams& p, TaskId task, const Eigen::MatrixXd& full_obs,
                                MlpTape* tape = nullptr);
void critic_backward(const PolicyParams& p, TaskId task, const MlpTape& tape,
                     const Eigen::RowVectorXd& d_value, PolicyGrads& grads);

// single-sample conveniences
Eigen::VectorXd encode(const PolicyParams& p, const Observation& obs);

struct ActorOutput {
  Vec4 mean;
  Vec4 log_std;
};
ActorOutput actor_forward(const PolicyParams& p, TaskId task, const Eigen::VectorXd& actor_input);
double critic_forward(const PolicyParams& p, const Observation& obs);

// ---------------------------------------------------------------------------
// Diagonal Gaussian head

struct SampledAction {
  Vec4 raw;      // mean + sigma * eps
  Vec4 clipped;  // raw clipped to [-1, 1], what the environment receives
  double log_prob{0.0};  // of `raw`
};

double gaussian_log_prob(const Vec4& x, const Vec4& mean, const Vec4& log_std);
double gaussian_entropy(const Vec4& log_std);
SampledAction sample_action(Rng& rng, const Vec4& mean, const Vec4& log_std);

// ---------------------------------------------------------------------------
// Observation normalization

struct RunningMeanStd {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
  double count{1e-4};

  RunningMeanStd() = default;
  explicit RunningMeanStd(int dim) : mean(Eigen::VectorXd::Zero(dim)), var(Eigen::VectorXd::Ones(dim)) {}
  /// Merges a batch (dim x B).
  void update(const Eigen::MatrixXd& batch);
  void save(BinaryWriter& out) const;
  void load(BinaryReader& in);
};

/// Shared 19 dims use one set of statistics for every task; task-specific
/// dims (one-hot code excluded) use per-task statistics.
class ObsNormalizer {
 public:
  ObsNormalizer() = default;
  ObsNormalizer(const std::vector<TaskId>& tasks, bool one_hot, bool enabled = true);

  bool enabled() const { return enabled_; }
  void update(TaskId task, const Eigen::MatrixXd& shared, const Eigen::MatrixXd& task_obs);
  void normalize(TaskId task, Eigen::MatrixXd& shared, Eigen::MatrixXd& task_obs) const;
  Observation normalize(const Observation& obs) const;

  const RunningMeanStd& shared_stats() const { return shared_; }
  const RunningMeanStd& task_stats(TaskId t) const { return task_[static_cast<int>(t)]; }

  void save(BinaryWriter& out) const;
  void load(BinaryReader& in);

  static constexpr double kClip = 10.0;

 private:
  bool enabled_{false};
  bool one_hot_{true};
  RunningMeanStd shared_{kSharedObsDim};
  std::array<RunningMeanStd, kNumTasks> task_{};
};

// ---------------------------------------------------------------------------
// Checkpoints

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_policy(BinaryWriter& out, const PolicyParams& p);
PolicyParams load_policy(BinaryReader& in);

void save_checkpoint(const std::string& path, const PolicyParams& p, const ObsNormalizer& norm);
void load_checkpoint(const std::string& path, PolicyParams& p, ObsNormalizer& norm);

}  // namespace mtquad
