#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "mtquad/nets.hpp"
#include "mtquad/tasks.hpp"

namespace mtquad {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  std::array<double, kNumTasks> gamma{0.99, 0.99, 0.99};  // per task
  double gae_lambda{0.95};
  double clip_ratio{0.2};
  double learning_rate{3e-4};
  int epochs{10};
  int minibatch_size{1024};
  int rollout_length{256};  // steps per env per iteration
  int envs_per_task{4};
  std::uint64_t total_samples{40'000'000};
  double entropy_coeff{0.0};
  double value_coeff{0.5};
  double max_grad_norm{1.0};
  double adam_epsilon{1e-8};
  bool normalize_observations{true};
  bool normalize_rewards{true};  // per-task scaling by the running std of the discounted return
  int threads{1};                // env stepping only; results do not depend on it
  std::uint64_t seed{0};

  void validate() const;
};

/// Generalized advantage estimation over one env's time-ordered segment.
/// `bootstrap` is V(s_T) after the last step; done_t cuts both the value
/// bootstrap and the advantage recursion.
struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};
GaeResult compute_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                      const std::vector<std::uint8_t>& dones, double bootstrap, double gamma,
                      double lambda);

/// Samples of one task, column-major in (env, step): column = env * T + t.
struct TaskRollout {
  TaskId task{TaskId::Racing};
  int envs{0};
  int steps{0};
  Eigen::MatrixXd shared;    // 19 x N, normalized as fed to the policy
  Eigen::MatrixXd task_obs;  // L x N
  Eigen::MatrixXd actions;   // 4 x N, unclipped Gaussian samples
  Eigen::VectorXd log_prob;
  Eigen::VectorXd rewards;  // scaled, timeout bootstrap folded in
  Eigen::VectorXd values;
  std::vector<std::uint8_t> dones;
  Eigen::VectorXd bootstrap;  // per env
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;

  std::size_t size() const { return static_cast<std::size_t>(envs) * steps; }
};

struct Rollout {
  std::vector<TaskRollout> tasks;
  std::size_t size() const;
};

/// Adam over every tensor in param_refs order.
class Adam {
 public:
  Adam() = default;
  Adam(const PolicyParams& p, double epsilon);
  void step(const std::vector<ParamRef>& refs, double lr);
  std::uint64_t steps() const { return t_; }
  void save(BinaryWriter& out) const;
  void load(BinaryReader& in);

 private:
  double beta1_{0.9}, beta2_{0.999}, eps_{1e-8};
  std::uint64_t t_{0};
  std::vector<double> m_, v_;
};

struct UpdateStats {
  double policy_loss{0.0};
  std::array<double, kNumTasks> value_loss{};
  double entropy{0.0};
  double approx_kl{0.0};
  double clip_fraction{0.0};
  double grad_norm{0.0};  // actor pathway, before clipping
  std::size_t minibatches{0};
};

/// Loss of one minibatch and its gradient in `grads` (overwritten). Columns
/// of each task batch are the samples; the loss is the minibatch mean.
struct MinibatchTask {
  TaskId task{TaskId::Racing};
  Eigen::MatrixXd shared, task_obs, actions;
  Eigen::VectorXd old_log_prob, advantages, returns;
};
struct MinibatchLoss {
  double policy_loss{0.0};
  std::array<double, kNumTasks> value_loss{};
  double entropy{0.0};
  double approx_kl{0.0};
  double clip_fraction{0.0};
  double total{0.0};
};
MinibatchLoss ppo_loss(const PolicyParams& p, const std::vector<MinibatchTask>& batch,
                       const TrainConfig& cfg, PolicyGrads* grads);

/// Epochs of shuffled minibatch updates over a rollout whose advantages and
/// returns are already filled. Throws TrainingError on a non-finite loss.
UpdateStats ppo_update(PolicyParams& p, Adam& adam, const Rollout& rollout, const TrainConfig& cfg,
                       Rng& rng);

struct EpisodeRecord {
  TaskId task{TaskId::Racing};
  std::uint64_t iteration{0};
  std::uint64_t task_samples{0};  // cumulative samples of this task at the episode end
  double ret{0.0};                // unscaled
  std::size_t length{0};
  Termination reason{Termination::None};
};

struct TaskIterationStats {
  TaskId task{TaskId::Racing};
  std::uint64_t samples{0};
  std::size_t episodes{0};
  double mean_return{0.0};  // NaN when no episode finished this iteration
  double value_loss{0.0};
  CurriculumState curriculum{};
};

struct IterationStats {
  std::uint64_t iteration{0};
  std::uint64_t samples{0};
  UpdateStats update{};
  std::vector<TaskIterationStats> tasks;
};

inline constexpr int kMetricsSchema = 1;
/// One JSON object per line; NaN becomes null.
std::string metrics_json(const IterationStats& s);
inline constexpr int kEpisodesSchema = 1;
void write_episodes_csv_header(std::ostream& os);
void write_episode_csv(std::ostream& os, const EpisodeRecord& e);

class Trainer {
 public:
  Trainer(const TrainConfig& cfg, std::shared_ptr<const EnvConfig> env_cfg,
          std::shared_ptr<const Track> track, Variant variant, const std::vector<TaskId>& tasks,
          const NetConfig& net = {});

  /// Collects one rollout and updates the policy.
  IterationStats iterate();
  /// Iterates until total_samples is reached.
  void train(const std::function<void(const IterationStats&)>& on_iteration = {});
  bool finished() const { return samples_ >= cfg_.total_samples; }

  /// Rollout collection alone; exposed for bookkeeping tests.
  Rollout collect_rollouts();
  void finish_rollout(Rollout& r) const;

  const TrainConfig& config() const { return cfg_; }
  const std::vector<TaskId>& tasks() const { return tasks_; }
  const PolicyParams& policy() const { return params_; }
  PolicyParams& policy() { return params_; }
  const ObsNormalizer& normalizer() const { return norm_; }
  const CurriculumState& curriculum(TaskId t) const { return curriculum_[static_cast<int>(t)]; }
  std::uint64_t samples() const { return samples_; }
  std::uint64_t iteration() const { return iteration_; }
  /// Episodes finished since the last call.
  std::vector<EpisodeRecord> drain_episodes();

  /// Full training state: resuming from it reproduces the uninterrupted run bit for bit.
  void save_state(const std::string& path) const;
  void load_state(const std::string& path);

 private:
  struct Slot {
    TaskId task;
    Env env;
    Rng rng;
    Observation obs;  // raw
    double ep_return{0.0};
    std::size_t ep_length{0};
    double discounted{0.0};
  };

  void reset_slot(Slot& s);

  TrainConfig cfg_;
  std::shared_ptr<const EnvConfig> env_cfg_;
  std::shared_ptr<const Track> track_;
  std::vector<TaskId> tasks_;
  PolicyParams params_;
  ObsNormalizer norm_;
  std::array<RunningMeanStd, kNumTasks> return_stats_{};
  std::array<CurriculumState, kNumTasks> curriculum_{};
  std::array<std::uint64_t, kNumTasks> task_samples_{};
  Adam adam_;
  Rng rng_;
  std::vector<Slot> slots_;
  std::uint64_t samples_{0};
  std::uint64_t iteration_{0};
  std::vector<EpisodeRecord> episodes_;
};

}  // namespace mtquad
