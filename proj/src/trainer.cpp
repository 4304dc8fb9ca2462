#include "mtquad/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <thread>

#include "json.hpp"

namespace mtquad {

namespace {

int idx(TaskId t) { return static_cast<int>(t); }

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
  for (auto& t : pool) t.join();
}

Eigen::MatrixXd stack(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() + b.rows(), a.cols());
  out << a, b;
  return out;
}

void write_curriculum(BinaryWriter& out, const CurriculumState& c) {
  out.write(c.samples_seen);
  out.write(c.level);
  out.write(c.speed_scale);
  out.write(c.speed_bounds);
}

CurriculumState read_curriculum(BinaryReader& in) {
  CurriculumState c;
  c.samples_seen = in.read<std::uint64_t>();
  c.level = in.read<std::uint64_t>();
  c.speed_scale = in.read<double>();
  c.speed_bounds = in.read_fixed<Vec3>();
  return c;
}

}  // namespace

void TrainConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw std::invalid_argument("train." + field + ": " + why);
  };
  for (double g : gamma)
    if (!(g > 0.0 && g <= 1.0)) fail("gamma", "must lie in (0, 1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) fail("gae_lambda", "must lie in [0, 1]");
  if (!(clip_ratio > 0.0)) fail("clip_ratio", "must be positive");
  if (!(learning_rate >= 0.0)) fail("learning_rate", "must be non-negative");
  if (epochs < 1) fail("epochs", "must be at least 1");
  if (minibatch_size < 1) fail("minibatch_size", "must be at least 1");
  if (rollout_length < 1) fail("rollout_length", "must be at least 1");
  if (envs_per_task < 1) fail("envs_per_task", "must be at least 1");
  if (!(value_coeff >= 0.0)) fail("value_coeff", "must be non-negative");
  if (!(entropy_coeff >= 0.0)) fail("entropy_coeff", "must be non-negative");
  if (!(max_grad_norm > 0.0)) fail("max_grad_norm", "must be positive");
  if (threads < 1) fail("threads", "must be at least 1");
}

GaeResult compute_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                      const std::vector<std::uint8_t>& dones, double bootstrap, double gamma,
                      double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n)
    throw std::invalid_argument("compute_gae: rewards, values and dones differ in length");
  GaeResult r;
  r.advantages.assign(n, 0.0);
  r.returns.assign(n, 0.0);
  double next_adv = 0.0;
  double next_value = bootstrap;
  for (std::size_t k = n; k-- > 0;) {
    const double live = dones[k] ? 0.0 : 1.0;
    const double delta = rewards[k] + gamma * next_value * live - values[k];
    next_adv = delta + gamma * lambda * live * next_adv;
    r.advantages[k] = next_adv;
    r.returns[k] = next_adv + values[k];
    next_value = values[k];
  }
  return r;
}

std::size_t Rollout::size() const {
  std::size_t n = 0;
  for (const auto& t : tasks) n += t.size();
  return n;
}

// ---------------------------------------------------------------------------

Adam::Adam(const PolicyParams& p, double epsilon) : eps_(epsilon) {
  m_.assign(p.num_params(), 0.0);
  v_.assign(p.num_params(), 0.0);
}

void Adam::step(const std::vector<ParamRef>& refs, double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  std::size_t k = 0;
  for (const ParamRef& r : refs) {
    for (std::size_t i = 0; i < r.size; ++i, ++k) {
      const double g = r.grad[i];
      m_[k] = beta1_ * m_[k] + (1.0 - beta1_) * g;
      v_[k] = beta2_ * v_[k] + (1.0 - beta2_) * g * g;
      r.value[i] -= lr * (m_[k] / c1) / (std::sqrt(v_[k] / c2) + eps_);
    }
  }
  if (k != m_.size()) throw std::logic_error("Adam: parameter count changed");
}

void Adam::save(BinaryWriter& out) const {
  out.tag("adam");
  out.write(t_);
  out.write(eps_);
  out.write(m_);
  out.write(v_);
}

void Adam::load(BinaryReader& in) {
  in.expect("adam");
  t_ = in.read<std::uint64_t>();
  eps_ = in.read<double>();
  m_ = in.read_doubles();
  v_ = in.read_doubles();
}

// ---------------------------------------------------------------------------

MinibatchLoss ppo_loss(const PolicyParams& p, const std::vector<MinibatchTask>& batch,
                       const TrainConfig& cfg, PolicyGrads* grads) {
  MinibatchLoss out;
  std::size_t total = 0;
  for (const auto& b : batch) total += static_cast<std::size_t>(b.actions.cols());
  if (total == 0) throw std::invalid_argument("ppo_loss: empty minibatch");
  const double inv_m = 1.0 / static_cast<double>(total);
  if (grads) grads->set_zero();

  for (const auto& b : batch) {
    const Eigen::Index n = b.actions.cols();
    if (n == 0) continue;
    const Route route = p.route(b.task);
    const Vec4& log_std = p.log_std[route.actor];
    const Vec4 inv_var = (-2.0 * log_std).array().exp();

    // advantages standardized within each task's share of the minibatch
    const double a_mean = b.advantages.mean();
    const double a_std =
        std::sqrt((b.advantages.array() - a_mean).square().sum() / static_cast<double>(n));
    const Eigen::VectorXd adv = (b.advantages.array() - a_mean) / (a_std + 1e-8);

    PolicyTape tape;
    const Eigen::MatrixXd input = encode_batch(p, b.task, b.shared, b.task_obs, grads ? &tape : nullptr);
    const Eigen::MatrixXd mean = actor_mean_batch(p, b.task, input, grads ? &tape : nullptr);

    Eigen::MatrixXd d_mean(4, n);
    Vec4 d_log_std = Vec4::Zero();
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vec4 a = b.actions.col(i);
      const Vec4 mu = mean.col(i);
      const double lp = gaussian_log_prob(a, mu, log_std);
      const double log_ratio = lp - b.old_log_prob[i];
      const double ratio = std::exp(log_ratio);
      const double clipped = std::clamp(ratio, 1.0 - cfg.clip_ratio, 1.0 + cfg.clip_ratio);
      const double s1 = ratio * adv[i];
      const double s2 = clipped * adv[i];
      out.policy_loss -= std::min(s1, s2) * inv_m;
      out.approx_kl += ((ratio - 1.0) - log_ratio) * inv_m;
      if (std::abs(ratio - 1.0) > cfg.clip_ratio) out.clip_fraction += inv_m;
      // d(min)/d(log pi) is ratio * A on the unclipped branch, zero otherwise
      const double g = s1 <= s2 ? s1 : 0.0;
      const Vec4 diff = a - mu;
      d_mean.col(i) = -g * inv_m * diff.cwiseProduct(inv_var);
      d_log_std += -g * inv_m * (diff.cwiseProduct(diff).cwiseProduct(inv_var) - Vec4::Ones());
    }
    const double share = static_cast<double>(n) * inv_m;
    out.entropy += gaussian_entropy(log_std) * share;
    d_log_std -= Vec4::Constant(cfg.entropy_coeff * share);

    MlpTape critic_tape;
    const Eigen::RowVectorXd v =
        critic_batch(p, b.task, stack(b.shared, b.task_obs), grads ? &critic_tape : nullptr);
    const Eigen::RowVectorXd err = v - b.returns.transpose();
    const double sq = err.squaredNorm();
    out.value_loss[idx(b.task)] = sq / static_cast<double>(n);
    out.total += cfg.value_coeff * sq * inv_m;

    if (grads) {
      policy_backward(p, b.task, tape, d_mean, d_log_std, *grads);
      critic_backward(p, b.task, critic_tape, (2.0 * cfg.value_coeff * inv_m) * err, *grads);
    }
  }
  out.total += out.policy_loss - cfg.entropy_coeff * out.entropy;
  return out;
}

UpdateStats ppo_update(PolicyParams& p, Adam& adam, const Rollout& rollout, const TrainConfig& cfg,
                       Rng& rng) {
  // global sample index -> (task slot, column)
  std::vector<std::pair<int, Eigen::Index>> index;
  index.reserve(rollout.size());
  for (std::size_t t = 0; t < rollout.tasks.size(); ++t)
    for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(rollout.tasks[t].size()); ++c)
      index.emplace_back(static_cast<int>(t), c);
  if (index.empty()) throw std::invalid_argument("ppo_update: empty rollout");

  PolicyGrads grads = PolicyGrads::zeros_like(p);
  const std::vector<ParamRef> refs = param_refs(p, grads);
  const int groups = num_param_groups(p);
  const double floor = p.net.log_std_min;

  UpdateStats stats;
  std::array<std::size_t, kNumTasks> value_counts{};
  const std::size_t n = index.size();
  const std::size_t mb = static_cast<std::size_t>(cfg.minibatch_size);
  std::vector<std::size_t> order(n);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.index(i + 1)]);

    for (std::size_t start = 0; start < n; start += mb) {
      const std::size_t end = std::min(n, start + mb);
      std::vector<std::vector<Eigen::Index>> cols(rollout.tasks.size());
      for (std::size_t k = start; k < end; ++k) {
        const auto [t, c] = index[order[k]];
        cols[t].push_back(c);
      }
      std::vector<MinibatchTask> batch;
      for (std::size_t t = 0; t < cols.size(); ++t) {
        if (cols[t].empty()) continue;
        const TaskRollout& src = rollout.tasks[t];
        MinibatchTask b;
        b.task = src.task;
        b.shared = src.shared(Eigen::all, cols[t]);
        b.task_obs = src.task_obs(Eigen::all, cols[t]);
        b.actions = src.actions(Eigen::all, cols[t]);
        b.old_log_prob = src.log_prob(cols[t]);
        b.advantages = src.advantages(cols[t]);
        b.returns = src.returns(cols[t]);
        batch.push_back(std::move(b));
      }

      const MinibatchLoss loss = ppo_loss(p, batch, cfg, &grads);
      if (!std::isfinite(loss.total))
        throw TrainingError("non-finite PPO loss at epoch " + std::to_string(epoch));

      std::vector<double> sq(static_cast<std::size_t>(groups), 0.0);
      for (const ParamRef& r : refs)
        for (std::size_t i = 0; i < r.size; ++i) sq[static_cast<std::size_t>(r.group)] += r.grad[i] * r.grad[i];
      if (!std::all_of(sq.begin(), sq.end(), [](double s) { return std::isfinite(s); }))
        throw TrainingError("non-finite gradient at epoch " + std::to_string(epoch));
      for (const ParamRef& r : refs) {
        const double norm = std::sqrt(sq[static_cast<std::size_t>(r.group)]);
        if (norm > cfg.max_grad_norm) {
          const double s = cfg.max_grad_norm / (norm + 1e-6);
          for (std::size_t i = 0; i < r.size; ++i) r.grad[i] *= s;
        }
      }
      adam.step(refs, cfg.learning_rate);
      for (Vec4& ls : p.log_std) ls = ls.cwiseMax(floor);

      stats.policy_loss += loss.policy_loss;
      stats.entropy += loss.entropy;
      stats.approx_kl += loss.approx_kl;
      stats.clip_fraction += loss.clip_fraction;
      stats.grad_norm += std::sqrt(sq[0]);
      for (const auto& b : batch) {
        stats.value_loss[idx(b.task)] += loss.value_loss[idx(b.task)];
        ++value_counts[idx(b.task)];
      }
      ++stats.minibatches;
    }
  }
  const double m = static_cast<double>(stats.minibatches);
  stats.policy_loss /= m;
  stats.entropy /= m;
  stats.approx_kl /= m;
  stats.clip_fraction /= m;
  stats.grad_norm /= m;
  for (int t = 0; t < kNumTasks; ++t)
    if (value_counts[t]) stats.value_loss[t] /= static_cast<double>(value_counts[t]);
  return stats;
}

// ---------------------------------------------------------------------------

std::string metrics_json(const IterationStats& s) {
  nlohmann::ordered_json j;
  j["schema"] = kMetricsSchema;
  j["iteration"] = s.iteration;
  j["samples"] = s.samples;
  j["policy_loss"] = s.update.policy_loss;
  j["entropy"] = s.update.entropy;
  j["approx_kl"] = s.update.approx_kl;
  j["clip_fraction"] = s.update.clip_fraction;
  j["grad_norm"] = s.update.grad_norm;
  nlohmann::ordered_json tasks = nlohmann::ordered_json::object();
  for (const auto& t : s.tasks) {
    nlohmann::ordered_json e;
    e["samples"] = t.samples;
    e["episodes"] = t.episodes;
    e["mean_return"] = t.mean_return;
    e["value_loss"] = t.value_loss;
    e["curriculum_level"] = t.curriculum.level;
    e["speed_scale"] = t.curriculum.speed_scale;
    e["speed_bounds"] = {t.curriculum.speed_bounds.x(), t.curriculum.speed_bounds.y(),
                         t.curriculum.speed_bounds.z()};
    tasks[std::string(task_name(t.task))] = e;
  }
  j["tasks"] = tasks;
  return j.dump();
}

void write_episodes_csv_header(std::ostream& os) {
  os << "schema,task,iteration,task_samples,return,length,reason\n";
}

void write_episode_csv(std::ostream& os, const EpisodeRecord& e) {
  nlohmann::json r = e.ret;  // shortest round-trip representation
  os << kEpisodesSchema << ',' << task_name(e.task) << ',' << e.iteration << ',' << e.task_samples << ',' << r.dump() << ','
     << e.length << ',' << termination_name(e.reason) << '\n';
}

// ---------------------------------------------------------------------------

Trainer::Trainer(const TrainConfig& cfg, std::shared_ptr<const EnvConfig> env_cfg,
                 std::shared_ptr<const Track> track, Variant variant,
                 const std::vector<TaskId>& tasks, const NetConfig& net)
    : cfg_(cfg), env_cfg_(std::move(env_cfg)), track_(std::move(track)), tasks_(tasks),
      rng_(cfg.seed) {
  cfg_.validate();
  if (tasks_.empty()) throw std::invalid_argument("Trainer: no tasks");
  NetConfig n = net;
  n.one_hot = env_cfg_->one_hot;
  Rng init = rng_.split();
  params_ = PolicyParams::create(variant, tasks_, n, init);
  norm_ = ObsNormalizer(tasks_, env_cfg_->one_hot, cfg_.normalize_observations);
  adam_ = Adam(params_, cfg_.adam_epsilon);
  for (TaskId t : kAllTasks) {
    return_stats_[idx(t)] = RunningMeanStd(1);
    curriculum_[idx(t)] = curriculum_initial(env_cfg_->curriculum);
  }
  for (TaskId t : tasks_) {
    for (int e = 0; e < cfg_.envs_per_task; ++e) {
      const std::uint64_t seed = rng_.next_u64();
      slots_.push_back(Slot{t, Env(t, env_cfg_, track_, seed), rng_.split(), {}});
    }
  }
  for (Slot& s : slots_) reset_slot(s);
}

void Trainer::reset_slot(Slot& s) {
  s.obs = s.env.reset(curriculum_[idx(s.task)]);
  s.ep_return = 0.0;
  s.ep_length = 0;
  s.discounted = 0.0;
}

Rollout Trainer::collect_rollouts() {
  const int E = cfg_.envs_per_task;
  const int T = cfg_.rollout_length;
  Rollout r;
  for (std::size_t ti = 0; ti < tasks_.size(); ++ti) {
    TaskRollout tr;
    tr.task = tasks_[ti];
    tr.envs = E;
    tr.steps = T;
    const Eigen::Index n = static_cast<Eigen::Index>(E) * T;
    tr.shared.resize(kSharedObsDim, n);
    tr.task_obs.resize(task_obs_dim(tr.task, env_cfg_->one_hot), n);
    tr.actions.resize(4, n);
    tr.log_prob.resize(n);
    tr.rewards.resize(n);
    tr.values.resize(n);
    tr.dones.assign(static_cast<std::size_t>(n), 0);
    tr.bootstrap.resize(E);
    r.tasks.push_back(std::move(tr));
  }

  auto gather = [&](std::size_t ti, Eigen::MatrixXd& S, Eigen::MatrixXd& L) {
    S.resize(kSharedObsDim, E);
    L.resize(task_obs_dim(tasks_[ti], env_cfg_->one_hot), E);
    for (int e = 0; e < E; ++e) {
      const Slot& s = slots_[ti * E + e];
      S.col(e) = s.obs.shared;
      L.col(e) = s.obs.task_specific;
    }
  };

  std::vector<Vec4> actions(slots_.size());
  std::vector<StepResult> results(slots_.size());
  for (int t = 0; t < T; ++t) {
    for (std::size_t ti = 0; ti < tasks_.size(); ++ti) {
      TaskRollout& tr = r.tasks[ti];
      Eigen::MatrixXd S, L;
      gather(ti, S, L);
      norm_.update(tr.task, S, L);
      norm_.normalize(tr.task, S, L);
      const Eigen::MatrixXd mean = actor_mean_batch(params_, tr.task, encode_batch(params_, tr.task, S, L));
      const Eigen::RowVectorXd v = critic_batch(params_, tr.task, stack(S, L));
      const Vec4& log_std = params_.log_std[params_.route(tr.task).actor];
      for (int e = 0; e < E; ++e) {
        const Eigen::Index c = static_cast<Eigen::Index>(e) * T + t;
        Slot& s = slots_[ti * E + e];
        const SampledAction a = sample_action(s.rng, mean.col(e), log_std);
        tr.shared.col(c) = S.col(e);
        tr.task_obs.col(c) = L.col(e);
        tr.actions.col(c) = a.raw;
        tr.log_prob[c] = a.log_prob;
        tr.values[c] = v[e];
        actions[ti * E + e] = a.clipped;
      }
    }

    parallel_for(slots_.size(), cfg_.threads,
                 [&](std::size_t i) { results[i] = slots_[i].env.step(actions[i]); });

    for (std::size_t ti = 0; ti < tasks_.size(); ++ti) {
      TaskRollout& tr = r.tasks[ti];
      const double gamma = cfg_.gamma[idx(tr.task)];
      RunningMeanStd& rs = return_stats_[idx(tr.task)];
      Eigen::MatrixXd disc(1, E);
      for (int e = 0; e < E; ++e) {
        Slot& s = slots_[ti * E + e];
        s.discounted = gamma * s.discounted + results[ti * E + e].reward.total;
        disc(0, e) = s.discounted;
      }
      double scale = 1.0;
      if (cfg_.normalize_rewards) {
        rs.update(disc);
        scale = 1.0 / std::sqrt(rs.var[0] + 1e-8);
      }
      for (int e = 0; e < E; ++e) {
        const Eigen::Index c = static_cast<Eigen::Index>(e) * T + t;
        Slot& s = slots_[ti * E + e];
        StepResult& res = results[ti * E + e];
        s.ep_return += res.reward.total;
        ++s.ep_length;
        double reward = res.reward.total * scale;
        if (res.terminated) {
          if (res.reason == Termination::Timeout)
            reward += gamma * critic_forward(params_, norm_.normalize(res.observation));
          tr.dones[static_cast<std::size_t>(c)] = 1;
          episodes_.push_back({s.task, iteration_, task_samples_[idx(s.task)] + static_cast<std::uint64_t>(E) * (t + 1),
                               s.ep_return, s.ep_length, res.reason});
          reset_slot(s);
        } else {
          s.obs = std::move(res.observation);
        }
        tr.rewards[c] = reward;
      }
    }
  }

  for (std::size_t ti = 0; ti < tasks_.size(); ++ti) {
    TaskRollout& tr = r.tasks[ti];
    Eigen::MatrixXd S, L;
    gather(ti, S, L);
    norm_.normalize(tr.task, S, L);
    const Eigen::RowVectorXd v = critic_batch(params_, tr.task, stack(S, L));
    tr.bootstrap = v.transpose();
    const std::uint64_t n = static_cast<std::uint64_t>(E) * T;
    task_samples_[idx(tr.task)] += n;
    curriculum_[idx(tr.task)] = curriculum_update(curriculum_[idx(tr.task)], n, tr.task, env_cfg_->curriculum);
    samples_ += n;
  }
  return r;
}

void Trainer::finish_rollout(Rollout& r) const {
  for (TaskRollout& tr : r.tasks) {
    const std::size_t n = tr.size();
    tr.advantages.resize(static_cast<Eigen::Index>(n));
    tr.returns.resize(static_cast<Eigen::Index>(n));
    for (int e = 0; e < tr.envs; ++e) {
      const std::size_t off = static_cast<std::size_t>(e) * tr.steps;
      std::vector<double> rew(tr.rewards.data() + off, tr.rewards.data() + off + tr.steps);
      std::vector<double> val(tr.values.data() + off, tr.values.data() + off + tr.steps);
      std::vector<std::uint8_t> done(tr.dones.begin() + static_cast<std::ptrdiff_t>(off),
                                     tr.dones.begin() + static_cast<std::ptrdiff_t>(off + tr.steps));
      const GaeResult g = compute_gae(rew, val, done, tr.bootstrap[e], cfg_.gamma[idx(tr.task)], cfg_.gae_lambda);
      for (int k = 0; k < tr.steps; ++k) {
        tr.advantages[static_cast<Eigen::Index>(off) + k] = g.advantages[k];
        tr.returns[static_cast<Eigen::Index>(off) + k] = g.returns[k];
      }
    }
  }
}

IterationStats Trainer::iterate() {
  const std::size_t first_episode = episodes_.size();
  Rollout r = collect_rollouts();
  finish_rollout(r);
  IterationStats s;
  s.iteration = iteration_;
  s.update = ppo_update(params_, adam_, r, cfg_, rng_);
  s.samples = samples_;
  for (TaskId t : tasks_) {
    TaskIterationStats ts;
    ts.task = t;
    ts.samples = task_samples_[idx(t)];
    double sum = 0.0;
    for (std::size_t k = first_episode; k < episodes_.size(); ++k)
      if (episodes_[k].task == t) {
        sum += episodes_[k].ret;
        ++ts.episodes;
      }
    ts.mean_return = ts.episodes ? sum / static_cast<double>(ts.episodes)
                                 : std::numeric_limits<double>::quiet_NaN();
    ts.value_loss = s.update.value_loss[idx(t)];
    ts.curriculum = curriculum_[idx(t)];
    s.tasks.push_back(ts);
  }
  ++iteration_;
  return s;
}

void Trainer::train(const std::function<void(const IterationStats&)>& on_iteration) {
  while (!finished()) {
    const IterationStats s = iterate();
    if (on_iteration) on_iteration(s);
  }
}

std::vector<EpisodeRecord> Trainer::drain_episodes() {
  std::vector<EpisodeRecord> out;
  out.swap(episodes_);
  return out;
}

void Trainer::save_state(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  BinaryWriter out(f);
  out.tag("MTQUADTRAIN");
  out.write(kCheckpointVersion);
  save_policy(out, params_);
  norm_.save(out);
  adam_.save(out);
  out.write(rng_.state());
  out.write(samples_);
  out.write(iteration_);
  for (int t = 0; t < kNumTasks; ++t) {
    return_stats_[t].save(out);
    write_curriculum(out, curriculum_[t]);
    out.write(task_samples_[t]);
  }
  out.write<std::uint64_t>(slots_.size());
  for (const Slot& s : slots_) {
    s.env.save(out);
    out.write(s.rng.state());
    out.write(s.obs.shared);
    out.write(s.obs.task_specific);
    out.write(s.ep_return);
    out.write<std::uint64_t>(s.ep_length);
    out.write(s.discounted);
  }
  if (!f) throw std::runtime_error("failed writing " + path);
}

void Trainer::load_state(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  BinaryReader in(f);
  in.expect("MTQUADTRAIN");
  if (in.read<std::uint32_t>() != kCheckpointVersion) throw FormatError("unsupported training state version");
  PolicyParams p = load_policy(in);
  if (p.variant != params_.variant || p.tasks != params_.tasks || p.num_params() != params_.num_params())
    throw FormatError("training state does not match the configured variant or tasks");
  params_ = std::move(p);
  norm_.load(in);
  adam_.load(in);
  rng_.set_state(in.read_string());
  samples_ = in.read<std::uint64_t>();
  iteration_ = in.read<std::uint64_t>();
  for (int t = 0; t < kNumTasks; ++t) {
    return_stats_[t].load(in);
    curriculum_[t] = read_curriculum(in);
    task_samples_[t] = in.read<std::uint64_t>();
  }
  if (in.read<std::uint64_t>() != slots_.size()) throw FormatError("training state env count mismatch");
  for (Slot& s : slots_) {
    s.env.load(in);
    s.rng.set_state(in.read_string());
    s.obs.task = s.task;
    s.obs.shared = in.read_fixed<SharedObs>();
    s.obs.task_specific = in.read_vector();
    s.ep_return = in.read<double>();
    s.ep_length = static_cast<std::size_t>(in.read<std::uint64_t>());
    s.discounted = in.read<double>();
  }
  episodes_.clear();
}

}  // namespace mtquad
