#include <cmath>
#include <filesystem>
#include <memory>

#include "doctest.h"
#include "gradcheck.hpp"
#include "mtquad/trainer.hpp"

using namespace mtquad;

namespace {

// A_t as an explicit sum of discounted TD residuals, cut at episode ends.
std::vector<double> oracle_advantages(const std::vector<double>& r, const std::vector<double>& v,
                                      const std::vector<std::uint8_t>& d, double boot, double g,
                                      double l) {
  const std::size_t n = r.size();
  std::vector<double> delta(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double next = t + 1 < n ? v[t + 1] : boot;
    delta[t] = r[t] + (d[t] ? 0.0 : g * next) - v[t];
  }
  std::vector<double> adv(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    double w = 1.0;
    for (std::size_t k = t; k < n; ++k) {
      adv[t] += w * delta[k];
      if (d[k]) break;
      w *= g * l;
    }
  }
  return adv;
}

TrainConfig small_config(std::uint64_t seed = 3) {
  TrainConfig c;
  c.seed = seed;
  c.rollout_length = 32;
  c.envs_per_task = 2;
  c.minibatch_size = 64;
  c.epochs = 2;
  c.total_samples = 0;
  return c;
}

Trainer make_trainer(const TrainConfig& c, Variant v = Variant::Ours,
                     std::vector<TaskId> tasks = {kAllTasks.begin(), kAllTasks.end()}) {
  auto env = std::make_shared<EnvConfig>();
  auto track = std::make_shared<Track>(default_figure8_track());
  return Trainer(c, env, track, v, tasks, testing::tiny_net_config());
}

std::vector<double> flatten(PolicyParams& p) {
  PolicyGrads g = PolicyGrads::zeros_like(p);
  std::vector<double> out;
  for (const ParamRef& r : param_refs(p, g)) out.insert(out.end(), r.value, r.value + r.size);
  return out;
}

std::vector<MinibatchTask> random_batch(const PolicyParams& p, Rng& rng, int per_task) {
  std::vector<MinibatchTask> batch;
  for (TaskId t : p.tasks) {
    MinibatchTask b;
    b.task = t;
    b.shared = Eigen::MatrixXd::NullaryExpr(kSharedObsDim, per_task, [&] { return rng.normal(); });
    b.task_obs = Eigen::MatrixXd::NullaryExpr(task_obs_dim(t, p.net.one_hot), per_task,
                                              [&] { return rng.normal(); });
    b.actions = Eigen::MatrixXd::NullaryExpr(4, per_task, [&] { return rng.uniform(-1.2, 1.2); });
    const Eigen::MatrixXd mean = actor_mean_batch(p, t, encode_batch(p, t, b.shared, b.task_obs));
    b.old_log_prob.resize(per_task);
    for (int i = 0; i < per_task; ++i)
      b.old_log_prob[i] = gaussian_log_prob(b.actions.col(i), mean.col(i), p.log_std[p.route(t).actor]) +
                          rng.uniform(-0.4, 0.4);
    b.advantages = Eigen::VectorXd::NullaryExpr(per_task, [&] { return rng.normal(); });
    b.returns = Eigen::VectorXd::NullaryExpr(per_task, [&] { return rng.normal(); });
    batch.push_back(std::move(b));
  }
  return batch;
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("compute_gae examples") {
  // gamma = lambda = 1 without termination telescopes to the plain residual
  const std::vector<double> r{1, 2, 3}, v{0.5, -1, 2};
  const GaeResult g = compute_gae(r, v, {0, 0, 0}, 4.0, 1.0, 1.0);
  for (int t = 0; t < 3; ++t) {
    double sum = 4.0;
    for (int k = t; k < 3; ++k) sum += r[k];
    CHECK(g.advantages[t] == doctest::Approx(sum - v[t]).epsilon(1e-15));
    CHECK(g.returns[t] == doctest::Approx(sum).epsilon(1e-15));
  }
  // a terminal step ignores the bootstrap
  const GaeResult d = compute_gae({1.0}, {0.25}, {1}, 100.0, 0.99, 0.95);
  CHECK(d.advantages[0] == 0.75);
  CHECK_THROWS_AS(compute_gae({1, 2}, {1}, {0, 0}, 0, 0.9, 0.9), std::invalid_argument);
  CHECK_THROWS_AS(compute_gae({1, 2}, {1, 2}, {0}, 0, 0.9, 0.9), std::invalid_argument);
}

TEST_CASE("compute_gae matches the explicit residual sum") {
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 20;
    std::vector<double> r(n), v(n);
    std::vector<std::uint8_t> d(n);
    for (std::size_t t = 0; t < n; ++t) {
      r[t] = rng.normal();
      v[t] = rng.normal();
      d[t] = rng.uniform(0, 1) < 0.15;
    }
    const double boot = rng.normal(), g = rng.uniform(0.8, 1.0), l = rng.uniform(0.0, 1.0);
    const GaeResult res = compute_gae(r, v, d, boot, g, l);
    const std::vector<double> expect = oracle_advantages(r, v, d, boot, g, l);
    for (std::size_t t = 0; t < n; ++t) {
      CHECK(std::abs(res.advantages[t] - expect[t]) < 1e-10);
      CHECK(std::abs(res.returns[t] - (expect[t] + v[t])) < 1e-10);
    }
  }
}

TEST_CASE("PPO loss gradient matches finite differences") {
  for (Variant v : {Variant::Ours, Variant::ActorOnly, Variant::Separate, Variant::SingleTask}) {
    CAPTURE(variant_name(v));
    Rng rng(31);
    PolicyParams p = PolicyParams::create(v, {kAllTasks.begin(), kAllTasks.end()},
                                          testing::tiny_net_config(), rng);
    testing::jitter_biases(p, rng);
    const auto batch = random_batch(p, rng, 6);
    TrainConfig cfg;
    cfg.entropy_coeff = 0.01;
    const double err = testing::max_gradient_error(
        p, [&](const PolicyParams& q) { return ppo_loss(q, batch, cfg, nullptr).total; },
        [&](const PolicyParams& q, PolicyGrads& g) { ppo_loss(q, batch, cfg, &g); });
    CHECK(err < 1e-4);
  }
}

TEST_CASE("clipped samples contribute no policy gradient") {
  Rng rng(32);
  PolicyParams p = PolicyParams::create(Variant::Ours, {TaskId::Tracking}, testing::tiny_net_config(), rng);
  auto batch = random_batch(p, rng, 8);
  // ratio far above 1 + clip where the standardized advantage is positive and
  // far below 1 - clip where it is negative: every sample is clipped
  batch[0].advantages = Eigen::VectorXd::LinSpaced(8, 1.0, 2.0);
  for (int i = 0; i < 8; ++i) batch[0].old_log_prob[i] += i < 4 ? 5.0 : -5.0;
  TrainConfig cfg;
  PolicyGrads g = PolicyGrads::zeros_like(p);
  const MinibatchLoss loss = ppo_loss(p, batch, cfg, &g);
  CHECK(loss.clip_fraction == doctest::Approx(1.0));
  CHECK(g.actors[0].weights.back().isZero());
  CHECK(g.log_std[0].isZero());
  CHECK_FALSE(g.critics[0].weights.back().isZero());
}

TEST_CASE("collect_rollouts allocates envs equally per task") {
  TrainConfig c = small_config();
  c.rollout_length = 256;
  Trainer tr = make_trainer(c);
  const Rollout r = tr.collect_rollouts();
  CHECK(r.size() == 1536);
  REQUIRE(r.tasks.size() == 3);
  for (const auto& t : r.tasks) {
    CHECK(t.size() == 512);
    CHECK(t.shared.cols() == 512);
    CHECK(t.task_obs.rows() == task_obs_dim(t.task, true));
    CHECK(t.log_prob.allFinite());
    CHECK(tr.curriculum(t.task).samples_seen == 512);
  }
  CHECK(tr.samples() == 1536);
  // stabilization episodes last 250 steps at most, so every env finished one
  const auto& stab = r.tasks[1];
  for (int e = 0; e < stab.envs; ++e) {
    int dones = 0;
    for (int t = 0; t < stab.steps; ++t) dones += stab.dones[static_cast<std::size_t>(e * stab.steps + t)];
    CHECK(dones >= 1);
  }
}

TEST_CASE("zero learning rate leaves parameters bit-identical") {
  TrainConfig c = small_config();
  c.learning_rate = 0.0;
  Trainer tr = make_trainer(c);
  const std::vector<double> before = flatten(tr.policy());
  Rollout r = tr.collect_rollouts();
  tr.finish_rollout(r);
  Adam adam(tr.policy(), c.adam_epsilon);
  Rng rng(1);
  const UpdateStats s = ppo_update(tr.policy(), adam, r, c, rng);
  CHECK(s.minibatches == 2 * 3);
  CHECK(flatten(tr.policy()) == before);
}

TEST_CASE("updates on one task leave other critics and single-task policies alone") {
  for (Variant v : {Variant::Ours, Variant::SingleTask}) {
    CAPTURE(variant_name(v));
    TrainConfig c = small_config();
    Trainer tr = make_trainer(c, v);
    Rollout r = tr.collect_rollouts();
    tr.finish_rollout(r);
    r.tasks.erase(r.tasks.begin() + 1, r.tasks.end());  // racing only
    const PolicyParams before = tr.policy();
    Adam adam(tr.policy(), c.adam_epsilon);
    Rng rng(2);
    ppo_update(tr.policy(), adam, r, c, rng);
    const PolicyParams& after = tr.policy();
    CHECK_FALSE(after.critics[0].weights[0] == before.critics[0].weights[0]);
    for (int i = 1; i < 3; ++i) {
      CHECK(after.critics[i].weights[0] == before.critics[i].weights[0]);
      CHECK(after.critics[i].biases.back() == before.critics[i].biases.back());
    }
    if (v == Variant::SingleTask) {
      for (int i = 1; i < 3; ++i) {
        CHECK(after.actors[i].weights[0] == before.actors[i].weights[0]);
        CHECK(after.dynamics_encoders[i].weights[0] == before.dynamics_encoders[i].weights[0]);
        CHECK(after.log_std[i] == before.log_std[i]);
      }
    } else {
      CHECK_FALSE(after.actors[0].weights[0] == before.actors[0].weights[0]);
      // the racing encoder moved, the other task encoders did not
      CHECK(after.task_encoders[1].weights[0] == before.task_encoders[1].weights[0]);
    }
  }
}

TEST_CASE("non-finite loss aborts the update") {
  TrainConfig c = small_config();
  Trainer tr = make_trainer(c, Variant::Ours, {TaskId::Tracking});
  Rollout r = tr.collect_rollouts();
  tr.finish_rollout(r);
  tr.policy().critics[0].biases.back()[0] = NAN;
  Adam adam(tr.policy(), c.adam_epsilon);
  Rng rng(0);
  CHECK_THROWS_AS(ppo_update(tr.policy(), adam, r, c, rng), TrainingError);
}

TEST_CASE("log-std never drops below its floor") {
  TrainConfig c = small_config();
  c.learning_rate = 0.5;
  Trainer tr = make_trainer(c, Variant::Ours, {TaskId::Stabilization});
  tr.policy().log_std[0] = Vec4::Constant(tr.policy().net.log_std_min + 1e-3);
  Rollout r = tr.collect_rollouts();
  tr.finish_rollout(r);
  Adam adam(tr.policy(), c.adam_epsilon);
  Rng rng(0);
  ppo_update(tr.policy(), adam, r, c, rng);
  CHECK((tr.policy().log_std[0].array() >= tr.policy().net.log_std_min).all());
}

TEST_CASE("zero sample budget trains nothing") {
  Trainer tr = make_trainer(small_config());
  int calls = 0;
  tr.train([&](const IterationStats&) { ++calls; });
  CHECK(calls == 0);
  CHECK(tr.iteration() == 0);
  CHECK(tr.samples() == 0);
}

TEST_CASE("training is deterministic and independent of thread count") {
  auto run = [](int threads) {
    TrainConfig c = small_config(9);
    c.threads = threads;
    c.total_samples = 3 * 2 * 32 * 3;
    Trainer tr = make_trainer(c);
    std::string log;
    tr.train([&](const IterationStats& s) { log += metrics_json(s) + "\n"; });
    return std::make_pair(log, flatten(tr.policy()));
  };
  const auto a = run(1), b = run(1), c = run(3);
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
  CHECK(a.first == c.first);
  CHECK(a.second == c.second);
}

TEST_CASE("resuming from saved state reproduces the uninterrupted run") {
  const auto path = std::filesystem::temp_directory_path() / "mtquad_trainer_state.bin";
  TrainConfig c = small_config(10);
  c.rollout_length = 100;  // episodes straddle the save point
  Trainer full = make_trainer(c);
  std::vector<std::string> expect;
  for (int i = 0; i < 4; ++i) expect.push_back(metrics_json(full.iterate()));

  Trainer first = make_trainer(c);
  first.iterate();
  first.iterate();
  first.save_state(path.string());
  TrainConfig other = c;
  other.seed = 999;  // everything must come from the saved state
  Trainer resumed = make_trainer(other);
  resumed.load_state(path.string());
  CHECK(metrics_json(resumed.iterate()) == expect[2]);
  CHECK(metrics_json(resumed.iterate()) == expect[3]);
  CHECK(flatten(resumed.policy()) == flatten(full.policy()));
  std::filesystem::remove(path);
}

TEST_CASE("metrics lines carry schema and per-task fields") {
  TrainConfig c = small_config();
  Trainer tr = make_trainer(c, Variant::Ours, {TaskId::Tracking});
  const std::string line = metrics_json(tr.iterate());
  CHECK(line.find("\"schema\":1") != std::string::npos);
  CHECK(line.find("\"tracking\"") != std::string::npos);
  CHECK(line.find("\"curriculum_level\"") != std::string::npos);
  // 32 steps is shorter than a tracking episode
  CHECK(line.find("\"mean_return\":null") != std::string::npos);
}

TEST_CASE("invalid training configuration names the field") {
  TrainConfig c;
  c.gae_lambda = 1.5;
  try {
    c.validate();
    FAIL("expected an error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("train.gae_lambda") != std::string::npos);
  }
}

}
