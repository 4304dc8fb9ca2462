#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "mtquad/tasks.hpp"
#include "support.hpp"

using namespace mtquad;

namespace {

std::shared_ptr<const EnvConfig> default_cfg(bool one_hot = true) {
  auto c = std::make_shared<EnvConfig>();
  c->one_hot = one_hot;
  return c;
}

std::shared_ptr<const Track> default_track() {
  return std::make_shared<const Track>(default_figure8_track());
}

Gate facing_x() { return Gate::from_yaw(Vec3::Zero(), 0.0); }

}  // namespace

TEST_SUITE("tasks") {

TEST_CASE("task names and observation widths") {
  CHECK(task_obs_dim(TaskId::Racing, false) == 24);
  CHECK(task_obs_dim(TaskId::Stabilization, false) == 4);
  CHECK(task_obs_dim(TaskId::Tracking, false) == 6);
  for (bool oh : {false, true}) {
    CHECK(task_obs_dim(TaskId::Racing, oh) != task_obs_dim(TaskId::Stabilization, oh));
    CHECK(task_obs_dim(TaskId::Racing, oh) != task_obs_dim(TaskId::Tracking, oh));
    CHECK(task_obs_dim(TaskId::Stabilization, oh) != task_obs_dim(TaskId::Tracking, oh));
  }
  for (TaskId t : kAllTasks) CHECK(parse_task(task_name(t)) == t);
  CHECK_THROWS(parse_task("hover"));
}

TEST_CASE("gate corners") {
  const Gate g = facing_x();
  CHECK(g.normal.dot(g.up) == 0.0);
  const auto c = g.corners();
  // looking along +x, the right-hand side is -y
  CHECK((c[0] - Vec3(0, 0.75, 0.75)).norm() < 1e-15);
  CHECK((c[1] - Vec3(0, -0.75, 0.75)).norm() < 1e-15);
  CHECK((c[2] - Vec3(0, -0.75, -0.75)).norm() < 1e-15);
  CHECK((c[3] - Vec3(0, 0.75, -0.75)).norm() < 1e-15);
  CHECK((c[1] - c[0]).norm() == doctest::Approx(1.5));
}

TEST_CASE("default track") {
  const Track t = default_figure8_track();
  CHECK(t.gates.size() == 6);
  for (const Gate& g : t.gates) {
    CHECK(2.0 * g.half_width == 1.5);
    CHECK(std::abs(g.normal.norm() - 1.0) < 1e-12);
  }
}

TEST_CASE("track yaml round trip and errors") {
  const Track t = default_figure8_track();
  const Track back = parse_track(track_to_yaml(t));
  REQUIRE(back.gates.size() == t.gates.size());
  for (std::size_t i = 0; i < t.gates.size(); ++i) {
    CHECK((back.gates[i].center - t.gates[i].center).norm() < 1e-12);
    CHECK((back.gates[i].normal - t.gates[i].normal).norm() < 1e-12);
  }
  CHECK_THROWS_WITH(parse_track("schema: 2\ngates: []"), doctest::Contains("track.schema"));
  CHECK_THROWS_WITH(parse_track("schema: 1\ngates:\n  - {center: [0, 0], yaw_deg: 0}"),
                    doctest::Contains("track.gates[0].center"));
  CHECK_THROWS_WITH(parse_track("schema: 1\ngates:\n  - {center: [0, 0, 1]}"),
                    doctest::Contains("track.gates[0].yaw_deg"));
}

TEST_CASE("assemble_shared_obs examples") {
  QuadState s;
  SharedObs expect;
  expect << 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0;
  CHECK(assemble_shared_obs(s, Vec4::Zero()) == expect);
  s.position = Vec3(1, 2, 3);
  s.velocity = Vec3(4, 5, 6);
  s.body_rates = Vec3(7, 8, 9);
  const SharedObs o = assemble_shared_obs(s, Vec4(0.1, 0.2, 0.3, 0.4));
  CHECK(o.size() == 19);
  CHECK(o.head<3>() == Vec3(1, 2, 3));
  CHECK(o.segment<3>(9) == Vec3(4, 5, 6));
  CHECK(o.segment<3>(12) == Vec3(7, 8, 9));
  CHECK(o.tail<4>() == Vec4(0.1, 0.2, 0.3, 0.4));
}

TEST_CASE("racing_task_obs examples") {
  Track t;
  t.gates = {Gate::from_yaw(Vec3(1, 2, 3), 0.3), Gate::from_yaw(Vec3(5, 2, 3), 1.0)};
  QuadState s;
  s.position = t.gates[0].center;
  const GateObs o = racing_task_obs(s, t, 0);
  Vec3 mean = Vec3::Zero();
  for (int i = 0; i < 4; ++i) mean += o.segment<3>(3 * i);
  CHECK(mean.norm() < 1e-12);

  Track stacked;
  stacked.gates = {t.gates[0], t.gates[0]};
  CHECK(racing_task_obs(s, stacked, 0).tail<12>().isZero());

  Rng rng(2);
  for (int k = 0; k < 50; ++k) {
    const Vec3 d = testing::random_vec3(rng, 10.0);
    QuadState moved = s;
    moved.position += d;
    const GateObs a = racing_task_obs(s, t, 1);
    const GateObs b = racing_task_obs(moved, t, 1);
    for (int i = 0; i < 4; ++i) CHECK((b.segment<3>(3 * i) - (a.segment<3>(3 * i) - d)).norm() < 1e-12);
    CHECK(a.tail<12>() == b.tail<12>());
  }
  // wraps around the gate list
  CHECK(racing_task_obs(s, t, 2) == racing_task_obs(s, t, 0));
}

TEST_CASE("gate_pass_check examples") {
  const Gate g = facing_x();
  GatePass r = gate_pass_check(Vec3(-0.1, 0, 0), Vec3(0.1, 0.2, 0), g);
  CHECK(r.passed);
  // plane crossing halfway along the segment, at (0, 0.1, 0)
  CHECK((r.crossing - Vec3(0, 0.1, 0)).norm() < 1e-15);
  CHECK(r.gate_error == doctest::Approx(0.1).epsilon(1e-12));

  r = gate_pass_check(Vec3(0.1, 0.2, 0), Vec3(-0.1, 0, 0), g);
  CHECK_FALSE(r.passed);
  r = gate_pass_check(Vec3(-0.1, 0, 1.0), Vec3(0.1, 0, 1.0), g);
  CHECK_FALSE(r.passed);
  r = gate_pass_check(Vec3(-0.1, 0, 1.0), Vec3(0.1, 0, 1.0), g, 0.3);
  CHECK(r.passed);
}

TEST_CASE("gate passes are counted once under segment subdivision") {
  const Gate g = Gate::from_yaw(Vec3(1, 1, 2), 0.8);
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec3 a = g.center - 1.0 * g.normal + testing::random_vec3(rng, 0.6);
    const Vec3 b = g.center + 1.0 * g.normal + testing::random_vec3(rng, 0.6);
    const GatePass whole = gate_pass_check(a, b, g);
    for (int n : {2, 3, 7, 20}) {
      int passes = 0;
      double err = 0.0;
      for (int k = 0; k < n; ++k) {
        const Vec3 p0 = a + (b - a) * (double(k) / n);
        const Vec3 p1 = a + (b - a) * (double(k + 1) / n);
        const GatePass part = gate_pass_check(p0, p1, g);
        if (part.passed) {
          ++passes;
          err = part.gate_error;
        }
      }
      CHECK(passes == (whole.passed ? 1 : 0));
      if (whole.passed) CHECK(std::abs(err - whole.gate_error) < 1e-9);
    }
  }
}

TEST_CASE("segment_distance agrees with dense sampling") {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec3 a0 = testing::random_vec3(rng, 2), a1 = testing::random_vec3(rng, 2);
    const Vec3 b0 = testing::random_vec3(rng, 2), b1 = testing::random_vec3(rng, 2);
    double best = 1e9;
    const int n = 400;
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j <= n; ++j)
        best = std::min(best, ((a0 + (a1 - a0) * (double(i) / n)) - (b0 + (b1 - b0) * (double(j) / n))).norm());
    const double d = segment_distance(a0, a1, b0, b1);
    CHECK(d <= best + 1e-12);
    CHECK(d >= best - 0.02);
  }
}

TEST_CASE("racing_reward examples") {
  Track t;
  t.gates = {Gate::from_yaw(Vec3(5, 0, 2), 0.0)};
  QuadState s;
  s.position = Vec3(0, 0, 2);
  Reward r = racing_reward(s, s, Vec4::Zero(), Vec4::Zero(), t, 0, {});
  CHECK(r.total == doctest::Approx(0.025).epsilon(1e-15));
  CHECK(r.term("perception") == 0.025);

  QuadState closer = s;
  closer.position.x() += 0.2;
  r = racing_reward(s, closer, Vec4::Zero(), Vec4::Zero(), t, 0, {});
  CHECK(r.term("progress") == doctest::Approx(0.1).epsilon(1e-12));

  r = racing_reward(s, s, Vec4::Zero(), Vec4::Zero(), t, 0, {false, true});
  CHECK(r.term("crash") == -10.0);
  r = racing_reward(s, s, Vec4::Zero(), Vec4::Zero(), t, 0, {true, false});
  CHECK(r.term("pass") == -5.0);

  // camera turned 90 degrees away from the gate
  QuadState turned = s;
  turned.attitude = quat_from_axis_angle(Vec3::UnitZ(), std::numbers::pi / 2);
  r = racing_reward(s, turned, Vec4::Zero(), Vec4::Zero(), t, 0, {});
  CHECK(r.term("perception") == doctest::Approx(0.025 * std::exp(-std::pow(std::numbers::pi / 2, 4))));
}

TEST_CASE("rewards equal the sum of their components") {
  Rng rng(21);
  const Track t = default_figure8_track();
  for (int k = 0; k < 100; ++k) {
    QuadState a, b;
    a.position = testing::random_vec3(rng, 8);
    b.position = a.position + testing::random_vec3(rng, 0.3);
    b.attitude = testing::random_unit_quaternion(rng);
    b.velocity = testing::random_vec3(rng, 5);
    b.body_rates = testing::random_vec3(rng, 3);
    Vec4 u = Vec4::Random(), up = Vec4::Random();
    for (const Reward& r :
         {racing_reward(a, b, u, up, t, rng.index(6), {rng.uniform(0, 1) > 0.5, rng.uniform(0, 1) > 0.5}),
          stabilization_reward(b, u, up, 5.0, rng.uniform(0, 1) > 0.5),
          tracking_reward(b, u, up, testing::random_vec3(rng, 5))}) {
      double sum = 0.0;
      for (const RewardTerm& term : r.terms) sum += term.value;
      CHECK(std::abs(sum - r.total) < 1e-12);
    }
  }
}

TEST_CASE("racing shaping terms are translation invariant") {
  Rng rng(22);
  const Track t = default_figure8_track();
  for (int k = 0; k < 50; ++k) {
    QuadState a, b;
    a.position = testing::random_vec3(rng, 8);
    b.position = a.position + testing::random_vec3(rng, 0.3);
    b.attitude = testing::random_unit_quaternion(rng);
    b.body_rates = testing::random_vec3(rng, 3);
    const Vec3 d = testing::random_vec3(rng, 20);
    Track moved = t;
    for (Gate& g : moved.gates) g.center += d;
    QuadState a2 = a, b2 = b;
    a2.position += d;
    b2.position += d;
    const Vec4 u = Vec4::Random(), up = Vec4::Random();
    const Reward r1 = racing_reward(a, b, u, up, t, 2, {});
    const Reward r2 = racing_reward(a2, b2, u, up, moved, 2, {});
    for (const char* name : {"progress", "perception", "action", "body_rate"})
      CHECK(std::abs(r1.term(name) - r2.term(name)) < 1e-9);
  }
}

TEST_CASE("stabilization_reward examples") {
  QuadState s;
  s.position = Vec3(0, 0, 5);
  CHECK(stabilization_reward(s, Vec4::Zero(), Vec4::Zero(), 5.0, false).total == 0.0);
  QuadState v = s;
  v.velocity = Vec3(1, 0, 0);
  CHECK(stabilization_reward(v, Vec4::Zero(), Vec4::Zero(), 5.0, false).term("velocity") == -4e-5);
  QuadState h = s;
  h.position.z() = 7.0;
  CHECK(stabilization_reward(h, Vec4::Zero(), Vec4::Zero(), 5.0, false).total == doctest::Approx(-4e-3).epsilon(1e-14));
  CHECK(stabilization_reward(s, Vec4::Zero(), Vec4::Zero(), 5.0, true).term("success") == 10.0);

  QuadState tilted = s;
  tilted.attitude = quat_from_axis_angle(Vec3::UnitZ(), 0.5) * quat_from_axis_angle(Vec3::UnitX(), 0.2);
  const double geo = stabilization_reward(tilted, Vec4::Zero(), Vec4::Zero(), 5.0, false).term("attitude");
  const double tilt = stabilization_reward(tilted, Vec4::Zero(), Vec4::Zero(), 5.0, false, {},
                                           AttitudeError::Tilt).term("attitude");
  CHECK(geo == doctest::Approx(-2e-4 * geodesic_angle(tilted.attitude)));
  CHECK(tilt == doctest::Approx(-2e-4 * 0.2));
}

TEST_CASE("tracking_reward examples") {
  QuadState s;
  s.velocity = Vec3(1, 2, 3);
  CHECK(tracking_reward(s, Vec4::Zero(), Vec4::Zero(), Vec3(1, 2, 3)).total == 0.0);
  s.velocity = Vec3(3, 0, 0);
  CHECK(tracking_reward(s, Vec4::Zero(), Vec4::Zero(), Vec3(1, 0, 0)).total == doctest::Approx(-4e-4).epsilon(1e-14));
  QuadState w;
  w.body_rates = Vec3(0, 0, 1);
  CHECK(tracking_reward(w, Vec4::Zero(), Vec4::Zero(), Vec3::Zero()).total == doctest::Approx(-1.2e-3).epsilon(1e-14));
}

TEST_CASE("curriculum examples") {
  const CurriculumConfig cfg;
  const CurriculumState c0 = curriculum_initial(cfg);
  CHECK(c0.speed_scale == 0.25);
  CHECK(c0.speed_bounds == Vec3(3, 3, 1));

  CurriculumState c = curriculum_update(c0, 500000, TaskId::Stabilization, cfg);
  CHECK(c.level == 5);
  CHECK(c.speed_scale == doctest::Approx(0.25 * std::pow(1.1, 5)).epsilon(1e-14));

  c = curriculum_update(c0, 99999, TaskId::Stabilization, cfg);
  CHECK(c.speed_scale == 0.25);
  c = curriculum_update(c0, 300000, TaskId::Tracking, cfg);
  CHECK(c.speed_bounds == Vec3(6, 6, 4));
  c = curriculum_update(c0, 300000, TaskId::Racing, cfg);
  CHECK(c.speed_scale == c0.speed_scale);

  const CurriculumState big = curriculum_update(c0, 100000000, TaskId::Stabilization, cfg);
  CHECK(big.speed_scale == 1.0);
  CHECK(curriculum_update(big, 100000, TaskId::Stabilization, cfg).speed_scale == 1.0);
  const CurriculumState bigt = curriculum_update(c0, 100000000, TaskId::Tracking, cfg);
  CHECK(bigt.speed_bounds == Vec3(15, 15, 5));

  CurriculumConfig off = cfg;
  off.enabled = false;
  CHECK(curriculum_update(c0, 10000000, TaskId::Stabilization, off).speed_scale == 0.25);
}

TEST_CASE("curriculum is monotone and depends only on the cumulative count") {
  const CurriculumConfig cfg;
  Rng rng(31);
  for (TaskId task : {TaskId::Stabilization, TaskId::Tracking}) {
    CurriculumState c = curriculum_initial(cfg);
    for (int k = 0; k < 200; ++k) {
      const auto n = static_cast<std::uint64_t>(rng.uniform(0, 30000));
      const CurriculumState next = curriculum_update(c, n, task, cfg);
      CHECK(next.speed_scale >= c.speed_scale);
      CHECK((next.speed_bounds.array() >= c.speed_bounds.array()).all());
      const CurriculumState direct = curriculum_update(curriculum_initial(cfg), next.samples_seen, task, cfg);
      CHECK(direct.speed_scale == next.speed_scale);
      CHECK(direct.speed_bounds == next.speed_bounds);
      c = next;
    }
  }
}

TEST_CASE("stabilization initial states") {
  const CurriculumConfig cc;
  const StabilizationConfig sc;
  const QuadParams qp;
  Rng rng(41);
  const CurriculumState c0 = curriculum_initial(cc);
  for (int k = 0; k < 500; ++k) {
    const QuadState s = sample_stabilization_initial(rng, c0, sc, qp);
    CHECK(std::abs(s.velocity.x()) <= 0.25 * 20);
    CHECK(std::abs(s.velocity.y()) <= 0.25 * 20);
    CHECK(std::abs(s.velocity.z()) <= 0.25 * 4);
    // ballistic clearance over one second
    for (double t = 0; t <= 1.0; t += 0.01)
      CHECK(s.position.z() + s.velocity.z() * t - 0.5 * 9.81 * t * t >= -1e-12);
  }
  CurriculumState full = c0;
  full.speed_scale = 1.0;
  double vmax = 0;
  for (int k = 0; k < 2000; ++k) vmax = std::max(vmax, std::abs(sample_stabilization_initial(rng, full, sc, qp).velocity.x()));
  CHECK(vmax <= 20.0);
  CHECK(vmax > 19.0);
}

TEST_CASE("descending start is lifted by the ballistic drop") {
  // v_z = -4 needs z0 >= 4 + 4.905
  StabilizationConfig sc;
  sc.max_speed_z = 4.0;
  CurriculumState c;
  c.speed_scale = 1.0;
  Rng rng(42);
  int seen = 0;
  for (int k = 0; k < 20000 && seen < 5; ++k) {
    const QuadState s = sample_stabilization_initial(rng, c, sc, QuadParams{});
    if (s.velocity.z() < -3.99) {
      ++seen;
      CHECK(s.position.z() >= -s.velocity.z() + 4.905 - 1e-12);
      CHECK(s.position.z() >= 8.89);
    }
  }
  CHECK(seen > 0);
}

TEST_CASE("velocity profiles") {
  TrackingConfig tc;
  CurriculumState c = curriculum_initial(CurriculumConfig{});
  Rng rng(51);
  const VelocityProfile p = sample_velocity_profile(rng, c, 500, 0.02, tc);
  CHECK(p.velocity.size() == 501);
  CHECK(p.accel.size() == 500);
  for (const Vec3& v : p.velocity) CHECK((v.cwiseAbs().array() <= c.speed_bounds.array()).all());
  Vec3 v = p.unclamped.front();
  for (std::size_t k = 0; k < p.accel.size(); ++k) {
    v += p.accel[k] * 0.02;
    CHECK(v == p.unclamped[k + 1]);
  }
  tc.accel_max = 0.0;
  const VelocityProfile still = sample_velocity_profile(rng, c, 100, 0.02, tc);
  for (const Vec3& w : still.velocity) CHECK(w == still.velocity.front());
}

TEST_CASE("env reset is deterministic and has the right widths") {
  for (bool oh : {false, true}) {
    auto cfg = default_cfg(oh);
    const CurriculumState c = curriculum_initial(cfg->curriculum);
    for (TaskId t : kAllTasks) {
      Env a(t, cfg, default_track(), 7), b(t, cfg, default_track(), 7);
      const Observation oa = a.reset(c), ob = b.reset(c);
      CHECK(oa.full() == ob.full());
      CHECK(oa.shared.size() == 19);
      CHECK(oa.task_specific.size() == task_obs_dim(t, oh));
      if (oh) CHECK(oa.task_specific[task_obs_dim(t, true) - 3 + static_cast<int>(t)] == 1.0);
    }
  }
}

TEST_CASE("stabilization hover reaches success") {
  auto cfg = default_cfg();
  Env env(TaskId::Stabilization, cfg, nullptr, 1);
  const CurriculumState c = curriculum_initial(cfg->curriculum);
  env.reset_from(QuadState::hover(Vec3(0, 0, 5), cfg->quad), c);
  const Vec4 u = policy_output_from_action({cfg->quad.hover_thrust(), Vec3::Zero()}, cfg->quad);
  bool success = false;
  for (int k = 0; k < 50; ++k) {
    const StepResult r = env.step(u);
    // the first step pays for the change from a_prev = 0
    if (k > 0) CHECK(r.reward.total >= -1e-12);
    success = success || r.success;
  }
  CHECK(success);
  CHECK(env.hovering());
}

TEST_CASE("racing crash into the ground") {
  auto cfg = default_cfg();
  Env env(TaskId::Racing, cfg, default_track(), 1);
  env.reset(curriculum_initial(cfg->curriculum));
  StepResult r;
  for (int k = 0; k < 500 && !env.done(); ++k) r = env.step(Vec4(-1, 0, 0, 0));
  CHECK(r.terminated);
  CHECK(r.reason == Termination::Crash);
  CHECK(r.reward.term("crash") == -10.0);
  CHECK_THROWS_AS(env.step(Vec4::Zero()), EpisodeError);
}

TEST_CASE("stabilization ground contact ends the episode with a penalty") {
  auto cfg = default_cfg();
  Env env(TaskId::Stabilization, cfg, nullptr, 2);
  env.reset(curriculum_initial(cfg->curriculum));
  StepResult r;
  double before = 0.0;
  for (int k = 0; k < 500 && !env.done(); ++k) {
    r = env.step(Vec4(-1, 0, 0, 0));
    if (!r.terminated) before = r.reward.total;
  }
  CHECK(r.reason == Termination::Crash);
  CHECK(env.state().position.z() <= 0.0);
  CHECK(r.reward.term("crash") == -10.0);
  CHECK(r.reward.total < before - 9.0);
}

TEST_CASE("tracking runs to the horizon") {
  auto cfg = default_cfg();
  Env env(TaskId::Tracking, cfg, nullptr, 1);
  env.reset(curriculum_initial(cfg->curriculum));
  const Vec4 u = policy_output_from_action({cfg->quad.hover_thrust(), Vec3::Zero()}, cfg->quad);
  std::size_t n = 0;
  StepResult r;
  while (!env.done()) {
    r = env.step(u);
    ++n;
  }
  CHECK(n == 500);
  CHECK(r.reason == Termination::Timeout);
}

TEST_CASE("observation carries previous action and acceleration") {
  auto cfg = default_cfg();
  Env env(TaskId::Stabilization, cfg, nullptr, 3);
  env.reset(curriculum_initial(cfg->curriculum));
  const StepResult r = env.step(Vec4(0.5, 1.4, -0.2, 0.3));
  CHECK(r.observation.shared.tail<4>() == Vec4(0.5, 1.0, -0.2, 0.3));
  CHECK(env.clamp_count() == 1);
  CHECK(r.observation.task_specific.head<3>() == linear_acceleration(env.state(), cfg->quad));
  CHECK(r.observation.task_specific[3] == 5.0);
}

TEST_CASE("racing start grid has 64 distinct positions") {
  auto cfg = default_cfg();
  Env env(TaskId::Racing, cfg, default_track(), 1);
  Rng rng(0);
  const auto starts = env.racing_start_states(64, rng);
  CHECK(starts.size() == 64);
  for (std::size_t i = 0; i < starts.size(); ++i)
    for (std::size_t j = i + 1; j < starts.size(); ++j)
      CHECK((starts[i].position - starts[j].position).norm() > 0.1);
}

TEST_CASE("env save and load resume identically") {
  auto cfg = default_cfg();
  for (TaskId t : kAllTasks) {
    Env a(t, cfg, default_track(), 11);
    a.reset(curriculum_initial(cfg->curriculum));
    Rng rng(1);
    for (int k = 0; k < 20 && !a.done(); ++k) a.step(Vec4(rng.uniform(-1, 1), rng.uniform(-.3, .3), 0, 0));
    std::stringstream ss;
    BinaryWriter w(ss);
    a.save(w);
    Env b(t, cfg, default_track(), 999);
    BinaryReader rd(ss);
    b.load(rd);
    for (int k = 0; k < 30; ++k) {
      if (a.done()) {
        CHECK(b.done());
        a.reset(curriculum_initial(cfg->curriculum));
        b.reset(curriculum_initial(cfg->curriculum));
      }
      const Vec4 u(rng.uniform(-1, 1), 0.1, -0.1, 0.0);
      const StepResult ra = a.step(u), rb = b.step(u);
      CHECK(ra.observation.full() == rb.observation.full());
      CHECK(ra.reward.total == rb.reward.total);
    }
  }
}

TEST_CASE("trajectory csv has one row per step") {
  std::vector<TrajectoryRow> rows(3);
  rows[0].reward = tracking_reward(QuadState{}, Vec4::Zero(), Vec4::Zero(), Vec3::Zero());
  rows[1].reward = rows[0].reward;
  rows[2].reward = rows[0].reward;
  std::ostringstream os;
  write_trajectory_csv(os, rows);
  std::istringstream is(os.str());
  std::string line;
  int n = 0;
  std::getline(is, line);
  CHECK(line.rfind("schema,t,", 0) == 0);
  CHECK(line.find("r_velocity") != std::string::npos);
  CHECK(line.find("vdx") == std::string::npos);
  while (std::getline(is, line)) ++n;
  CHECK(n == 3);

  for (auto& r : rows) r.v_desired = Vec3(1, 2, 3);
  std::ostringstream ref;
  write_trajectory_csv(ref, rows);
  std::istringstream ris(ref.str());
  std::getline(ris, line);
  CHECK(line.substr(line.size() - 12) == ",vdx,vdy,vdz");
  std::getline(ris, line);
  CHECK(line.substr(line.size() - 6) == ",1,2,3");
}

}
