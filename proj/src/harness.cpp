#include "mtquad/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace mtquad {

namespace fs = std::filesystem;

namespace {

void parallel_trials(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
  for (auto& t : pool) t.join();
}

std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Trial seeds are drawn up front so results do not depend on the thread count.
std::vector<std::uint64_t> trial_seeds(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  std::vector<std::uint64_t> out(n);
  for (auto& s : out) s = rng.next_u64();
  return out;
}

nlohmann::ordered_json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

std::string fmt(const std::optional<double>& v, int precision = 3) {
  if (!v) return "";
  std::ostringstream os;
  os << std::setprecision(precision) << std::fixed << *v;
  return os.str();
}

}  // namespace

CurriculumState full_difficulty(const CurriculumConfig& cfg) {
  CurriculumState c = curriculum_initial(cfg);
  c.speed_scale = cfg.stabilization_max_scale;
  c.speed_bounds = cfg.tracking_max_bounds;
  return c;
}

RacingEval eval_racing(const PilotFactory& pilot, std::shared_ptr<const EnvConfig> env,
                       std::shared_ptr<const Track> track, std::size_t n_starts,
                       const EvalOptions& opt, std::vector<Trajectory>* trajectories) {
  Env probe(TaskId::Racing, env, track, 0);
  Rng rng(opt.seed);
  const std::vector<QuadState> starts = probe.racing_start_states(n_starts, rng);
  const CurriculumState none = curriculum_initial(env->curriculum);

  RacingEval out;
  out.trials = n_starts;
  out.per_trial.resize(n_starts);
  std::vector<Trajectory> traj(std::min(opt.record_trajectories, n_starts));
  parallel_trials(n_starts, opt.threads, [&](std::size_t i) {
    Env e(TaskId::Racing, env, track, i);
    Observation obs = e.reset_from(starts[i], none);
    auto p = pilot();
    p->begin(e);
    RacingTrial& trial = out.per_trial[i];
    while (!e.done() && !e.racing_progress().circuit_complete()) {
      const Vec4 u = p->act(e, obs);
      StepResult r = e.step(u);
      if (i < traj.size()) traj[i].push_back({r.time, e.state(), u, r.reward, std::nullopt});
      trial.crashed = r.reason == Termination::Crash;
      obs = std::move(r.observation);
    }
    const RacingProgress& prog = e.racing_progress();
    trial.success = prog.circuit_complete() && !trial.crashed;
    trial.gates_passed = prog.gates_passed;
    trial.gate_errors = prog.gate_errors;
    if (trial.success) trial.lap_time = prog.lap_time;
  });

  std::vector<double> errors, laps;
  std::size_t successes = 0;
  for (const auto& t : out.per_trial) {
    errors.insert(errors.end(), t.gate_errors.begin(), t.gate_errors.end());
    if (t.success) {
      ++successes;
      laps.push_back(*t.lap_time);
    }
    if (t.crashed) ++out.crashes;
  }
  out.success_rate = n_starts ? static_cast<double>(successes) / static_cast<double>(n_starts) : 0.0;
  // a policy that never completes the circuit has no meaningful gate error
  if (successes > 0) out.mean_gate_error = mean_of(errors);
  out.lap_time = mean_of(laps);
  if (trajectories) *trajectories = std::move(traj);
  return out;
}

StabilizationEval eval_stabilization_from(const PilotFactory& pilot, std::shared_ptr<const EnvConfig> env,
                                          const std::vector<QuadState>& initial, const EvalOptions& opt,
                                          std::vector<Trajectory>* trajectories) {
  const std::size_t n = initial.size();
  const CurriculumState none = curriculum_initial(env->curriculum);
  StabilizationEval out;
  out.trials = n;
  out.per_trial.resize(n);
  std::vector<Trajectory> traj(std::min(opt.record_trajectories, n));
  parallel_trials(n, opt.threads, [&](std::size_t i) {
    Env e(TaskId::Stabilization, env, nullptr, i);
    Observation obs = e.reset_from(initial[i], none);
    auto p = pilot();
    p->begin(e);
    StabilizationTrial& t = out.per_trial[i];
    t.initial_speed = initial[i].velocity.norm();
    const double hover = env->stabilization.hover_speed;
    auto check = [&](double time) {
      const double v = e.state().velocity.norm();
      if (!t.t_half && v <= 0.5 * t.initial_speed) t.t_half = time;
      if (!t.t_full && v < hover) t.t_full = time;
    };
    check(0.0);
    while (!e.done()) {
      const Vec4 u = p->act(e, obs);
      StepResult r = e.step(u);
      if (i < traj.size()) traj[i].push_back({r.time, e.state(), u, r.reward, std::nullopt});
      if (r.reason == Termination::Crash) {
        t.crashed = true;
        break;
      }
      check(r.time);
      obs = std::move(r.observation);
    }
  });

  std::vector<double> halves, fulls;
  std::size_t ok = 0;
  for (const auto& t : out.per_trial) {
    if (t.t_half) halves.push_back(*t.t_half);
    else ++out.half_failures;
    if (t.t_full) fulls.push_back(*t.t_full);
    if (t.crashed) ++out.crashes;
    if (t.success()) ++ok;
  }
  out.t_half = mean_of(halves);
  out.t_full = mean_of(fulls);
  out.success_rate = n ? static_cast<double>(ok) / static_cast<double>(n) : 0.0;
  if (trajectories) *trajectories = std::move(traj);
  return out;
}

StabilizationEval eval_stabilization(const PilotFactory& pilot, std::shared_ptr<const EnvConfig> env,
                                     std::size_t n_trials, const CurriculumState& difficulty,
                                     const EvalOptions& opt, std::vector<Trajectory>* trajectories) {
  Rng rng(opt.seed);
  std::vector<QuadState> initial;
  initial.reserve(n_trials);
  for (std::size_t i = 0; i < n_trials; ++i)
    initial.push_back(sample_stabilization_initial(rng, difficulty, env->stabilization, env->quad));
  return eval_stabilization_from(pilot, env, initial, opt, trajectories);
}

namespace {

double tracking_trial(Pilot& p, Env& e, Observation obs, Trajectory* traj) {
  p.begin(e);
  double sum = 0.0;
  std::size_t steps = 0;
  while (!e.done()) {
    const Vec4 u = p.act(e, obs);
    StepResult r = e.step(u);
    // same reference sample the tracking reward compares against
    sum += (e.state().velocity - e.velocity_profile().at(e.steps() - 1)).norm();
    ++steps;
    if (traj) traj->push_back({r.time, e.state(), u, r.reward, e.velocity_profile().at(e.steps() - 1)});
    obs = std::move(r.observation);
  }
  return steps ? sum / static_cast<double>(steps) : 0.0;
}

TrackingEval summarize_tracking(std::vector<double> per_trial) {
  TrackingEval out;
  out.trials = per_trial.size();
  out.e_v = mean_of(per_trial).value_or(0.0);
  out.per_trial = std::move(per_trial);
  return out;
}

}  // namespace

TrackingEval eval_tracking(const PilotFactory& pilot, std::shared_ptr<const EnvConfig> env,
                           std::size_t n_trials, const CurriculumState& difficulty,
                           const EvalOptions& opt, std::vector<Trajectory>* trajectories) {
  const std::vector<std::uint64_t> seeds = trial_seeds(opt.seed, n_trials);
  std::vector<double> errs(n_trials);
  std::vector<Trajectory> traj(std::min(opt.record_trajectories, n_trials));
  parallel_trials(n_trials, opt.threads, [&](std::size_t i) {
    Env e(TaskId::Tracking, env, nullptr, seeds[i]);
    Observation obs = e.reset(difficulty);
    auto p = pilot();
    errs[i] = tracking_trial(*p, e, std::move(obs), i < traj.size() ? &traj[i] : nullptr);
  });
  if (trajectories) *trajectories = std::move(traj);
  return summarize_tracking(std::move(errs));
}

TrackingEval eval_tracking_profile(const PilotFactory& pilot, std::shared_ptr<const EnvConfig> env,
                                   const QuadState& initial, const VelocityProfile& profile,
                                   std::size_t n_trials, const EvalOptions& opt) {
  std::vector<double> errs(n_trials);
  const CurriculumState none = curriculum_initial(env->curriculum);
  parallel_trials(n_trials, opt.threads, [&](std::size_t i) {
    Env e(TaskId::Tracking, env, nullptr, i);
    e.reset_from(initial, none);
    e.set_velocity_profile(profile);
    auto p = pilot();
    errs[i] = tracking_trial(*p, e, e.observe(), nullptr);
  });
  return summarize_tracking(std::move(errs));
}

// ---------------------------------------------------------------------------

void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
  os << "schema,variant,seed,samples,racing_sr,racing_mge,racing_lt,racing_crashes,"
        "stab_t_half,stab_t_full,stab_success_rate,stab_crashes,tracking_e_v\n";
  auto num = [](const std::optional<double>& v) {
    if (!v) return std::string();
    return nlohmann::json(*v).dump();
  };
  for (const auto& r : rows) {
    os << kSummarySchema << ',' << r.variant << ',' << r.seed << ',' << r.samples << ',';
    if (r.racing)
      os << num(r.racing->success_rate) << ',' << num(r.racing->mean_gate_error) << ','
         << num(r.racing->lap_time) << ',' << r.racing->crashes << ',';
    else
      os << ",,,,";
    if (r.stabilization)
      os << num(r.stabilization->t_half) << ',' << num(r.stabilization->t_full) << ','
         << num(r.stabilization->success_rate) << ',' << r.stabilization->crashes << ',';
    else
      os << ",,,,";
    if (r.tracking) os << num(r.tracking->e_v);
    os << '\n';
  }
}

void write_summary_text(std::ostream& os, const std::vector<SummaryRow>& rows) {
  auto cell = [](const std::optional<double>& v, bool failed) {
    if (failed) return std::string("crash");
    if (!v) return std::string("n/a");
    return fmt(v, 2);
  };
  os << "summary schema " << kSummarySchema << "\n";
  os << std::left << std::setw(13) << "variant" << std::setw(6) << "seed" << std::setw(11) << "samples"
     << std::setw(8) << "SR" << std::setw(8) << "MGE[m]" << std::setw(8) << "LT[s]" << std::setw(10)
     << "t_half[s]" << std::setw(10) << "t_full[s]" << std::setw(10) << "e_v[m/s]" << "\n";
  for (const auto& r : rows) {
    os << std::left << std::setw(13) << r.variant << std::setw(6) << r.seed << std::setw(11) << r.samples;
    if (r.racing) {
      const bool failed = r.racing->success_rate == 0.0;
      os << std::setw(8) << fmt(r.racing->success_rate, 2) << std::setw(8)
         << cell(r.racing->mean_gate_error, failed) << std::setw(8) << cell(r.racing->lap_time, failed);
    } else {
      os << std::setw(8) << "-" << std::setw(8) << "-" << std::setw(8) << "-";
    }
    if (r.stabilization) {
      os << std::setw(10) << cell(r.stabilization->t_half, false) << std::setw(10)
         << cell(r.stabilization->t_full, false);
    } else {
      os << std::setw(10) << "-" << std::setw(10) << "-";
    }
    os << std::setw(10) << (r.tracking ? fmt(r.tracking->e_v, 3) : std::string("-")) << "\n";
  }
}

std::string eval_json(const SummaryRow& row, std::uint64_t iteration) {
  nlohmann::ordered_json j;
  j["schema"] = kSummarySchema;
  j["variant"] = row.variant;
  j["seed"] = row.seed;
  j["iteration"] = iteration;
  j["samples"] = row.samples;
  if (row.racing) {
    j["racing"] = {{"sr", row.racing->success_rate},
                   {"mge", opt_json(row.racing->mean_gate_error)},
                   {"lt", opt_json(row.racing->lap_time)},
                   {"crashes", row.racing->crashes}};
  }
  if (row.stabilization) {
    j["stabilization"] = {{"t_half", opt_json(row.stabilization->t_half)},
                          {"t_full", opt_json(row.stabilization->t_full)},
                          {"success_rate", row.stabilization->success_rate},
                          {"crashes", row.stabilization->crashes}};
  }
  if (row.tracking) j["tracking"] = {{"e_v", row.tracking->e_v}};
  return j.dump();
}

namespace {

std::optional<double> opt_from(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(line);
  return out;
}

std::vector<fs::path> seed_dirs(const fs::path& run) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(run))
    if (e.is_directory() && e.path().filename().string().rfind("seed_", 0) == 0) out.push_back(e.path());
  std::sort(out.begin(), out.end(), [](const fs::path& a, const fs::path& b) {
    return std::stoull(a.filename().string().substr(5)) < std::stoull(b.filename().string().substr(5));
  });
  return out;
}

}  // namespace

SummaryRow summary_row_from_json(const std::string& line) {
  const nlohmann::json j = nlohmann::json::parse(line);
  if (j.at("schema").get<int>() != kSummarySchema) throw std::runtime_error("unsupported eval schema");
  SummaryRow row;
  row.variant = j.at("variant").get<std::string>();
  row.seed = j.at("seed").get<std::uint64_t>();
  row.samples = j.at("samples").get<std::uint64_t>();
  if (j.contains("racing")) {
    const auto& r = j["racing"];
    RacingEval e;
    e.success_rate = r.at("sr").get<double>();
    e.mean_gate_error = opt_from(r.at("mge"));
    e.lap_time = opt_from(r.at("lt"));
    e.crashes = r.at("crashes").get<std::size_t>();
    row.racing = e;
  }
  if (j.contains("stabilization")) {
    const auto& r = j["stabilization"];
    StabilizationEval e;
    e.t_half = opt_from(r.at("t_half"));
    e.t_full = opt_from(r.at("t_full"));
    e.success_rate = r.at("success_rate").get<double>();
    e.crashes = r.at("crashes").get<std::size_t>();
    row.stabilization = e;
  }
  if (j.contains("tracking")) {
    TrackingEval e;
    e.e_v = j["tracking"].at("e_v").get<double>();
    row.tracking = e;
  }
  return row;
}

std::vector<SummaryRow> summarize_run(const std::string& run_dir) {
  std::vector<SummaryRow> rows;
  for (const auto& dir : seed_dirs(run_dir)) {
    const auto lines = read_lines(dir / "eval.jsonl");
    if (lines.empty()) throw std::runtime_error((dir / "eval.jsonl").string() + " is empty");
    rows.push_back(summary_row_from_json(lines.back()));
  }
  return rows;
}

void export_plot_data(const std::vector<std::string>& run_dirs, const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::ofstream curves(fs::path(out_dir) / "learning_curves.csv");
  curves << "schema,run,variant,seed,iteration,samples,task,task_samples,episodes,mean_return\n";
  std::vector<SummaryRow> summary;
  for (const auto& run : run_dirs) {
    const ExperimentConfig cfg = load_experiment_config((fs::path(run) / "config.yaml").string());
    const std::string variant(variant_name(cfg.variant));
    for (const auto& dir : seed_dirs(run)) {
      const std::string seed = dir.filename().string().substr(5);
      for (const auto& line : read_lines(dir / "metrics.jsonl")) {
        const nlohmann::json j = nlohmann::json::parse(line);
        for (const auto& [task, t] : j.at("tasks").items()) {
          curves << kMetricsSchema << ',' << cfg.name << ',' << variant << ',' << seed << ','
                 << j.at("iteration").get<std::uint64_t>() << ',' << j.at("samples").get<std::uint64_t>()
                 << ',' << task << ',' << t.at("samples").get<std::uint64_t>() << ','
                 << t.at("episodes").get<std::uint64_t>() << ',' << (t.at("mean_return").is_null() ? "" : t.at("mean_return").dump())
                 << '\n';
        }
      }
      const fs::path traj = dir / "trajectories";
      if (fs::exists(traj))
        for (const auto& f : fs::directory_iterator(traj))
          fs::copy_file(f.path(), fs::path(out_dir) / (cfg.name + "_" + variant + "_seed" + seed + "_" + f.path().filename().string()),
                        fs::copy_options::overwrite_existing);
    }
    const auto rows = summarize_run(run);
    summary.insert(summary.end(), rows.begin(), rows.end());
  }
  std::ofstream csv(fs::path(out_dir) / "summary.csv");
  write_summary_csv(csv, summary);
}

namespace {

void write_trajectories(const std::string& dir, TaskId task, const std::vector<Trajectory>& traj) {
  if (dir.empty()) return;
  fs::create_directories(dir);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    std::ofstream f(fs::path(dir) / (std::string(task_name(task)) + "_" + std::to_string(i) + ".csv"));
    write_trajectory_csv(f, traj[i]);
  }
}

SummaryRow evaluate(const ExperimentConfig& cfg, const PolicyParams& params, const ObsNormalizer& norm,
                    std::shared_ptr<const EnvConfig> env, std::shared_ptr<const Track> track,
                    const std::array<CurriculumState, kNumTasks>& difficulty, std::uint64_t seed,
                    const std::string& trajectory_dir) {
  SummaryRow row;
  row.variant = std::string(variant_name(params.variant));
  row.seed = seed;
  PilotFactory pilot = [&] { return std::make_unique<PolicyPilot>(params, norm); };
  EvalOptions opt;
  opt.seed = cfg.eval.seed;
  opt.threads = cfg.eval.threads;
  opt.record_trajectories = trajectory_dir.empty() ? 0 : static_cast<std::size_t>(cfg.eval.trajectories);
  for (TaskId t : params.tasks) {
    if (std::find(cfg.tasks.begin(), cfg.tasks.end(), t) == cfg.tasks.end()) continue;
    std::vector<Trajectory> traj;
    const CurriculumState& d = difficulty[static_cast<int>(t)];
    switch (t) {
      case TaskId::Racing:
        row.racing = eval_racing(pilot, env, track, static_cast<std::size_t>(cfg.eval.racing_starts), opt, &traj);
        break;
      case TaskId::Stabilization:
        row.stabilization =
            eval_stabilization(pilot, env, static_cast<std::size_t>(cfg.eval.stabilization_trials), d, opt, &traj);
        break;
      case TaskId::Tracking:
        row.tracking = eval_tracking(pilot, env, static_cast<std::size_t>(cfg.eval.tracking_trials), d, opt, &traj);
        break;
    }
    write_trajectories(trajectory_dir, t, traj);
  }
  return row;
}

std::array<CurriculumState, kNumTasks> eval_difficulty(const ExperimentConfig& cfg,
                                                       const Trainer* trainer) {
  std::array<CurriculumState, kNumTasks> d;
  for (TaskId t : kAllTasks)
    d[static_cast<int>(t)] = cfg.eval.difficulty == EvalDifficulty::Training && trainer
                                 ? trainer->curriculum(t)
                                 : full_difficulty(cfg.env.curriculum);
  return d;
}

// Keeps the lines of a log keyed below `limit`, so a resumed run rewrites
// exactly what the uninterrupted run would have.
void truncate_log(const fs::path& path, std::uint64_t limit, bool csv) {
  if (!fs::exists(path)) return;
  std::ifstream in(path);
  std::vector<std::string> keep;
  std::string line;
  bool header = csv;
  while (std::getline(in, line)) {
    if (header) {
      keep.push_back(line);
      header = false;
      continue;
    }
    std::uint64_t it = 0;
    if (csv) {
      // schema,task,iteration,...
      std::istringstream fields(line);
      std::string cell;
      for (int k = 0; k < 3; ++k) std::getline(fields, cell, ',');
      it = std::stoull(cell);
    } else {
      it = nlohmann::json::parse(line).at("iteration").get<std::uint64_t>();
    }
    if (it < limit) keep.push_back(line);
  }
  in.close();
  std::ofstream out(path, std::ios::trunc);
  for (const auto& l : keep) out << l << '\n';
}

}  // namespace

SummaryRow evaluate_policy(const ExperimentConfig& cfg, const PolicyParams& params,
                           const ObsNormalizer& norm, std::shared_ptr<const EnvConfig> env,
                           std::shared_ptr<const Track> track, std::uint64_t seed,
                           const std::string& trajectory_dir) {
  return evaluate(cfg, params, norm, std::move(env), std::move(track), eval_difficulty(cfg, nullptr),
                  seed, trajectory_dir);
}

std::vector<SummaryRow> run_experiment(const ExperimentConfig& cfg, const RunOptions& opt) {
  auto log = [&](const std::string& s) {
    if (opt.log) opt.log(s);
  };
  if (!opt.resume_state.empty() && cfg.seeds.size() != 1)
    throw ConfigError("seeds", "resuming requires exactly one seed");
  auto env = std::make_shared<const EnvConfig>(cfg.env);
  auto track = std::make_shared<const Track>(resolve_track(cfg.track));
  const fs::path root(cfg.output.dir);
  fs::create_directories(root);
  {
    std::ofstream f(root / "config.yaml");
    f << experiment_config_to_yaml(cfg);
  }

  std::vector<SummaryRow> rows;
  for (std::uint64_t seed : cfg.seeds) {
    const fs::path dir = root / ("seed_" + std::to_string(seed));
    fs::create_directories(dir / "checkpoints");
    TrainConfig tc = cfg.train;
    tc.seed = seed;
    Trainer trainer(tc, env, track, cfg.variant, cfg.tasks, cfg.network);
    const bool resume = !opt.resume_state.empty();
    if (resume) {
      trainer.load_state(opt.resume_state);
      truncate_log(dir / "metrics.jsonl", trainer.iteration(), false);
      truncate_log(dir / "episodes.csv", trainer.iteration(), true);
      // evaluations are keyed by completed iterations
      truncate_log(dir / "eval.jsonl", trainer.iteration() + 1, false);
      log("resumed at iteration " + std::to_string(trainer.iteration()));
    }
    const auto mode = resume ? std::ios::app : std::ios::trunc;
    std::ofstream metrics(dir / "metrics.jsonl", mode);
    std::ofstream episodes(dir / "episodes.csv", mode);
    std::ofstream evals(dir / "eval.jsonl", mode);
    if (!resume) write_episodes_csv_header(episodes);

    trainer.train([&](const IterationStats& s) {
      metrics << metrics_json(s) << '\n';
      for (const auto& e : trainer.drain_episodes()) write_episode_csv(episodes, e);
      const std::uint64_t done = s.iteration + 1;
      if (cfg.output.checkpoint_every > 0 && done % static_cast<std::uint64_t>(cfg.output.checkpoint_every) == 0) {
        std::ostringstream name;
        name << "iter_" << std::setw(6) << std::setfill('0') << done << ".bin";
        trainer.save_state((dir / "checkpoints" / name.str()).string());
      }
      if (cfg.eval.every_iterations > 0 && done % static_cast<std::uint64_t>(cfg.eval.every_iterations) == 0) {
        SummaryRow row = evaluate(cfg, trainer.policy(), trainer.normalizer(), env, track,
                                  eval_difficulty(cfg, &trainer), seed, "");
        row.samples = trainer.samples();
        evals << eval_json(row, done) << '\n';
        evals.flush();
      }
      std::ostringstream line;
      line << "seed " << seed << " iter " << s.iteration << " samples " << s.samples;
      for (const auto& t : s.tasks)
        line << ' ' << task_name(t.task) << '=' << (std::isnan(t.mean_return) ? std::string("-") : fmt(t.mean_return, 2));
      log(line.str());
      metrics.flush();
    });

    trainer.save_state((dir / "state.bin").string());
    save_checkpoint((dir / "policy.ckpt").string(), trainer.policy(), trainer.normalizer());
    SummaryRow row = evaluate(cfg, trainer.policy(), trainer.normalizer(), env, track,
                              eval_difficulty(cfg, &trainer), seed, (dir / "trajectories").string());
    row.samples = trainer.samples();
    const auto every = static_cast<std::uint64_t>(cfg.eval.every_iterations);
    const bool logged = every > 0 && trainer.iteration() > 0 && trainer.iteration() % every == 0;
    if (!logged) evals << eval_json(row, trainer.iteration()) << '\n';
    rows.push_back(std::move(row));
  }

  std::ofstream csv(root / "summary.csv");
  write_summary_csv(csv, rows);
  std::ofstream txt(root / "summary.txt");
  write_summary_text(txt, rows);
  return rows;
}

}  // namespace mtquad
