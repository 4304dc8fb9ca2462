#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "mtquad/harness.hpp"

using namespace mtquad;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::vector<std::uint64_t> seeds;
  std::string variant;
  std::vector<std::string> tasks;
  std::string out;
};

void add_common(CLI::App* app, Common& c, bool need_config) {
  auto* opt = app->add_option("--config", c.config, "experiment config (YAML)");
  if (need_config) opt->required()->check(CLI::ExistingFile);
  else opt->check(CLI::ExistingFile);
  app->add_option("--seed", c.seeds, "seed(s), overriding the config");
  app->add_option("--variant", c.variant, "ours | actor_only | separate | single_task");
  app->add_option("--task", c.tasks, "racing | stabilization | tracking (repeatable)");
  app->add_option("--out", c.out, "output directory");
}

ExperimentConfig resolve(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_experiment_config(c.config);
  if (!c.seeds.empty()) cfg.seeds = c.seeds;
  if (!c.variant.empty()) {
    try {
      cfg.variant = parse_variant(c.variant);
    } catch (const std::exception& e) {
      throw ConfigError("variant", e.what());
    }
  }
  if (!c.tasks.empty()) {
    cfg.tasks.clear();
    for (const auto& t : c.tasks) {
      try {
        cfg.tasks.push_back(parse_task(t));
      } catch (const std::exception& e) {
        throw ConfigError("tasks", e.what());
      }
    }
  }
  if (!c.out.empty()) cfg.output.dir = c.out;
  // round trip so command-line overrides see the same validation as the file
  return parse_experiment_config(experiment_config_to_yaml(cfg));
}

void print_summary(const std::vector<SummaryRow>& rows) { write_summary_text(std::cout, rows); }

int cmd_train(const Common& c, const std::string& checkpoint) {
  const ExperimentConfig cfg = resolve(c);
  RunOptions opt;
  opt.resume_state = checkpoint;
  opt.log = [](const std::string& s) { std::cerr << s << '\n'; };
  print_summary(run_experiment(cfg, opt));
  std::cout << "outputs in " << cfg.output.dir << '\n';
  return 0;
}

int cmd_eval(const Common& c, const std::string& checkpoint) {
  ExperimentConfig cfg = resolve(c);
  PolicyParams params;
  ObsNormalizer norm;
  load_checkpoint(checkpoint, params, norm);
  cfg.env.one_hot = params.net.one_hot;
  // only tasks the policy was trained on are evaluated
  if (std::none_of(cfg.tasks.begin(), cfg.tasks.end(), [&](TaskId t) { return params.has_task(t); }))
    throw ConfigError("tasks", "the checkpoint covers none of the requested tasks");
  auto env = std::make_shared<const EnvConfig>(cfg.env);
  auto track = std::make_shared<const Track>(resolve_track(cfg.track));
  std::vector<SummaryRow> rows;
  for (std::uint64_t seed : cfg.seeds) {
    cfg.eval.seed = seed;
    const std::string traj = c.out.empty() ? "" : (fs::path(c.out) / ("seed_" + std::to_string(seed))).string();
    rows.push_back(evaluate_policy(cfg, params, norm, env, track, seed, traj));
  }
  if (!c.out.empty()) {
    fs::create_directories(c.out);
    std::ofstream csv(fs::path(c.out) / "summary.csv");
    write_summary_csv(csv, rows);
    std::ofstream txt(fs::path(c.out) / "summary.txt");
    write_summary_text(txt, rows);
  }
  print_summary(rows);
  return 0;
}

// Scripted controllers: gate follower for racing, velocity controller otherwise.
int cmd_simulate(const Common& c) {
  const ExperimentConfig cfg = resolve(c);
  auto env = std::make_shared<const EnvConfig>(cfg.env);
  auto track = std::make_shared<const Track>(resolve_track(cfg.track));
  EvalOptions opt;
  opt.seed = c.seeds.empty() ? cfg.eval.seed : c.seeds.front();
  opt.threads = cfg.eval.threads;
  opt.record_trajectories = c.out.empty() ? 0 : static_cast<std::size_t>(cfg.eval.trajectories);
  SummaryRow row;
  row.variant = "scripted";
  row.seed = opt.seed;
  auto velocity = [] { return std::make_unique<VelocityPilot>(); };
  for (TaskId t : cfg.tasks) {
    std::vector<Trajectory> traj;
    const CurriculumState d = full_difficulty(cfg.env.curriculum);
    switch (t) {
      case TaskId::Racing:
        row.racing = eval_racing([] { return std::make_unique<GatePilot>(); }, env, track,
                                 static_cast<std::size_t>(cfg.eval.racing_starts), opt, &traj);
        break;
      case TaskId::Stabilization:
        row.stabilization =
            eval_stabilization(velocity, env, static_cast<std::size_t>(cfg.eval.stabilization_trials), d, opt, &traj);
        break;
      case TaskId::Tracking:
        row.tracking = eval_tracking(velocity, env, static_cast<std::size_t>(cfg.eval.tracking_trials), d, opt, &traj);
        break;
    }
    if (!c.out.empty()) {
      fs::create_directories(c.out);
      for (std::size_t i = 0; i < traj.size(); ++i) {
        std::ofstream f(fs::path(c.out) / (std::string(task_name(t)) + "_" + std::to_string(i) + ".csv"));
        write_trajectory_csv(f, traj[i]);
      }
    }
  }
  print_summary({row});
  if (!c.out.empty()) {
    std::ofstream f(fs::path(c.out) / "eval.jsonl");
    f << eval_json(row, 0) << '\n';
  }
  return 0;
}

int cmd_export(const std::vector<std::string>& runs, const std::string& out) {
  export_plot_data(runs, out);
  std::cout << "plot data in " << out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-task quadrotor control: training, evaluation and export"};
  app.require_subcommand(1);

  Common train_opts, eval_opts, sim_opts;
  std::string resume, policy;
  auto* train = app.add_subcommand("train", "train and evaluate every seed of a config");
  add_common(train, train_opts, true);
  train->add_option("--checkpoint", resume, "training state to resume from")->check(CLI::ExistingFile);

  auto* eval = app.add_subcommand("eval", "evaluate a saved policy");
  add_common(eval, eval_opts, false);
  eval->add_option("--checkpoint", policy, "policy checkpoint (policy.ckpt)")->required()->check(CLI::ExistingFile);

  auto* sim = app.add_subcommand("simulate", "run the scripted controllers through the evaluation");
  add_common(sim, sim_opts, false);

  std::vector<std::string> runs;
  std::string plot_out = "plots";
  auto* exp = app.add_subcommand("export-plots", "write plotting CSVs from run directories");
  exp->add_option("runs", runs, "run directories")->required()->check(CLI::ExistingDirectory);
  exp->add_option("--out", plot_out, "output directory");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*train) return cmd_train(train_opts, resume);
    if (*eval) return cmd_eval(eval_opts, policy);
    if (*sim) return cmd_simulate(sim_opts);
    if (*exp) return cmd_export(runs, plot_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
