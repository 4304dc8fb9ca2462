#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "mtquad/harness.hpp"

namespace mtquad {

namespace {

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

// ---- scalar conversions ---------------------------------------------------

void read_value(const YAML::Node& n, double& v, const std::string& path) {
  try {
    v = n.as<double>();
  } catch (const YAML::Exception&) {
    throw ConfigError(path, "expected a number");
  }
  if (!std::isfinite(v)) throw ConfigError(path, "must be finite");
}

template <typename Int>
void read_integer(const YAML::Node& n, Int& v, const std::string& path) {
  double d = 0.0;
  try {
    d = n.as<double>();
  } catch (const YAML::Exception&) {
    throw ConfigError(path, "expected an integer");
  }
  if (d != std::floor(d) || d < static_cast<double>(std::numeric_limits<Int>::min()) ||
      d > static_cast<double>(std::numeric_limits<Int>::max()))
    throw ConfigError(path, "expected an integer");
  try {
    v = n.as<Int>();  // exact for plain integer literals
  } catch (const YAML::Exception&) {
    v = static_cast<Int>(d);  // 1.5e6 style
  }
}

void read_value(const YAML::Node& n, int& v, const std::string& path) { read_integer(n, v, path); }
void read_value(const YAML::Node& n, std::uint64_t& v, const std::string& path) {
  read_integer(n, v, path);
}

void read_value(const YAML::Node& n, bool& v, const std::string& path) {
  try {
    v = n.as<bool>();
  } catch (const YAML::Exception&) {
    throw ConfigError(path, "expected true or false");
  }
}

void read_value(const YAML::Node& n, std::string& v, const std::string& path) {
  if (!n.IsScalar()) throw ConfigError(path, "expected a string");
  v = n.as<std::string>();
}

void read_value(const YAML::Node& n, Vec3& v, const std::string& path) {
  if (!n.IsSequence() || n.size() != 3) throw ConfigError(path, "expected a list of 3 numbers");
  for (int i = 0; i < 3; ++i) read_value(n[i], v[i], path + "[" + std::to_string(i) + "]");
}

void read_value(const YAML::Node& n, Variant& v, const std::string& path) {
  std::string s;
  read_value(n, s, path);
  try {
    v = parse_variant(s);
  } catch (const std::invalid_argument&) {
    throw ConfigError(path, "unknown variant '" + s + "' (ours, actor_only, separate, single_task)");
  }
}

void read_value(const YAML::Node& n, std::vector<TaskId>& v, const std::string& path) {
  if (!n.IsSequence() || n.size() == 0) throw ConfigError(path, "expected a non-empty list of tasks");
  v.clear();
  for (std::size_t i = 0; i < n.size(); ++i) {
    std::string s;
    const std::string p = path + "[" + std::to_string(i) + "]";
    read_value(n[i], s, p);
    TaskId t;
    try {
      t = parse_task(s);
    } catch (const std::invalid_argument&) {
      throw ConfigError(p, "unknown task '" + s + "' (racing, stabilization, tracking)");
    }
    if (std::find(v.begin(), v.end(), t) != v.end()) throw ConfigError(p, "duplicate task");
    v.push_back(t);
  }
}

void read_value(const YAML::Node& n, std::vector<std::uint64_t>& v, const std::string& path) {
  if (!n.IsSequence() || n.size() == 0) throw ConfigError(path, "expected a non-empty list of seeds");
  v.assign(n.size(), 0);
  for (std::size_t i = 0; i < n.size(); ++i) read_value(n[i], v[i], path + "[" + std::to_string(i) + "]");
}

void read_value(const YAML::Node& n, AttitudeError& v, const std::string& path) {
  std::string s;
  read_value(n, s, path);
  if (s == "geodesic") v = AttitudeError::Geodesic;
  else if (s == "tilt") v = AttitudeError::Tilt;
  else throw ConfigError(path, "expected geodesic or tilt");
}

void read_value(const YAML::Node& n, EvalDifficulty& v, const std::string& path) {
  std::string s;
  read_value(n, s, path);
  if (s == "full") v = EvalDifficulty::Full;
  else if (s == "training") v = EvalDifficulty::Training;
  else throw ConfigError(path, "expected full or training");
}

// gamma: one number for every task, or a map task -> number
void read_value(const YAML::Node& n, std::array<double, kNumTasks>& v, const std::string& path) {
  if (n.IsScalar()) {
    double g = 0.0;
    read_value(n, g, path);
    v.fill(g);
    return;
  }
  if (!n.IsMap()) throw ConfigError(path, "expected a number or a map of task to number");
  for (const auto& kv : n) {
    const std::string key = kv.first.as<std::string>();
    TaskId t;
    try {
      t = parse_task(key);
    } catch (const std::invalid_argument&) {
      throw ConfigError(join(path, key), "unknown task");
    }
    read_value(kv.second, v[static_cast<int>(t)], join(path, key));
  }
}

void write_value(YAML::Emitter& e, double v) { e << v; }
void write_value(YAML::Emitter& e, int v) { e << v; }
void write_value(YAML::Emitter& e, std::uint64_t v) { e << v; }
void write_value(YAML::Emitter& e, bool v) { e << v; }
void write_value(YAML::Emitter& e, const std::string& v) { e << v; }
void write_value(YAML::Emitter& e, const Vec3& v) {
  e << YAML::Flow << YAML::BeginSeq << v.x() << v.y() << v.z() << YAML::EndSeq;
}
void write_value(YAML::Emitter& e, Variant v) { e << std::string(variant_name(v)); }
void write_value(YAML::Emitter& e, const std::vector<TaskId>& v) {
  e << YAML::Flow << YAML::BeginSeq;
  for (TaskId t : v) e << std::string(task_name(t));
  e << YAML::EndSeq;
}
void write_value(YAML::Emitter& e, const std::vector<std::uint64_t>& v) {
  e << YAML::Flow << YAML::BeginSeq;
  for (auto s : v) e << s;
  e << YAML::EndSeq;
}
void write_value(YAML::Emitter& e, AttitudeError v) {
  e << (v == AttitudeError::Geodesic ? "geodesic" : "tilt");
}
void write_value(YAML::Emitter& e, EvalDifficulty v) {
  e << (v == EvalDifficulty::Full ? "full" : "training");
}
void write_value(YAML::Emitter& e, const std::array<double, kNumTasks>& v) {
  e << YAML::BeginMap;
  for (TaskId t : kAllTasks) e << YAML::Key << std::string(task_name(t)) << YAML::Value << v[static_cast<int>(t)];
  e << YAML::EndMap;
}

// ---- visitors ---------------------------------------------------------------

class Reader {
 public:
  explicit Reader(const YAML::Node& root) { push(root, ""); }

  template <typename T>
  void field(const char* key, T& value) {
    seen_.back().insert(key);
    const YAML::Node& cur = nodes_.back();
    if (!cur.IsMap()) return;
    const YAML::Node child = cur[key];
    if (!child || child.IsNull()) return;
    read_value(child, value, join(paths_.back(), key));
  }

  void section(const char* key, const std::function<void()>& body) {
    seen_.back().insert(key);
    const YAML::Node& cur = nodes_.back();
    YAML::Node child = cur.IsMap() ? cur[key] : YAML::Node();
    const std::string path = join(paths_.back(), key);
    if (child && !child.IsNull() && !child.IsMap()) throw ConfigError(path, "expected a section");
    push(child ? child : YAML::Node(), path);
    body();
    pop();
  }

  void finish() { pop(); }

 private:
  void push(const YAML::Node& n, const std::string& path) {
    nodes_.push_back(n);
    paths_.push_back(path);
    seen_.emplace_back();
  }
  void pop() {
    const YAML::Node& n = nodes_.back();
    if (n && n.IsMap()) {
      for (const auto& kv : n) {
        const std::string k = kv.first.as<std::string>();
        if (!seen_.back().count(k)) throw ConfigError(join(paths_.back(), k), "unknown key");
      }
    }
    nodes_.pop_back();
    paths_.pop_back();
    seen_.pop_back();
  }

  std::vector<YAML::Node> nodes_;
  std::vector<std::string> paths_;
  std::vector<std::set<std::string>> seen_;
};

class Writer {
 public:
  Writer() {
    out_.SetDoublePrecision(17);
    out_ << YAML::BeginMap;
  }
  template <typename T>
  void field(const char* key, const T& value) {
    out_ << YAML::Key << key << YAML::Value;
    write_value(out_, value);
  }
  void section(const char* key, const std::function<void()>& body) {
    out_ << YAML::Key << key << YAML::Value << YAML::BeginMap;
    body();
    out_ << YAML::EndMap;
  }
  std::string finish() {
    out_ << YAML::EndMap;
    return std::string(out_.c_str()) + "\n";
  }

 private:
  YAML::Emitter out_;
};

// One schema for both directions. `C` is ExperimentConfig, const or not.
template <typename V, typename C>
void visit(V& v, C& c) {
  v.field("name", c.name);
  v.field("seeds", c.seeds);
  v.field("variant", c.variant);
  v.field("tasks", c.tasks);
  v.field("track", c.track);

  auto& q = c.env.quad;
  v.section("quad", [&] {
    v.field("mass", q.mass);
    v.field("inertia", q.inertia);
    v.field("arm_length", q.arm_length);
    v.field("max_total_thrust", q.max_total_thrust);
    v.field("thrust_to_weight", q.thrust_to_weight);
    v.field("motor_time_constant", q.motor_time_constant);
    v.field("torque_coeff", q.torque_coeff);
    v.field("gravity", q.gravity);
    v.field("body_rate_limits", q.body_rate_limits);
    v.field("rate_gains", q.rate_gains);
    v.field("physics_dt", q.physics_dt);
    v.field("control_dt", q.control_dt);
  });

  v.section("env", [&] {
    v.field("one_hot", c.env.one_hot);
    auto& r = c.env.racing;
    v.section("racing", [&] {
      v.field("horizon", r.horizon);
      v.field("start_distance", r.start_distance);
      v.field("start_half_extent", r.start_half_extent);
      v.field("gate_margin", r.gate_margin);
      v.field("drone_radius", r.drone_radius);
      v.field("world_min", r.world_min);
      v.field("world_max", r.world_max);
      v.field("terminate_on_circuit", r.terminate_on_circuit);
      v.section("reward", [&] {
        v.field("progress", r.reward.progress);
        v.field("perception", r.reward.perception);
        v.field("perception_exponent", r.reward.perception_exponent);
        v.field("action", r.reward.action);
        v.field("body_rate", r.reward.body_rate);
        v.field("pass", r.reward.pass);
        v.field("crash", r.reward.crash);
      });
    });
    auto& s = c.env.stabilization;
    v.section("stabilization", [&] {
      v.field("horizon", s.horizon);
      v.field("z_target", s.z_target);
      v.field("position_min", s.position_min);
      v.field("position_max", s.position_max);
      v.field("max_tilt", s.max_tilt);
      v.field("max_body_rate", s.max_body_rate);
      v.field("max_speed_xy", s.max_speed_xy);
      v.field("max_speed_z", s.max_speed_z);
      v.field("clearance_time", s.clearance_time);
      v.field("hover_speed", s.hover_speed);
      v.field("hover_window", s.hover_window);
      v.field("terminate_on_success", s.terminate_on_success);
      v.field("crash_penalty", s.crash_penalty);
      v.field("attitude_error", s.attitude_error);
      v.section("reward", [&] {
        v.field("height", s.reward.height);
        v.field("attitude", s.reward.attitude);
        v.field("velocity", s.reward.velocity);
        v.field("body_rate", s.reward.body_rate);
        v.field("action", s.reward.action);
        v.field("success", s.reward.success);
      });
    });
    auto& t = c.env.tracking;
    v.section("tracking", [&] {
      v.field("horizon", t.horizon);
      v.field("start_position", t.start_position);
      v.field("accel_max", t.accel_max);
      v.field("initial_velocity_fraction", t.initial_velocity_fraction);
      v.section("reward", [&] {
        v.field("velocity", t.reward.velocity);
        v.field("body_rate", t.reward.body_rate);
        v.field("action", t.reward.action);
      });
    });
  });

  auto& cu = c.env.curriculum;
  v.section("curriculum", [&] {
    v.field("enabled", cu.enabled);
    v.field("samples_per_level", cu.samples_per_level);
    v.field("stabilization_initial_scale", cu.stabilization_initial_scale);
    v.field("stabilization_growth", cu.stabilization_growth);
    v.field("stabilization_max_scale", cu.stabilization_max_scale);
    v.field("tracking_initial_bounds", cu.tracking_initial_bounds);
    v.field("tracking_increment", cu.tracking_increment);
    v.field("tracking_max_bounds", cu.tracking_max_bounds);
  });

  auto& n = c.network;
  v.section("network", [&] {
    v.field("encoder_hidden", n.encoder_hidden);
    v.field("encoder_layers", n.encoder_layers);
    v.field("embedding", n.embedding);
    v.field("actor_hidden", n.actor_hidden);
    v.field("actor_layers", n.actor_layers);
    v.field("critic_hidden", n.critic_hidden);
    v.field("critic_layers", n.critic_layers);
    v.field("log_std_init", n.log_std_init);
    v.field("log_std_min", n.log_std_min);
  });

  auto& tr = c.train;
  v.section("train", [&] {
    v.field("gamma", tr.gamma);
    v.field("gae_lambda", tr.gae_lambda);
    v.field("clip_ratio", tr.clip_ratio);
    v.field("learning_rate", tr.learning_rate);
    v.field("epochs", tr.epochs);
    v.field("minibatch_size", tr.minibatch_size);
    v.field("rollout_length", tr.rollout_length);
    v.field("envs_per_task", tr.envs_per_task);
    v.field("total_samples", tr.total_samples);
    v.field("entropy_coeff", tr.entropy_coeff);
    v.field("value_coeff", tr.value_coeff);
    v.field("max_grad_norm", tr.max_grad_norm);
    v.field("adam_epsilon", tr.adam_epsilon);
    v.field("normalize_observations", tr.normalize_observations);
    v.field("normalize_rewards", tr.normalize_rewards);
    v.field("threads", tr.threads);
  });

  auto& e = c.eval;
  v.section("eval", [&] {
    v.field("every_iterations", e.every_iterations);
    v.field("racing_starts", e.racing_starts);
    v.field("stabilization_trials", e.stabilization_trials);
    v.field("tracking_trials", e.tracking_trials);
    v.field("difficulty", e.difficulty);
    v.field("trajectories", e.trajectories);
    v.field("seed", e.seed);
    v.field("threads", e.threads);
  });

  v.section("output", [&] {
    v.field("dir", c.output.dir);
    v.field("checkpoint_every", c.output.checkpoint_every);
  });
}

void validate(const ExperimentConfig& c) {
  if (c.seeds.empty()) throw ConfigError("seeds", "at least one seed is required");
  if (c.tasks.empty()) throw ConfigError("tasks", "at least one task is required");
  try {
    c.env.quad.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("quad", e.what());
  }
  try {
    c.train.validate();
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    const auto colon = msg.find(':');
    throw ConfigError(msg.substr(0, colon), colon == std::string::npos ? msg : msg.substr(colon + 2));
  }
  auto positive = [](int v, const char* field) {
    if (v < 1) throw ConfigError(field, "must be at least 1");
  };
  positive(c.network.encoder_hidden, "network.encoder_hidden");
  positive(c.network.encoder_layers, "network.encoder_layers");
  positive(c.network.embedding, "network.embedding");
  positive(c.network.actor_hidden, "network.actor_hidden");
  positive(c.network.actor_layers, "network.actor_layers");
  positive(c.network.critic_hidden, "network.critic_hidden");
  positive(c.network.critic_layers, "network.critic_layers");
  if (c.network.log_std_init < c.network.log_std_min)
    throw ConfigError("network.log_std_init", "must not be below log_std_min");
  positive(c.eval.racing_starts, "eval.racing_starts");
  positive(c.eval.stabilization_trials, "eval.stabilization_trials");
  positive(c.eval.tracking_trials, "eval.tracking_trials");
  positive(c.eval.threads, "eval.threads");
  if (c.eval.every_iterations < 0) throw ConfigError("eval.every_iterations", "must be non-negative");
  if (c.eval.trajectories < 0) throw ConfigError("eval.trajectories", "must be non-negative");
  if (c.output.checkpoint_every < 0) throw ConfigError("output.checkpoint_every", "must be non-negative");
  if (c.output.dir.empty()) throw ConfigError("output.dir", "must not be empty");
  for (const auto& [name, h] : {std::pair{"env.racing.horizon", c.env.racing.horizon},
                                {"env.stabilization.horizon", c.env.stabilization.horizon},
                                {"env.tracking.horizon", c.env.tracking.horizon}})
    if (!(h > 0.0)) throw ConfigError(name, "must be positive");
  if (c.env.curriculum.stabilization_initial_scale <= 0.0)
    throw ConfigError("curriculum.stabilization_initial_scale", "must be positive");
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError("<file>", std::string("YAML syntax error: ") + e.what());
  }
  if (!root.IsMap()) throw ConfigError("<file>", "expected a mapping at the top level");
  if (!root["schema"]) throw ConfigError("schema", "missing");
  int schema = 0;
  read_value(root["schema"], schema, "schema");
  if (schema != kConfigSchema)
    throw ConfigError("schema", "unsupported version " + std::to_string(schema));

  ExperimentConfig c;
  Reader r(root);
  int ignored = 0;
  r.field("schema", ignored);
  visit(r, c);
  r.finish();
  c.network.one_hot = c.env.one_hot;
  validate(c);
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("<file>", "cannot read " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  ExperimentConfig c = parse_experiment_config(ss.str());
  // track files are resolved next to the config
  if (c.track != "figure8" && std::filesystem::path(c.track).is_relative()) {
    const auto base = std::filesystem::path(path).parent_path();
    c.track = (base / c.track).lexically_normal().string();
  }
  return c;
}

std::string experiment_config_to_yaml(const ExperimentConfig& cfg) {
  Writer w;
  w.field("schema", kConfigSchema);
  visit(w, cfg);
  return w.finish();
}

Track resolve_track(const std::string& track, const std::string& base_dir) {
  if (track == "figure8") return default_figure8_track();
  std::filesystem::path p(track);
  if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
  try {
    return load_track(p.string());
  } catch (const std::exception& e) {
    throw ConfigError("track", e.what());
  }
}

}  // namespace mtquad
