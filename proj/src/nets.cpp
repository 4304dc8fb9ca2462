#include "mtquad/nets.hpp"

#include <algorithm>
#include <fstream>
#include <numbers>

namespace mtquad {

namespace {

void apply_activation(Eigen::MatrixXd& z, Activation a) {
  switch (a) {
    case Activation::Identity: break;
    case Activation::ReLU: z = z.cwiseMax(0.0); break;
    case Activation::Tanh: z = z.array().tanh().matrix(); break;
  }
}

// dL/dz from dL/dy using the post-activation y.
void activation_backward(Eigen::MatrixXd& d, const Eigen::MatrixXd& y, Activation a) {
  switch (a) {
    case Activation::Identity: break;
    case Activation::ReLU: d = (y.array() > 0.0).select(d, 0.0); break;
    case Activation::Tanh: d = (d.array() * (1.0 - y.array().square())).matrix(); break;
  }
}

Activation layer_activation(const MlpSpec& s, int layer) {
  return layer + 1 == s.layers() ? s.output : s.hidden;
}

void check_spec(const MlpSpec& s) {
  if (s.widths.size() < 2) throw NetworkError("MlpSpec needs at least one layer");
  for (int w : s.widths)
    if (w <= 0) throw NetworkError("MlpSpec widths must be positive");
}

MlpSpec spec_of(int in, int hidden, int hidden_layers, int out, Activation output) {
  MlpSpec s;
  s.widths.push_back(in);
  for (int i = 0; i < hidden_layers; ++i) s.widths.push_back(hidden);
  s.widths.push_back(out);
  s.output = output;
  return s;
}

}  // namespace

Mlp Mlp::zeros(const MlpSpec& spec) {
  check_spec(spec);
  Mlp m;
  m.spec = spec;
  for (int l = 0; l < spec.layers(); ++l) {
    m.weights.push_back(Eigen::MatrixXd::Zero(spec.widths[l + 1], spec.widths[l]));
    m.biases.push_back(Eigen::VectorXd::Zero(spec.widths[l + 1]));
  }
  return m;
}

Mlp Mlp::orthogonal(const MlpSpec& spec, Rng& rng, double hidden_gain, double output_gain) {
  Mlp m = zeros(spec);
  for (int l = 0; l < spec.layers(); ++l) {
    const int rows = spec.widths[l + 1], cols = spec.widths[l];
    const int big = std::max(rows, cols), small = std::min(rows, cols);
    Eigen::MatrixXd a(big, small);
    for (int j = 0; j < small; ++j)
      for (int i = 0; i < big; ++i) a(i, j) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(big, small);
    const Eigen::MatrixXd r = qr.matrixQR().topRows(small).triangularView<Eigen::Upper>();
    for (int j = 0; j < small; ++j)
      if (r(j, j) < 0.0) q.col(j) *= -1.0;
    const double gain = l + 1 == spec.layers() ? output_gain : hidden_gain;
    m.weights[l] = gain * (rows >= cols ? q : Eigen::MatrixXd(q.transpose()));
  }
  return m;
}

std::size_t Mlp::num_params() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l)
    n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
  return n;
}

MlpGrad MlpGrad::zeros_like(const Mlp& net) {
  MlpGrad g;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    g.weights.push_back(Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
    g.biases.push_back(Eigen::VectorXd::Zero(net.biases[l].size()));
  }
  return g;
}

void MlpGrad::set_zero() {
  for (auto& w : weights) w.setZero();
  for (auto& b : biases) b.setZero();
}

Eigen::MatrixXd mlp_forward(const Mlp& net, const Eigen::MatrixXd& x, MlpTape* tape) {
  if (x.rows() != net.spec.inputs()) {
    throw NetworkError("mlp_forward: input width " + std::to_string(x.rows()) + ", expected " +
                       std::to_string(net.spec.inputs()));
  }
  if (tape) {
    tape->input = x;
    tape->outputs.clear();
  }
  Eigen::MatrixXd h = x;
  for (int l = 0; l < net.spec.layers(); ++l) {
    Eigen::MatrixXd z = net.weights[l] * h;
    z.colwise() += net.biases[l];
    apply_activation(z, layer_activation(net.spec, l));
    if (tape) tape->outputs.push_back(z);
    h = std::move(z);
  }
  return h;
}

Eigen::VectorXd mlp_forward(const Mlp& net, const Eigen::VectorXd& x) {
  return mlp_forward(net, Eigen::MatrixXd(x)).col(0);
}

Eigen::MatrixXd mlp_backward(const Mlp& net, const MlpTape& tape, const Eigen::MatrixXd& d_out,
                             MlpGrad& grad) {
  Eigen::MatrixXd d = d_out;
  for (int l = net.spec.layers() - 1; l >= 0; --l) {
    activation_backward(d, tape.outputs[l], layer_activation(net.spec, l));
    const Eigen::MatrixXd& in = l == 0 ? tape.input : tape.outputs[l - 1];
    grad.weights[l].noalias() += d * in.transpose();
    grad.biases[l].noalias() += d.rowwise().sum();
    d = net.weights[l].transpose() * d;
  }
  return d;
}

// ---------------------------------------------------------------------------

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::Ours: return "ours";
    case Variant::ActorOnly: return "actor_only";
    case Variant::Separate: return "separate";
    case Variant::SingleTask: return "single_task";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  for (Variant v : {Variant::Ours, Variant::ActorOnly, Variant::Separate, Variant::SingleTask})
    if (variant_name(v) == name) return v;
  throw std::invalid_argument("unknown variant '" + std::string(name) + "'");
}

PolicyParams PolicyParams::create(Variant variant, std::vector<TaskId> tasks, const NetConfig& net,
                                  Rng& rng) {
  if (tasks.empty()) throw NetworkError("PolicyParams: no tasks");
  for (std::size_t i = 0; i < tasks.size(); ++i)
    for (std::size_t j = i + 1; j < tasks.size(); ++j)
      if (tasks[i] == tasks[j]) throw NetworkError("PolicyParams: duplicate task");

  PolicyParams p;
  p.variant = variant;
  p.net = net;
  p.tasks = std::move(tasks);
  const std::size_t n = p.tasks.size();
  const double g = std::numbers::sqrt2;

  const bool shared_dyn = variant == Variant::Ours || variant == Variant::Separate;
  const bool shared_actor = variant != Variant::SingleTask;

  const std::size_t n_dyn = shared_dyn ? 1 : n;
  for (std::size_t i = 0; i < n_dyn; ++i) {
    p.dynamics_encoders.push_back(Mlp::orthogonal(
        spec_of(kSharedObsDim, net.encoder_hidden, net.encoder_layers, net.embedding,
                Activation::Identity),
        rng, g, 1.0));
  }
  for (TaskId t : p.tasks) {
    p.task_encoders.push_back(Mlp::orthogonal(
        spec_of(p.task_encoder_inputs(t), net.encoder_hidden, net.encoder_layers, net.embedding,
                Activation::Identity),
        rng, g, 1.0));
  }
  const std::size_t n_actor = shared_actor ? 1 : n;
  for (std::size_t i = 0; i < n_actor; ++i) {
    p.actors.push_back(Mlp::orthogonal(
        spec_of(net.actor_input(), net.actor_hidden, net.actor_layers, 4, Activation::Tanh), rng,
        g, 0.01));
    p.log_std.push_back(Vec4::Constant(net.log_std_init));
  }
  for (TaskId t : p.tasks) {
    const int in = kSharedObsDim + task_obs_dim(t, net.one_hot);
    p.critics.push_back(Mlp::orthogonal(
        spec_of(in, net.critic_hidden, net.critic_layers, 1, Activation::Identity), rng, g, 1.0));
  }
  return p;
}

bool PolicyParams::has_task(TaskId t) const {
  return std::find(tasks.begin(), tasks.end(), t) != tasks.end();
}

Route PolicyParams::route(TaskId t) const {
  const auto it = std::find(tasks.begin(), tasks.end(), t);
  if (it == tasks.end()) {
    throw NetworkError("policy has no networks for task " + std::string(task_name(t)));
  }
  const int i = static_cast<int>(it - tasks.begin());
  Route r;
  r.dynamics_encoder = dynamics_encoders.size() == 1 ? 0 : i;
  r.task_encoder = i;
  r.actor = actors.size() == 1 ? 0 : i;
  r.critic = i;
  return r;
}

int PolicyParams::task_encoder_inputs(TaskId t) const {
  return task_obs_dim(t, net.one_hot) + (fuses_shared() ? kSharedObsDim : 0);
}

std::size_t PolicyParams::num_params() const {
  std::size_t n = 4 * log_std.size();
  for (const auto* group : {&dynamics_encoders, &task_encoders, &actors, &critics})
    for (const Mlp& m : *group) n += m.num_params();
  return n;
}

PolicyGrads PolicyGrads::zeros_like(const PolicyParams& p) {
  PolicyGrads g;
  for (const Mlp& m : p.dynamics_encoders) g.dynamics_encoders.push_back(MlpGrad::zeros_like(m));
  for (const Mlp& m : p.task_encoders) g.task_encoders.push_back(MlpGrad::zeros_like(m));
  for (const Mlp& m : p.actors) g.actors.push_back(MlpGrad::zeros_like(m));
  g.log_std.assign(p.log_std.size(), Vec4::Zero());
  for (const Mlp& m : p.critics) g.critics.push_back(MlpGrad::zeros_like(m));
  return g;
}

void PolicyGrads::set_zero() {
  for (auto* group : {&dynamics_encoders, &task_encoders, &actors, &critics})
    for (MlpGrad& m : *group) m.set_zero();
  for (Vec4& v : log_std) v.setZero();
}

std::vector<ParamRef> param_refs(PolicyParams& p, PolicyGrads& g) {
  std::vector<ParamRef> refs;
  auto add_mlp = [&refs](Mlp& m, MlpGrad& mg, int group) {
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
      refs.push_back({m.weights[l].data(), mg.weights[l].data(),
                      static_cast<std::size_t>(m.weights[l].size()), group});
      refs.push_back({m.biases[l].data(), mg.biases[l].data(),
                      static_cast<std::size_t>(m.biases[l].size()), group});
    }
  };
  const bool independent = p.variant == Variant::SingleTask;
  auto policy_group = [independent](std::size_t i) { return independent ? static_cast<int>(i) : 0; };
  const int first_critic = independent ? static_cast<int>(p.tasks.size()) : 1;
  for (std::size_t i = 0; i < p.dynamics_encoders.size(); ++i)
    add_mlp(p.dynamics_encoders[i], g.dynamics_encoders[i], policy_group(i));
  for (std::size_t i = 0; i < p.task_encoders.size(); ++i)
    add_mlp(p.task_encoders[i], g.task_encoders[i], policy_group(i));
  for (std::size_t i = 0; i < p.actors.size(); ++i) {
    add_mlp(p.actors[i], g.actors[i], policy_group(i));
    refs.push_back({p.log_std[i].data(), g.log_std[i].data(), 4, policy_group(i)});
  }
  for (std::size_t i = 0; i < p.critics.size(); ++i)
    add_mlp(p.critics[i], g.critics[i], first_critic + static_cast<int>(i));
  return refs;
}

int num_param_groups(const PolicyParams& p) {
  const int n = static_cast<int>(p.tasks.size());
  return p.variant == Variant::SingleTask ? 2 * n : 1 + n;
}

Eigen::MatrixXd encode_batch(const PolicyParams& p, TaskId task, const Eigen::MatrixXd& shared,
                             const Eigen::MatrixXd& task_obs, PolicyTape* tape) {
  const Route r = p.route(task);
  if (shared.rows() != kSharedObsDim) throw NetworkError("encode: shared observation must be 19 wide");
  if (task_obs.rows() != task_obs_dim(task, p.net.one_hot) || task_obs.cols() != shared.cols()) {
    throw NetworkError("encode: task observation has the wrong shape for " +
                       std::string(task_name(task)));
  }
  const Eigen::MatrixXd e_dyn =
      mlp_forward(p.dynamics_encoders[r.dynamics_encoder], shared, tape ? &tape->dynamics : nullptr);
  Eigen::MatrixXd e_task;
  if (p.fuses_shared()) {
    Eigen::MatrixXd fused(kSharedObsDim + task_obs.rows(), shared.cols());
    fused << shared, task_obs;
    e_task = mlp_forward(p.task_encoders[r.task_encoder], fused, tape ? &tape->task : nullptr);
  } else {
    e_task = mlp_forward(p.task_encoders[r.task_encoder], task_obs, tape ? &tape->task : nullptr);
  }
  Eigen::MatrixXd out(e_dyn.rows() + e_task.rows(), shared.cols());
  out << e_dyn, e_task;
  return out;
}

Eigen::MatrixXd actor_mean_batch(const PolicyParams& p, TaskId task,
                                 const Eigen::MatrixXd& actor_input, PolicyTape* tape) {
  const Route r = p.route(task);
  return mlp_forward(p.actors[r.actor], actor_input, tape ? &tape->actor : nullptr);
}

void policy_backward(const PolicyParams& p, TaskId task, const PolicyTape& tape,
                     const Eigen::MatrixXd& d_mean, const Vec4& d_log_std, PolicyGrads& grads) {
  const Route r = p.route(task);
  grads.log_std[r.actor] += d_log_std;
  const Eigen::MatrixXd d_in =
      mlp_backward(p.actors[r.actor], tape.actor, d_mean, grads.actors[r.actor]);
  const int e = p.net.embedding;
  mlp_backward(p.dynamics_encoders[r.dynamics_encoder], tape.dynamics, d_in.topRows(e),
               grads.dynamics_encoders[r.dynamics_encoder]);
  mlp_backward(p.task_encoders[r.task_encoder], tape.task, d_in.bottomRows(d_in.rows() - e),
               grads.task_encoders[r.task_encoder]);
}

Eigen::RowVectorXd critic_batch(const PolicyParams& p, TaskId task, const Eigen::MatrixXd& full_obs,
                                MlpTape* tape) {
  const Route r = p.route(task);
  return mlp_forward(p.critics[r.critic], full_obs, tape).row(0);
}

void critic_backward(const PolicyParams& p, TaskId task, const MlpTape& tape,
                     const Eigen::RowVectorXd& d_value, PolicyGrads& grads) {
  const Route r = p.route(task);
  mlp_backward(p.critics[r.critic], tape, Eigen::MatrixXd(d_value), grads.critics[r.critic]);
}

Eigen::VectorXd encode(const PolicyParams& p, const Observation& obs) {
  return encode_batch(p, obs.task, Eigen::MatrixXd(obs.shared), Eigen::MatrixXd(obs.task_specific))
      .col(0);
}

ActorOutput actor_forward(const PolicyParams& p, TaskId task, const Eigen::VectorXd& actor_input) {
  if (actor_input.size() != p.net.actor_input()) throw NetworkError("actor_forward: bad input width");
  ActorOutput out;
  out.mean = actor_mean_batch(p, task, Eigen::MatrixXd(actor_input)).col(0);
  out.log_std = p.log_std[p.route(task).actor];
  return out;
}

double critic_forward(const PolicyParams& p, const Observation& obs) {
  return critic_batch(p, obs.task, Eigen::MatrixXd(obs.full()))(0);
}

// ---------------------------------------------------------------------------

double gaussian_log_prob(const Vec4& x, const Vec4& mean, const Vec4& log_std) {
  const double log_2pi = std::log(2.0 * std::numbers::pi);
  double lp = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double z = (x[i] - mean[i]) * std::exp(-log_std[i]);
    lp += -0.5 * z * z - log_std[i] - 0.5 * log_2pi;
  }
  return lp;
}

double gaussian_entropy(const Vec4& log_std) {
  return log_std.sum() + 2.0 * (1.0 + std::log(2.0 * std::numbers::pi));
}

SampledAction sample_action(Rng& rng, const Vec4& mean, const Vec4& log_std) {
  SampledAction a;
  for (int i = 0; i < 4; ++i) a.raw[i] = mean[i] + std::exp(log_std[i]) * rng.normal();
  a.clipped = a.raw.cwiseMax(-1.0).cwiseMin(1.0);
  a.log_prob = gaussian_log_prob(a.raw, mean, log_std);
  return a;
}

// ---------------------------------------------------------------------------

void RunningMeanStd::update(const Eigen::MatrixXd& batch) {
  if (batch.cols() == 0) return;
  const double n = static_cast<double>(batch.cols());
  const Eigen::VectorXd b_mean = batch.rowwise().mean();
  const Eigen::VectorXd b_var =
      (batch.colwise() - b_mean).array().square().rowwise().sum().matrix() / n;
  const double total = count + n;
  const Eigen::VectorXd delta = b_mean - mean;
  mean += delta * (n / total);
  const Eigen::VectorXd m2 =
      var * count + b_var * n + delta.array().square().matrix() * (count * n / total);
  var = m2 / total;
  count = total;
}

void RunningMeanStd::save(BinaryWriter& out) const {
  out.write(mean);
  out.write(var);
  out.write(count);
}

void RunningMeanStd::load(BinaryReader& in) {
  mean = in.read_vector();
  var = in.read_vector();
  count = in.read<double>();
}

ObsNormalizer::ObsNormalizer(const std::vector<TaskId>& tasks, bool one_hot, bool enabled)
    : enabled_(enabled), one_hot_(one_hot) {
  for (TaskId t : tasks) task_[static_cast<int>(t)] = RunningMeanStd(task_obs_dim(t, false));
}

void ObsNormalizer::update(TaskId task, const Eigen::MatrixXd& shared, const Eigen::MatrixXd& task_obs) {
  if (!enabled_) return;
  shared_.update(shared);
  RunningMeanStd& ts = task_[static_cast<int>(task)];
  ts.update(task_obs.topRows(ts.mean.size()));
}

void ObsNormalizer::normalize(TaskId task, Eigen::MatrixXd& shared, Eigen::MatrixXd& task_obs) const {
  if (!enabled_) return;
  auto apply = [](const RunningMeanStd& s, auto&& block) {
    const Eigen::ArrayXd inv = (s.var.array() + 1e-8).rsqrt();
    block = ((block.colwise() - s.mean).array().colwise() * inv).cwiseMax(-kClip).cwiseMin(kClip).matrix();
  };
  apply(shared_, shared);
  const RunningMeanStd& ts = task_[static_cast<int>(task)];
  if (ts.mean.size() > task_obs.rows()) throw NetworkError("ObsNormalizer: task not registered");
  auto head = task_obs.topRows(ts.mean.size());
  apply(ts, head);
}

Observation ObsNormalizer::normalize(const Observation& obs) const {
  Eigen::MatrixXd s = obs.shared, t = obs.task_specific;
  normalize(obs.task, s, t);
  Observation out;
  out.task = obs.task;
  out.shared = s.col(0);
  out.task_specific = t.col(0);
  return out;
}

void ObsNormalizer::save(BinaryWriter& out) const {
  out.tag("obs_norm");
  out.write<std::uint8_t>(enabled_ ? 1 : 0);
  out.write<std::uint8_t>(one_hot_ ? 1 : 0);
  shared_.save(out);
  for (const RunningMeanStd& t : task_) t.save(out);
}

void ObsNormalizer::load(BinaryReader& in) {
  in.expect("obs_norm");
  enabled_ = in.read<std::uint8_t>() != 0;
  one_hot_ = in.read<std::uint8_t>() != 0;
  shared_.load(in);
  for (RunningMeanStd& t : task_) t.load(in);
}

// ---------------------------------------------------------------------------

namespace {

void save_mlp(BinaryWriter& out, const Mlp& m) {
  out.write<std::uint32_t>(static_cast<std::uint32_t>(m.spec.widths.size()));
  for (int w : m.spec.widths) out.write<std::int32_t>(w);
  out.write(static_cast<std::int32_t>(m.spec.hidden));
  out.write(static_cast<std::int32_t>(m.spec.output));
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    out.write(m.weights[l]);
    out.write(m.biases[l]);
  }
}

Mlp load_mlp(BinaryReader& in) {
  MlpSpec s;
  const auto n = in.read<std::uint32_t>();
  if (n < 2 || n > 64) throw FormatError("corrupt network depth");
  for (std::uint32_t i = 0; i < n; ++i) s.widths.push_back(in.read<std::int32_t>());
  s.hidden = static_cast<Activation>(in.read<std::int32_t>());
  s.output = static_cast<Activation>(in.read<std::int32_t>());
  Mlp m = Mlp::zeros(s);
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    const Eigen::MatrixXd w = in.read_matrix();
    const Eigen::VectorXd b = in.read_vector();
    if (w.rows() != m.weights[l].rows() || w.cols() != m.weights[l].cols() ||
        b.size() != m.biases[l].size())
      throw FormatError("network tensor shape mismatch");
    m.weights[l] = w;
    m.biases[l] = b;
  }
  return m;
}

void save_mlps(BinaryWriter& out, const std::vector<Mlp>& v) {
  out.write<std::uint32_t>(static_cast<std::uint32_t>(v.size()));
  for (const Mlp& m : v) save_mlp(out, m);
}

std::vector<Mlp> load_mlps(BinaryReader& in) {
  const auto n = in.read<std::uint32_t>();
  if (n > 64) throw FormatError("corrupt network count");
  std::vector<Mlp> v;
  for (std::uint32_t i = 0; i < n; ++i) v.push_back(load_mlp(in));
  return v;
}

constexpr char kMagic[] = "MTQUADPOLICY";

}  // namespace

void save_policy(BinaryWriter& out, const PolicyParams& p) {
  out.tag("policy");
  out.write(static_cast<std::int32_t>(p.variant));
  const NetConfig& n = p.net;
  for (int v : {n.encoder_hidden, n.encoder_layers, n.embedding, n.actor_hidden, n.actor_layers,
                n.critic_hidden, n.critic_layers})
    out.write<std::int32_t>(v);
  out.write(n.log_std_init);
  out.write(n.log_std_min);
  out.write<std::uint8_t>(n.one_hot ? 1 : 0);
  out.write<std::uint32_t>(static_cast<std::uint32_t>(p.tasks.size()));
  for (TaskId t : p.tasks) out.write(static_cast<std::int32_t>(t));
  save_mlps(out, p.dynamics_encoders);
  save_mlps(out, p.task_encoders);
  save_mlps(out, p.actors);
  out.write<std::uint32_t>(static_cast<std::uint32_t>(p.log_std.size()));
  for (const Vec4& v : p.log_std) out.write(v);
  save_mlps(out, p.critics);
}

PolicyParams load_policy(BinaryReader& in) {
  in.expect("policy");
  PolicyParams p;
  p.variant = static_cast<Variant>(in.read<std::int32_t>());
  NetConfig& n = p.net;
  for (int* v : {&n.encoder_hidden, &n.encoder_layers, &n.embedding, &n.actor_hidden,
                 &n.actor_layers, &n.critic_hidden, &n.critic_layers})
    *v = in.read<std::int32_t>();
  n.log_std_init = in.read<double>();
  n.log_std_min = in.read<double>();
  n.one_hot = in.read<std::uint8_t>() != 0;
  const auto nt = in.read<std::uint32_t>();
  if (nt == 0 || nt > kNumTasks) throw FormatError("corrupt task list");
  for (std::uint32_t i = 0; i < nt; ++i) {
    const auto t = in.read<std::int32_t>();
    if (t < 0 || t >= kNumTasks) throw FormatError("corrupt task id");
    p.tasks.push_back(static_cast<TaskId>(t));
  }
  p.dynamics_encoders = load_mlps(in);
  p.task_encoders = load_mlps(in);
  p.actors = load_mlps(in);
  const auto ns = in.read<std::uint32_t>();
  if (ns != p.actors.size()) throw FormatError("log-std count does not match actors");
  for (std::uint32_t i = 0; i < ns; ++i) p.log_std.push_back(in.read_fixed<Vec4>());
  p.critics = load_mlps(in);
  if (p.task_encoders.size() != p.tasks.size() || p.critics.size() != p.tasks.size())
    throw FormatError("per-task network count mismatch");
  return p;
}

void save_checkpoint(const std::string& path, const PolicyParams& p, const ObsNormalizer& norm) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write checkpoint " + path);
  BinaryWriter out(os);
  out.write(std::string(kMagic));
  out.write(kCheckpointVersion);
  save_policy(out, p);
  norm.save(out);
}

void load_checkpoint(const std::string& path, PolicyParams& p, ObsNormalizer& norm) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read checkpoint " + path);
  BinaryReader in(is);
  if (in.read_string() != kMagic) throw FormatError("not a policy checkpoint: " + path);
  const auto version = in.read<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  p = load_policy(in);
  norm.load(in);
}

}  // namespace mtquad
