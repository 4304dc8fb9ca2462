#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "mtquad/nets.hpp"

namespace testing {

/// Largest relative error between analytic and central-difference gradients
/// over every entry of the parameter tensors selected by `group`
/// (-1 selects all groups).
inline double max_gradient_error(mtquad::PolicyParams& params,
                                 const std::function<double(const mtquad::PolicyParams&)>& loss,
                                 const std::function<void(const mtquad::PolicyParams&, mtquad::PolicyGrads&)>& grad_fn,
                                 int group = -1, double h = 1e-5, std::size_t* checked = nullptr) {
  mtquad::PolicyGrads grads = mtquad::PolicyGrads::zeros_like(params);
  grad_fn(params, grads);
  double worst = 0.0;
  std::size_t n = 0;
  for (const mtquad::ParamRef& ref : mtquad::param_refs(params, grads)) {
    if (group >= 0 && ref.group != group) continue;
    for (std::size_t i = 0; i < ref.size; ++i) {
      const double orig = ref.value[i];
      ref.value[i] = orig + h;
      const double lp = loss(params);
      ref.value[i] = orig - h;
      const double lm = loss(params);
      ref.value[i] = orig;
      const double numeric = (lp - lm) / (2.0 * h);
      const double analytic = ref.grad[i];
      const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
      worst = std::max(worst, std::abs(numeric - analytic) / scale);
      ++n;
    }
  }
  if (checked) *checked = n;
  return worst;
}

/// Zero-initialized biases can park a ReLU exactly on its kink when every
/// unit feeding it is off; small offsets keep finite differences meaningful.
inline void jitter_biases(mtquad::PolicyParams& p, mtquad::Rng& rng, double scale = 0.1) {
  auto jitter = [&](std::vector<mtquad::Mlp>& nets) {
    for (auto& net : nets)
      for (auto& b : net.biases)
        for (Eigen::Index i = 0; i < b.size(); ++i) b[i] += rng.uniform(-scale, scale);
  };
  jitter(p.dynamics_encoders);
  jitter(p.task_encoders);
  jitter(p.actors);
  jitter(p.critics);
}

/// Widths small enough for exhaustive finite differences.
inline mtquad::NetConfig tiny_net_config() {
  mtquad::NetConfig c;
  c.encoder_hidden = 5;
  c.embedding = 3;
  c.actor_hidden = 6;
  c.critic_hidden = 5;
  return c;
}

}  // namespace testing
