/*
 * Copyright 2026 The rbag Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "rbag/optimize.hpp"

#include <algorithm>
#include <cmath>

namespace rbag {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw Error("TrainConfig: learning_rate must be > 0");
  }
  if (!(alpha >= 0.0 && alpha < 1.0)) throw Error("TrainConfig: alpha must lie in [0, 1)");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw Error("TrainConfig: Adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw Error("TrainConfig: adam_eps must be > 0");
}

double smooth_target(Label label, double alpha) {
  const double y = label == Label::kPositive ? 1.0 : 0.0;
  return y * (1.0 - alpha) + alpha / 2.0;
}

double bce_loss(double score, double target) {
  const double s = std::clamp(score, kScoreClamp, 1.0 - kScoreClamp);
  return -(target * std::log(s) + (1.0 - target) * std::log(1.0 - s));
}

LossGradient loss_and_gradient(const SiameseTopology& topology, std::span<const double> weights,
                               const PairBatch& batch, const TrainConfig& config,
                               bool head_only) {
  if (batch.size == 0) throw Error("gradient: batch is empty");
  ForwardCache cache;
  forward_batch(topology, weights, batch, cache);
  const double inv_n = 1.0 / static_cast<double>(batch.size);
  std::vector<double> dlogits(batch.size);
  LossGradient out;
  for (std::size_t b = 0; b < batch.size; ++b) {
    const double s = sigmoid(cache.logits[b]);
    const double t = smooth_target(batch.labels[b], config.alpha);
    const double l = bce_loss(s, t);
    if (!std::isfinite(cache.logits[b]) || !std::isfinite(l)) {
      throw Error("gradient: non-finite logit or loss at batch row " + std::to_string(b));
    }
    out.loss += l;
    // d/dz of the clamped loss: s - t inside the clamp, flat outside.
    const bool clamped = s <= kScoreClamp || s >= 1.0 - kScoreClamp;
    dlogits[b] = clamped ? 0.0 : (s - t) * inv_n;
  }
  out.loss *= inv_n;
  out.gradient.assign(weights.size(), 0.0);
  backward_batch(topology, weights, batch, cache, dlogits, out.gradient, head_only);
  for (std::size_t i = 0; i < out.gradient.size(); ++i) {
    if (!std::isfinite(out.gradient[i])) {
      throw Error("gradient: non-finite component " + std::to_string(i));
    }
  }
  return out;
}

std::vector<double> gradient(const SiameseTopology& topology, std::span<const double> weights,
                             const PairBatch& batch, const TrainConfig& config) {
  return loss_and_gradient(topology, weights, batch, config).gradient;
}

void adam_step(std::span<double> weights, std::span<const double> grad, AdamState& state,
               const TrainConfig& config) {
  const std::size_t n = weights.size();
  if (grad.size() != n || state.m.size() != n || state.v.size() != n) {
    throw Error("adam_step: weights, gradient and state lengths differ");
  }
  ++state.t;
  const double b1 = config.adam_beta1;
  const double b2 = config.adam_beta2;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(b1, t);
  const double c2 = 1.0 - std::pow(b2, t);
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad[i];
    state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
    state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    weights[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.adam_eps);
  }
}

}  // namespace rbag
