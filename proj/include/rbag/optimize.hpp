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

#ifndef RBAG_OPTIMIZE_HPP_
#define RBAG_OPTIMIZE_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rbag/network.hpp"

namespace rbag {

struct TrainConfig {
  double learning_rate = 0.001;
  std::size_t iterations = 100;
  double alpha = 0.1;        // label smoothing weight
  double temperature = 0.0;  // kept for config fidelity; no scaling is applied
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Two-class smoothing on a single sigmoid output: y (1 - alpha) + alpha / 2.
double smooth_target(Label label, double alpha);

inline constexpr double kScoreClamp = 1e-12;

// Binary cross-entropy with the score clamped to [1e-12, 1 - 1e-12].
double bce_loss(double score, double target);

struct LossGradient {
  double loss = 0.0;  // batch mean
  std::vector<double> gradient;
};

// Mean smoothed loss over `batch` and its gradient w.r.t. every parameter.
// With `head_only` the extractor components are zero.
LossGradient loss_and_gradient(const SiameseTopology& topology, std::span<const double> weights,
                               const PairBatch& batch, const TrainConfig& config,
                               bool head_only = false);

std::vector<double> gradient(const SiameseTopology& topology, std::span<const double> weights,
                             const PairBatch& batch, const TrainConfig& config);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;

  AdamState() = default;
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

// One bias-corrected Adam update of `weights` in place.
void adam_step(std::span<double> weights, std::span<const double> grad, AdamState& state,
               const TrainConfig& config);

}  // namespace rbag

#endif  // RBAG_OPTIMIZE_HPP_
