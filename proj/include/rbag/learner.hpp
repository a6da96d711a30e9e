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

#ifndef RBAG_LEARNER_HPP_
#define RBAG_LEARNER_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rbag/data.hpp"
#include "rbag/network.hpp"
#include "rbag/optimize.hpp"

namespace rbag {

enum class InitMode : std::uint8_t { kScratch = 0, kTransfer = 1 };

std::string to_string(InitMode mode);
InitMode init_mode_from_string(const std::string& text);

// A trainable pair classifier. In transfer mode the extractor prefix of
// `weights` is frozen.
struct BaseModel {
  SiameseTopology topology;
  std::vector<double> weights;
  InitMode init_mode = InitMode::kScratch;
  std::uint64_t seed = 0;
  bool trained = false;

  void validate() const;
  friend bool operator==(const BaseModel&, const BaseModel&) = default;
};

// Extractor weights learned on an auxiliary source task, then frozen.
struct PretrainedExtractor {
  SiameseTopology topology;
  std::vector<double> weights;  // extractor prefix only
  std::uint64_t source_seed = 0;

  // FNV-1a over the raw bytes of `weights`.
  std::uint64_t digest() const;
  friend bool operator==(const PretrainedExtractor&, const PretrainedExtractor&) = default;
};

// Weights ~ U(-a, a) with a = sqrt(6 / fan_in) (std sqrt(2 / fan_in));
// biases start at zero.
BaseModel init_scratch(const SiameseTopology& topology, std::uint64_t seed);

// Extractor copied from `pretrained`, head initialized as in init_scratch.
BaseModel init_transfer(const PretrainedExtractor& pretrained, std::uint64_t seed);

// Trains a scratch model on every sample of `source` for `budget` full-batch
// Adam steps and keeps its extractor.
PretrainedExtractor pretrain_extractor(const PairDataset& source,
                                       const SiameseTopology& topology, std::size_t budget,
                                       std::uint64_t seed, const TrainConfig& config = {});

// Extractor output for one observation.
std::vector<double> extract(const BaseModel& model, std::span<const float> x);
double logit(const BaseModel& model, std::span<const float> pre, std::span<const float> post);
// sigmoid(logit), in (0, 1).
double forward(const BaseModel& model, std::span<const float> pre, std::span<const float> post);

// Scores for every sample of `dataset`, in index order.
std::vector<double> score_dataset(const BaseModel& model, const PairDataset& dataset);

struct FineTuneResult {
  BaseModel model;
  std::vector<double> loss_trace;  // loss before each step
};

// `config.iterations` full-batch Adam steps on the smoothed loss over the
// samples `indices`. Transfer models only update their head.
FineTuneResult fine_tune(const BaseModel& model, std::span<const std::size_t> indices,
                         const PairDataset& dataset, const TrainConfig& config);

}  // namespace rbag

#endif  // RBAG_LEARNER_HPP_
