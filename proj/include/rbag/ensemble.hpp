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

#ifndef RBAG_ENSEMBLE_HPP_
#define RBAG_ENSEMBLE_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rbag/learner.hpp"
#include "rbag/partition.hpp"

namespace rbag {

// How base models are initialized before fine-tuning.
struct BaseModelRecipe {
  SiameseTopology topology;
  InitMode mode = InitMode::kScratch;
  std::optional<PretrainedExtractor> pretrained;  // required for kTransfer

  void validate() const;
};

struct EnsembleProvenance {
  std::uint64_t trial_seed = 0;
  KShotDraw draw;
  ChunkPlan plan;
  ChunkAssignment assignment;
  TrainConfig config;
  std::vector<std::uint64_t> model_seeds;

  friend bool operator==(const EnsembleProvenance&, const EnsembleProvenance&) = default;
};

struct Ensemble {
  std::vector<BaseModel> models;
  EnsembleProvenance provenance;

  std::size_t size() const { return models.size(); }
  void validate() const;
  friend bool operator==(const Ensemble&, const Ensemble&) = default;
};

// Seed of base model i (1-based) inside a trial.
std::uint64_t model_seed(std::uint64_t trial_seed, std::size_t model);

// Base model i trained on D_i. Depends only on its arguments, so models can
// be produced in any order.
BaseModel train_base_model(const PairDataset& dataset, const KShotDraw& draw,
                           const ChunkPlan& plan, const ChunkAssignment& assignment,
                           const TrainConfig& config, const BaseModelRecipe& recipe,
                           std::uint64_t trial_seed, std::size_t model);

// Trains the |M| base models in parallel (OpenMP) when available.
Ensemble train_ensemble(const PairDataset& dataset, const KShotDraw& draw, const ChunkPlan& plan,
                        const ChunkAssignment& assignment, const TrainConfig& config,
                        const BaseModelRecipe& recipe, std::uint64_t trial_seed);

// Sequential reference for train_ensemble.
Ensemble train_ensemble_serial(const PairDataset& dataset, const KShotDraw& draw,
                               const ChunkPlan& plan, const ChunkAssignment& assignment,
                               const TrainConfig& config, const BaseModelRecipe& recipe,
                               std::uint64_t trial_seed);

// Arithmetic mean of the base scores, summed in model order.
double mean_score(std::span<const double> base_scores);

double predict_score(const Ensemble& ensemble, std::span<const float> pre,
                     std::span<const float> post);

// 1 iff score >= threshold.
Label decide(double score, double threshold = 0.5);
Label predict_label(const Ensemble& ensemble, std::span<const float> pre,
                    std::span<const float> post, double threshold = 0.5);

// Ensemble score of every sample, parallel over samples.
std::vector<double> predict_scores(const Ensemble& ensemble, const PairDataset& dataset);
// Sequential reference for predict_scores.
std::vector<double> predict_scores_serial(const Ensemble& ensemble, const PairDataset& dataset);

}  // namespace rbag

#endif  // RBAG_ENSEMBLE_HPP_
