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

#include "rbag/ensemble.hpp"

#include <algorithm>
#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rbag {

void BaseModelRecipe::validate() const {
  topology.validate();
  if (mode == InitMode::kTransfer) {
    if (!pretrained) throw Error("transfer recipe needs a pretrained extractor");
    if (!(pretrained->topology == topology)) {
      throw Error("pretrained extractor topology differs from the recipe topology");
    }
  }
}

void Ensemble::validate() const {
  if (models.empty()) throw Error("Ensemble: needs at least one base model");
  for (const auto& m : models) {
    m.validate();
    if (!(m.topology == models.front().topology)) {
      throw Error("Ensemble: base models disagree on topology");
    }
  }
}

std::uint64_t model_seed(std::uint64_t trial_seed, std::size_t model) {
  return derive_seed(trial_seed, model);
}

BaseModel train_base_model(const PairDataset& dataset, const KShotDraw& draw,
                           const ChunkPlan& plan, const ChunkAssignment& assignment,
                           const TrainConfig& config, const BaseModelRecipe& recipe,
                           std::uint64_t trial_seed, std::size_t model) {
  const auto indices = base_training_set(dataset, draw, plan, assignment, model);
  const std::uint64_t seed = model_seed(trial_seed, model);
  BaseModel init = recipe.mode == InitMode::kTransfer ? init_transfer(*recipe.pretrained, seed)
                                                      : init_scratch(recipe.topology, seed);
  try {
    return fine_tune(init, indices, dataset, config).model;
  } catch (const Error& e) {
    throw Error("base model " + std::to_string(model) + ": " + e.what());
  }
}

namespace {

Ensemble assemble(std::vector<BaseModel> models, std::uint64_t trial_seed,
                  const KShotDraw& draw, const ChunkPlan& plan,
                  const ChunkAssignment& assignment, const TrainConfig& config) {
  Ensemble e;
  e.models = std::move(models);
  e.provenance.trial_seed = trial_seed;
  e.provenance.draw = draw;
  e.provenance.plan = plan;
  e.provenance.assignment = assignment;
  e.provenance.config = config;
  for (std::size_t i = 1; i <= e.models.size(); ++i) {
    e.provenance.model_seeds.push_back(model_seed(trial_seed, i));
  }
  return e;
}

void check_inputs(const PairDataset& dataset, const KShotDraw& draw, const ChunkPlan& plan,
                  const ChunkAssignment& assignment, const BaseModelRecipe& recipe) {
  recipe.validate();
  if (assignment.model_count < 1 || assignment.assigned.size() != assignment.model_count) {
    throw Error("train_ensemble: malformed chunk assignment");
  }
  for (std::size_t c : assignment.assigned) {
    if (c < 1 || c > plan.chunk_count()) {
      throw Error("train_ensemble: assignment refers to chunk " + std::to_string(c) +
                  " but the plan has " + std::to_string(plan.chunk_count()));
    }
  }
  if (draw.k != plan.k) throw Error("train_ensemble: draw size differs from chunk size");
  if (dataset.dim() != recipe.topology.input_dim) {
    throw Error("train_ensemble: dataset dimension does not match topology");
  }
}

}  // namespace

Ensemble train_ensemble(const PairDataset& dataset, const KShotDraw& draw, const ChunkPlan& plan,
                        const ChunkAssignment& assignment, const TrainConfig& config,
                        const BaseModelRecipe& recipe, std::uint64_t trial_seed) {
  check_inputs(dataset, draw, plan, assignment, recipe);
  const std::size_t m = assignment.model_count;
  std::vector<BaseModel> models(m);
  std::vector<std::exception_ptr> errors(m);
  const auto count = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      models[i] = train_base_model(dataset, draw, plan, assignment, config, recipe, trial_seed,
                                   static_cast<std::size_t>(i) + 1);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return assemble(std::move(models), trial_seed, draw, plan, assignment, config);
}

Ensemble train_ensemble_serial(const PairDataset& dataset, const KShotDraw& draw,
                               const ChunkPlan& plan, const ChunkAssignment& assignment,
                               const TrainConfig& config, const BaseModelRecipe& recipe,
                               std::uint64_t trial_seed) {
  check_inputs(dataset, draw, plan, assignment, recipe);
  std::vector<BaseModel> models;
  for (std::size_t i = 1; i <= assignment.model_count; ++i) {
    models.push_back(
        train_base_model(dataset, draw, plan, assignment, config, recipe, trial_seed, i));
  }
  return assemble(std::move(models), trial_seed, draw, plan, assignment, config);
}

double mean_score(std::span<const double> base_scores) {
  if (base_scores.empty()) throw Error("mean_score: no base scores");
  double sum = 0.0;
  for (double s : base_scores) sum += s;
  return sum / static_cast<double>(base_scores.size());
}

double predict_score(const Ensemble& ensemble, std::span<const float> pre,
                     std::span<const float> post) {
  if (ensemble.models.empty()) throw Error("predict_score: empty ensemble");
  std::vector<double> scores;
  scores.reserve(ensemble.size());
  for (const auto& m : ensemble.models) scores.push_back(forward(m, pre, post));
  return mean_score(scores);
}

Label decide(double score, double threshold) {
  return score >= threshold ? Label::kPositive : Label::kNegative;
}

Label predict_label(const Ensemble& ensemble, std::span<const float> pre,
                    std::span<const float> post, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error("predict_label: threshold must lie in (0, 1)");
  }
  return decide(predict_score(ensemble, pre, post), threshold);
}

namespace {

// Scores for rows [begin, end) of `batch`, averaged over the ensemble.
void score_rows(const Ensemble& ensemble, const PairBatch& batch, std::size_t begin,
                std::size_t end, std::span<double> out) {
  const std::size_t d = batch.dim;
  PairBatch slice;
  slice.size = end - begin;
  slice.dim = d;
  slice.pre.assign(batch.pre.begin() + static_cast<std::ptrdiff_t>(begin * d),
                   batch.pre.begin() + static_cast<std::ptrdiff_t>(end * d));
  slice.post.assign(batch.post.begin() + static_cast<std::ptrdiff_t>(begin * d),
                    batch.post.begin() + static_cast<std::ptrdiff_t>(end * d));
  slice.labels.assign(batch.labels.begin() + static_cast<std::ptrdiff_t>(begin),
                      batch.labels.begin() + static_cast<std::ptrdiff_t>(end));
  std::vector<double> sums(slice.size, 0.0);
  ForwardCache cache;
  for (const auto& m : ensemble.models) {
    forward_batch(m.topology, m.weights, slice, cache);
    for (std::size_t r = 0; r < slice.size; ++r) sums[r] += sigmoid(cache.logits[r]);
  }
  const double count = static_cast<double>(ensemble.size());
  for (std::size_t r = 0; r < slice.size; ++r) out[begin + r] = sums[r] / count;
}

}  // namespace

std::vector<double> predict_scores(const Ensemble& ensemble, const PairDataset& dataset) {
  ensemble.validate();
  const PairBatch batch = PairBatch::all(dataset);
  std::vector<double> out(batch.size);
  constexpr std::size_t kBlock = 64;
  const auto blocks = static_cast<std::ptrdiff_t>((batch.size + kBlock - 1) / kBlock);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(blocks));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < blocks; ++b) {
    const std::size_t begin = static_cast<std::size_t>(b) * kBlock;
    const std::size_t end = std::min(batch.size, begin + kBlock);
    try {
      score_rows(ensemble, batch, begin, end, out);
    } catch (...) {
      errors[static_cast<std::size_t>(b)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::vector<double> predict_scores_serial(const Ensemble& ensemble, const PairDataset& dataset) {
  ensemble.validate();
  std::vector<std::vector<double>> per_model;
  for (const auto& m : ensemble.models) per_model.push_back(score_dataset(m, dataset));
  std::vector<double> out(dataset.size());
  std::vector<double> scores(ensemble.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t k = 0; k < per_model.size(); ++k) scores[k] = per_model[k][i];
    out[i] = mean_score(scores);
  }
  return out;
}

}  // namespace rbag
