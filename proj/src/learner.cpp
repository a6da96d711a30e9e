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

#include "rbag/learner.hpp"

#include <cmath>
#include <cstring>

namespace rbag {

std::string to_string(InitMode mode) {
  return mode == InitMode::kTransfer ? "transfer" : "scratch";
}

InitMode init_mode_from_string(const std::string& text) {
  if (text == "scratch") return InitMode::kScratch;
  if (text == "transfer") return InitMode::kTransfer;
  throw Error("unknown arm '" + text + "' (expected scratch or transfer)");
}

void BaseModel::validate() const {
  if (weights.size() != topology.parameter_count()) {
    throw Error("BaseModel: weight vector has " + std::to_string(weights.size()) +
                " entries, topology needs " + std::to_string(topology.parameter_count()));
  }
}

std::uint64_t PretrainedExtractor::digest() const {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (double w : weights) {
    std::uint64_t bits;
    std::memcpy(&bits, &w, sizeof bits);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xFF;
      h *= 0x100000001B3ULL;
    }
  }
  return h;
}

namespace {

void init_layers(const std::vector<LayerShape>& layers, std::size_t first, std::size_t last,
                 std::vector<double>& weights, Rng& rng) {
  for (std::size_t l = first; l < last; ++l) {
    const auto& s = layers[l];
    const double a = std::sqrt(6.0 / static_cast<double>(s.in));
    std::uniform_real_distribution<double> uniform(-a, a);
    for (std::size_t i = 0; i < s.weight_count(); ++i) weights[s.weight_offset + i] = uniform(rng);
    for (std::size_t i = 0; i < s.out; ++i) weights[s.bias_offset + i] = 0.0;
  }
}

}  // namespace

BaseModel init_scratch(const SiameseTopology& topology, std::uint64_t seed) {
  BaseModel model;
  model.topology = topology;
  model.seed = seed;
  model.weights.assign(topology.parameter_count(), 0.0);
  const auto layers = topology.layers();
  Rng rng(seed);
  init_layers(layers, 0, layers.size(), model.weights, rng);
  return model;
}

BaseModel init_transfer(const PretrainedExtractor& pretrained, std::uint64_t seed) {
  const auto& topology = pretrained.topology;
  if (pretrained.weights.size() != topology.extractor_parameter_count()) {
    throw Error("init_transfer: pretrained extractor does not match its topology");
  }
  BaseModel model;
  model.topology = topology;
  model.seed = seed;
  model.init_mode = InitMode::kTransfer;
  model.weights.assign(topology.parameter_count(), 0.0);
  std::copy(pretrained.weights.begin(), pretrained.weights.end(), model.weights.begin());
  const auto layers = topology.layers();
  Rng rng(seed);
  init_layers(layers, topology.extractor_layer_count(), layers.size(), model.weights, rng);
  return model;
}

PretrainedExtractor pretrain_extractor(const PairDataset& source,
                                       const SiameseTopology& topology, std::size_t budget,
                                       std::uint64_t seed, const TrainConfig& config) {
  if (source.size() == 0) throw Error("pretrain_extractor: source dataset is empty");
  if (source.dim() != topology.input_dim) {
    throw Error("pretrain_extractor: source dimension does not match topology");
  }
  BaseModel model = init_scratch(topology, seed);
  TrainConfig cfg = config;
  cfg.iterations = budget;
  std::vector<std::size_t> all(source.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  if (budget > 0) model = fine_tune(model, all, source, cfg).model;
  PretrainedExtractor out;
  out.topology = topology;
  out.source_seed = seed;
  out.weights.assign(model.weights.begin(),
                     model.weights.begin() +
                         static_cast<std::ptrdiff_t>(topology.extractor_parameter_count()));
  return out;
}

namespace {

PairBatch single(const BaseModel& model, std::span<const float> pre,
                 std::span<const float> post) {
  if (pre.size() != model.topology.input_dim || post.size() != model.topology.input_dim) {
    throw Error("forward: expected vectors of length " +
                std::to_string(model.topology.input_dim) + ", got " +
                std::to_string(pre.size()) + " and " + std::to_string(post.size()));
  }
  PairBatch b;
  b.size = 1;
  b.dim = pre.size();
  b.pre.assign(pre.begin(), pre.end());
  b.post.assign(post.begin(), post.end());
  b.labels.push_back(Label::kNegative);
  return b;
}

}  // namespace

std::vector<double> extract(const BaseModel& model, std::span<const float> x) {
  if (x.size() != model.topology.input_dim) throw Error("extract: dimension mismatch");
  std::vector<double> in(x.begin(), x.end());
  return extract_features(model.topology, model.weights, in, 1);
}

double logit(const BaseModel& model, std::span<const float> pre, std::span<const float> post) {
  model.validate();
  ForwardCache cache;
  forward_batch(model.topology, model.weights, single(model, pre, post), cache);
  return cache.logits[0];
}

double forward(const BaseModel& model, std::span<const float> pre, std::span<const float> post) {
  return sigmoid(logit(model, pre, post));
}

std::vector<double> score_dataset(const BaseModel& model, const PairDataset& dataset) {
  model.validate();
  ForwardCache cache;
  forward_batch(model.topology, model.weights, PairBatch::all(dataset), cache);
  std::vector<double> scores(cache.logits.size());
  for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = sigmoid(cache.logits[i]);
  return scores;
}

FineTuneResult fine_tune(const BaseModel& model, std::span<const std::size_t> indices,
                         const PairDataset& dataset, const TrainConfig& config) {
  model.validate();
  config.validate();
  if (indices.empty()) throw Error("fine_tune: training set is empty");
  if (dataset.dim() != model.topology.input_dim) {
    throw Error("fine_tune: dataset dimension does not match topology");
  }
  FineTuneResult result{model, {}};
  BaseModel& m = result.model;
  const PairBatch batch = PairBatch::from(dataset, indices);
  const bool head_only = m.init_mode == InitMode::kTransfer;
  const std::size_t n = batch.size;
  const double inv_n = 1.0 / static_cast<double>(n);
  AdamState state(m.weights.size());
  result.loss_trace.reserve(config.iterations);

  ForwardCache cache;
  if (head_only) {
    // Frozen extractor: features are computed once.
    forward_batch(m.topology, m.weights, batch, cache);
  }
  std::vector<double> dlogits(n);
  std::vector<double> grad(m.weights.size());
  for (std::size_t step = 0; step < config.iterations; ++step) {
    if (head_only) {
      head_forward(m.topology, m.weights, cache.head_in, n, cache);
    } else {
      forward_batch(m.topology, m.weights, batch, cache);
    }
    double loss = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
      const double s = sigmoid(cache.logits[b]);
      const double t = smooth_target(batch.labels[b], config.alpha);
      loss += bce_loss(s, t);
      const bool clamped = s <= kScoreClamp || s >= 1.0 - kScoreClamp;
      dlogits[b] = clamped ? 0.0 : (s - t) * inv_n;
    }
    loss *= inv_n;
    if (!std::isfinite(loss)) {
      throw Error("fine_tune: non-finite loss at step " + std::to_string(step));
    }
    result.loss_trace.push_back(loss);
    std::fill(grad.begin(), grad.end(), 0.0);
    backward_batch(m.topology, m.weights, batch, cache, dlogits, grad, head_only);
    adam_step(m.weights, grad, state, config);
  }
  m.trained = true;
  return result;
}

}  // namespace rbag
