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

#ifndef RBAG_NETWORK_HPP_
#define RBAG_NETWORK_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "rbag/data.hpp"

namespace rbag {

// One dense layer inside the flat parameter vector. Weights are stored
// input-major (in x out, row-major) followed by `out` biases.
struct LayerShape {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;
  bool relu = true;

  std::size_t weight_count() const { return in * out; }
};

// Siamese pair classifier: a rectifier MLP extractor shared by the pre and
// post branches, then a head over the 2f concatenated features:
//   2f -> penultimate (rectifier) -> 1 logit.
// The extractor parameters form the prefix [0, extractor_parameter_count())
// of the flat vector.
struct SiameseTopology {
  std::size_t input_dim = 16;
  std::vector<std::size_t> extractor_widths = {64, 32};  // last entry is f
  std::size_t penultimate = 128;

  void validate() const;
  std::size_t feature_dim() const { return extractor_widths.back(); }
  std::size_t extractor_layer_count() const { return extractor_widths.size(); }
  // Extractor layers, then the two head layers.
  std::vector<LayerShape> layers() const;
  std::size_t extractor_parameter_count() const;
  std::size_t parameter_count() const;

  friend bool operator==(const SiameseTopology&, const SiameseTopology&) = default;
};

// Feature rows converted to double for training and batched scoring.
struct PairBatch {
  std::size_t size = 0;
  std::size_t dim = 0;
  std::vector<double> pre;   // size x dim
  std::vector<double> post;  // size x dim
  std::vector<Label> labels;

  static PairBatch from(const PairDataset& dataset, std::span<const std::size_t> indices);
  static PairBatch all(const PairDataset& dataset);
};

double sigmoid(double logit);

namespace kernels {

// out[b, o] = bias[o] + sum_i in[b, i] * w[i, o], rectified when `relu`.
void dense_forward(std::span<const double> w, std::span<const double> bias,
                   std::span<const double> in, std::span<double> out, std::size_t batch,
                   std::size_t in_dim, std::size_t out_dim, bool relu);

// Accumulates dw += in^T dout and dbias += colsum(dout); writes
// din = dout w^T when `din` is non-empty. `dout` must already carry the
// rectifier mask of this layer.
void dense_backward(std::span<const double> w, std::span<const double> in,
                    std::span<const double> dout, std::span<double> dw,
                    std::span<double> dbias, std::span<double> din, std::size_t batch,
                    std::size_t in_dim, std::size_t out_dim);

}  // namespace kernels

// Activations of one forward pass over a batch, kept for backpropagation.
struct ForwardCache {
  std::vector<std::vector<double>> pre_acts;   // per extractor layer
  std::vector<std::vector<double>> post_acts;  // per extractor layer
  std::vector<double> head_in;                 // size x 2f
  std::vector<double> hidden;                  // size x penultimate
  std::vector<double> logits;                  // size
};

// Extractor features for `count` rows of `x` (count x input_dim).
std::vector<double> extract_features(const SiameseTopology& topology,
                                     std::span<const double> weights,
                                     std::span<const double> x, std::size_t count);

// Full forward pass. Fills `cache` and returns it by reference.
const ForwardCache& forward_batch(const SiameseTopology& topology,
                                  std::span<const double> weights, const PairBatch& batch,
                                  ForwardCache& cache);

// Head-only forward over precomputed features (size x 2f).
void head_forward(const SiameseTopology& topology, std::span<const double> weights,
                  std::span<const double> head_in, std::size_t count, ForwardCache& cache);

// Backpropagates d(loss)/d(logit) through the cached pass of `batch` and
// accumulates into `grad`. With `head_only` the extractor gradient is left
// untouched.
void backward_batch(const SiameseTopology& topology, std::span<const double> weights,
                    const PairBatch& batch, const ForwardCache& cache,
                    std::span<const double> dlogits, std::span<double> grad, bool head_only);

}  // namespace rbag

#endif  // RBAG_NETWORK_HPP_
