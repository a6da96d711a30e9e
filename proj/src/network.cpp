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

#include "rbag/network.hpp"

#include <algorithm>
#include <cmath>

namespace rbag {

void SiameseTopology::validate() const {
  if (input_dim < 1) throw Error("SiameseTopology: input_dim must be >= 1");
  if (extractor_widths.empty()) throw Error("SiameseTopology: extractor needs at least one layer");
  for (std::size_t w : extractor_widths) {
    if (w < 1) throw Error("SiameseTopology: layer widths must be >= 1");
  }
  if (penultimate < 1) throw Error("SiameseTopology: penultimate width must be >= 1");
}

std::vector<LayerShape> SiameseTopology::layers() const {
  validate();
  std::vector<LayerShape> out;
  std::size_t offset = 0;
  auto add = [&](std::size_t in, std::size_t o, bool relu) {
    LayerShape s;
    s.in = in;
    s.out = o;
    s.weight_offset = offset;
    s.bias_offset = offset + in * o;
    s.relu = relu;
    offset += in * o + o;
    out.push_back(s);
  };
  std::size_t in = input_dim;
  for (std::size_t w : extractor_widths) {
    add(in, w, true);
    in = w;
  }
  add(2 * feature_dim(), penultimate, true);
  add(penultimate, 1, false);
  return out;
}

std::size_t SiameseTopology::extractor_parameter_count() const {
  const auto l = layers();
  const auto& last = l[extractor_layer_count() - 1];
  return last.bias_offset + last.out;
}

std::size_t SiameseTopology::parameter_count() const {
  const auto l = layers();
  return l.back().bias_offset + l.back().out;
}

PairBatch PairBatch::from(const PairDataset& dataset, std::span<const std::size_t> indices) {
  PairBatch b;
  b.size = indices.size();
  b.dim = dataset.dim();
  b.pre.reserve(b.size * b.dim);
  b.post.reserve(b.size * b.dim);
  b.labels.reserve(b.size);
  for (std::size_t i : indices) {
    const auto s = dataset.sample(i);
    b.pre.insert(b.pre.end(), s.pre.begin(), s.pre.end());
    b.post.insert(b.post.end(), s.post.begin(), s.post.end());
    b.labels.push_back(s.label);
  }
  return b;
}

PairBatch PairBatch::all(const PairDataset& dataset) {
  PairBatch b;
  b.size = dataset.size();
  b.dim = dataset.dim();
  b.pre.assign(dataset.pre_data().begin(), dataset.pre_data().end());
  b.post.assign(dataset.post_data().begin(), dataset.post_data().end());
  b.labels = dataset.labels();
  return b;
}

double sigmoid(double logit) {
  if (logit >= 0.0) return 1.0 / (1.0 + std::exp(-logit));
  const double e = std::exp(logit);
  return e / (1.0 + e);
}

namespace kernels {

void dense_forward(std::span<const double> w, std::span<const double> bias,
                   std::span<const double> in, std::span<double> out, std::size_t batch,
                   std::size_t in_dim, std::size_t out_dim, bool relu) {
  for (std::size_t b = 0; b < batch; ++b) {
    double* o = out.data() + b * out_dim;
    const double* x = in.data() + b * in_dim;
    std::copy_n(bias.data(), out_dim, o);
    for (std::size_t i = 0; i < in_dim; ++i) {
      const double xi = x[i];
      const double* wi = w.data() + i * out_dim;
      for (std::size_t j = 0; j < out_dim; ++j) o[j] += xi * wi[j];
    }
    if (relu) {
      for (std::size_t j = 0; j < out_dim; ++j) o[j] = o[j] > 0.0 ? o[j] : 0.0;
    }
  }
}

void dense_backward(std::span<const double> w, std::span<const double> in,
                    std::span<const double> dout, std::span<double> dw,
                    std::span<double> dbias, std::span<double> din, std::size_t batch,
                    std::size_t in_dim, std::size_t out_dim) {
  for (std::size_t b = 0; b < batch; ++b) {
    const double* g = dout.data() + b * out_dim;
    const double* x = in.data() + b * in_dim;
    for (std::size_t j = 0; j < out_dim; ++j) dbias[j] += g[j];
    for (std::size_t i = 0; i < in_dim; ++i) {
      const double xi = x[i];
      if (xi == 0.0) continue;
      double* dwi = dw.data() + i * out_dim;
      for (std::size_t j = 0; j < out_dim; ++j) dwi[j] += xi * g[j];
    }
    if (!din.empty()) {
      double* dx = din.data() + b * in_dim;
      for (std::size_t i = 0; i < in_dim; ++i) {
        const double* wi = w.data() + i * out_dim;
        double acc = 0.0;
        for (std::size_t j = 0; j < out_dim; ++j) acc += wi[j] * g[j];
        dx[i] = acc;
      }
    }
  }
}

}  // namespace kernels

namespace {

std::span<const double> weights_of(std::span<const double> p, const LayerShape& l) {
  return p.subspan(l.weight_offset, l.weight_count());
}
std::span<const double> bias_of(std::span<const double> p, const LayerShape& l) {
  return p.subspan(l.bias_offset, l.out);
}

void run_extractor(const std::vector<LayerShape>& layers, std::size_t extractor_layers,
                   std::span<const double> weights, std::span<const double> x,
                   std::size_t count, std::vector<std::vector<double>>& acts) {
  acts.resize(extractor_layers);
  std::span<const double> in = x;
  for (std::size_t l = 0; l < extractor_layers; ++l) {
    const auto& s = layers[l];
    acts[l].resize(count * s.out);
    kernels::dense_forward(weights_of(weights, s), bias_of(weights, s), in, acts[l], count,
                           s.in, s.out, s.relu);
    in = acts[l];
  }
}

}  // namespace

std::vector<double> extract_features(const SiameseTopology& topology,
                                     std::span<const double> weights,
                                     std::span<const double> x, std::size_t count) {
  std::vector<std::vector<double>> acts;
  run_extractor(topology.layers(), topology.extractor_layer_count(), weights, x, count, acts);
  return std::move(acts.back());
}

void head_forward(const SiameseTopology& topology, std::span<const double> weights,
                  std::span<const double> head_in, std::size_t count, ForwardCache& cache) {
  const auto layers = topology.layers();
  const auto& h1 = layers[layers.size() - 2];
  const auto& h2 = layers.back();
  if (cache.head_in.data() != head_in.data()) cache.head_in.assign(head_in.begin(), head_in.end());
  cache.hidden.resize(count * h1.out);
  cache.logits.resize(count);
  kernels::dense_forward(weights_of(weights, h1), bias_of(weights, h1), cache.head_in,
                         cache.hidden, count, h1.in, h1.out, true);
  kernels::dense_forward(weights_of(weights, h2), bias_of(weights, h2), cache.hidden,
                         cache.logits, count, h2.in, h2.out, false);
}

const ForwardCache& forward_batch(const SiameseTopology& topology,
                                  std::span<const double> weights, const PairBatch& batch,
                                  ForwardCache& cache) {
  if (batch.dim != topology.input_dim) {
    throw Error("forward: input dimension " + std::to_string(batch.dim) +
                " does not match topology input_dim " + std::to_string(topology.input_dim));
  }
  if (weights.size() != topology.parameter_count()) {
    throw Error("forward: weight vector length does not match topology");
  }
  const auto layers = topology.layers();
  const std::size_t el = topology.extractor_layer_count();
  const std::size_t f = topology.feature_dim();
  const std::size_t n = batch.size;
  run_extractor(layers, el, weights, batch.pre, n, cache.pre_acts);
  run_extractor(layers, el, weights, batch.post, n, cache.post_acts);
  cache.head_in.resize(n * 2 * f);
  const auto& fa = cache.pre_acts.back();
  const auto& fb = cache.post_acts.back();
  for (std::size_t b = 0; b < n; ++b) {
    std::copy_n(fa.data() + b * f, f, cache.head_in.data() + b * 2 * f);
    std::copy_n(fb.data() + b * f, f, cache.head_in.data() + b * 2 * f + f);
  }
  head_forward(topology, weights, cache.head_in, n, cache);
  return cache;
}

namespace {

void backprop_extractor(const std::vector<LayerShape>& layers, std::size_t extractor_layers,
                        std::span<const double> weights, std::span<const double> x,
                        const std::vector<std::vector<double>>& acts, std::vector<double> delta,
                        std::span<double> grad, std::size_t n) {
  for (std::size_t l = extractor_layers; l-- > 0;) {
    const auto& s = layers[l];
    const auto& out = acts[l];
    for (std::size_t k = 0; k < delta.size(); ++k) {
      if (!(out[k] > 0.0)) delta[k] = 0.0;
    }
    std::span<const double> in = l == 0 ? x : std::span<const double>(acts[l - 1]);
    std::vector<double> din;
    if (l > 0) din.resize(n * s.in);
    kernels::dense_backward(weights_of(weights, s), in, delta,
                            grad.subspan(s.weight_offset, s.weight_count()),
                            grad.subspan(s.bias_offset, s.out), din, n, s.in, s.out);
    delta = std::move(din);
  }
}

}  // namespace

void backward_batch(const SiameseTopology& topology, std::span<const double> weights,
                    const PairBatch& batch, const ForwardCache& cache,
                    std::span<const double> dlogits, std::span<double> grad, bool head_only) {
  const auto layers = topology.layers();
  const std::size_t el = topology.extractor_layer_count();
  const std::size_t f = topology.feature_dim();
  const std::size_t n = dlogits.size();
  const auto& h1 = layers[layers.size() - 2];
  const auto& h2 = layers.back();

  std::vector<double> dhidden(n * h1.out);
  kernels::dense_backward(weights_of(weights, h2), cache.hidden, dlogits,
                          grad.subspan(h2.weight_offset, h2.weight_count()),
                          grad.subspan(h2.bias_offset, h2.out), dhidden, n, h2.in, h2.out);
  for (std::size_t k = 0; k < dhidden.size(); ++k) {
    if (!(cache.hidden[k] > 0.0)) dhidden[k] = 0.0;
  }
  std::vector<double> dhead_in;
  if (!head_only) dhead_in.resize(n * h1.in);
  kernels::dense_backward(weights_of(weights, h1), cache.head_in, dhidden,
                          grad.subspan(h1.weight_offset, h1.weight_count()),
                          grad.subspan(h1.bias_offset, h1.out), dhead_in, n, h1.in, h1.out);
  if (head_only) return;

  std::vector<double> dpre(n * f), dpost(n * f);
  for (std::size_t b = 0; b < n; ++b) {
    std::copy_n(dhead_in.data() + b * 2 * f, f, dpre.data() + b * f);
    std::copy_n(dhead_in.data() + b * 2 * f + f, f, dpost.data() + b * f);
  }
  // Both branches share the extractor, so their gradients add.
  backprop_extractor(layers, el, weights, batch.pre, cache.pre_acts, std::move(dpre), grad, n);
  backprop_extractor(layers, el, weights, batch.post, cache.post_acts, std::move(dpost), grad, n);
}

}  // namespace rbag
