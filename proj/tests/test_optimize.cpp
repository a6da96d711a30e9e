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
#include <numeric>
#include <random>
#include <vector>

#include "gtest/gtest.h"
#include "rbag/learner.hpp"
#include "test_util.hpp"

namespace rbag {
namespace {

TEST(SmoothTarget, Values) {
  EXPECT_DOUBLE_EQ(smooth_target(Label::kPositive, 0.1), 0.95);
  EXPECT_DOUBLE_EQ(smooth_target(Label::kNegative, 0.1), 0.05);
  EXPECT_EQ(smooth_target(Label::kPositive, 0.0), 1.0);
  EXPECT_EQ(smooth_target(Label::kNegative, 0.0), 0.0);
  // Affine in the label, inside [alpha/2, 1 - alpha/2].
  for (double a : {0.0, 0.05, 0.3, 0.9}) {
    const double lo = smooth_target(Label::kNegative, a);
    const double hi = smooth_target(Label::kPositive, a);
    EXPECT_DOUBLE_EQ(lo, a / 2);
    EXPECT_DOUBLE_EQ(hi, 1 - a / 2);
    EXPECT_DOUBLE_EQ(hi - lo, 1 - a);
  }
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.alpha = 1.0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.learning_rate = 0.0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.adam_beta2 = 1.0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Loss, HalfIsLogTwo) { EXPECT_DOUBLE_EQ(bce_loss(0.5, 0.5), std::log(2.0)); }

TEST(Loss, ClampKeepsFinite) {
  EXPECT_TRUE(std::isfinite(bce_loss(0.0, 1.0)));
  EXPECT_NEAR(bce_loss(0.0, 1.0), -std::log(kScoreClamp), 1e-9);
  EXPECT_TRUE(std::isfinite(bce_loss(1.0, 0.0)));
}

TEST(Loss, GridMinimumAtTarget) {
  const double t = 0.95;
  double best_s = 0.0;
  double best = 1e300;
  for (int i = 1; i < 10000; ++i) {
    const double s = i / 10000.0;
    const double l = bce_loss(s, t);
    if (l < best) {
      best = l;
      best_s = s;
    }
  }
  EXPECT_NEAR(best_s, t, 1e-4);
  EXPECT_LE(bce_loss(t, t), best);
}

TEST(Loss, GibbsInequality) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.001, 0.999);
  for (int i = 0; i < 100; ++i) {
    const double s = u(rng);
    const double t = u(rng);
    EXPECT_GE(bce_loss(s, t), bce_loss(t, t) - 1e-15);
  }
}

struct Instance {
  SiameseTopology topology;
  std::vector<double> weights;
  PairBatch batch;
};

Instance random_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> width(1, 6);
  Instance inst;
  inst.topology.input_dim = width(rng);
  inst.topology.extractor_widths.assign(1 + rng() % 2, 0);
  for (auto& w : inst.topology.extractor_widths) w = width(rng);
  inst.topology.penultimate = width(rng);
  inst.weights = test::random_weights(inst.topology.parameter_count(), rng(), 0.8);
  const std::size_t n_pos = 1 + rng() % 4;
  const std::size_t n_neg = 1 + rng() % 4;
  inst.batch = PairBatch::all(test::random_dataset(n_pos, n_neg, inst.topology.input_dim, rng()));
  return inst;
}

TEST(Gradient, MatchesCentralDifferences) {
  std::mt19937_64 rng(2024);
  TrainConfig cfg;
  const double h = 1e-5;
  std::size_t checked = 0;
  for (int c = 0; c < 20; ++c) {
    Instance inst = random_instance(rng);
    const auto analytic = gradient(inst.topology, inst.weights, inst.batch, cfg);
    ASSERT_EQ(analytic.size(), inst.weights.size());
    for (std::size_t i = 0; i < inst.weights.size(); ++i) {
      std::vector<double> w = inst.weights;
      w[i] += h;
      const double up = loss_and_gradient(inst.topology, w, inst.batch, cfg).loss;
      w[i] -= 2 * h;
      const double down = loss_and_gradient(inst.topology, w, inst.batch, cfg).loss;
      const double numeric = (up - down) / (2 * h);
      const double scale = std::max(std::abs(analytic[i]), std::abs(numeric));
      if (scale <= 1e-6) continue;
      ++checked;
      EXPECT_LT(std::abs(analytic[i] - numeric) / scale, 1e-4)
          << "instance " << c << " component " << i << " analytic " << analytic[i]
          << " numeric " << numeric;
    }
  }
  EXPECT_GT(checked, 100u);
}

TEST(Gradient, HeadOnlyLeavesExtractorZero) {
  std::mt19937_64 rng(5);
  const Instance inst = random_instance(rng);
  TrainConfig cfg;
  const auto full = loss_and_gradient(inst.topology, inst.weights, inst.batch, cfg, false);
  const auto head = loss_and_gradient(inst.topology, inst.weights, inst.batch, cfg, true);
  const std::size_t n = inst.topology.extractor_parameter_count();
  EXPECT_EQ(full.loss, head.loss);
  for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(head.gradient[i], 0.0);
  for (std::size_t i = n; i < full.gradient.size(); ++i) {
    EXPECT_NEAR(head.gradient[i], full.gradient[i], 1e-15);
  }
}

TEST(Gradient, SymmetricWeightsTieBranchComponents) {
  // Zero inputs: both branches produce the same features, so mirrored head
  // rows receive equal gradients.
  const SiameseTopology t = test::small_topology(3);
  std::vector<double> w = test::random_weights(t.parameter_count(), 9, 1.0);
  const auto layers = t.layers();
  const LayerShape& head = layers[t.extractor_layer_count()];
  const std::size_t f = t.feature_dim();
  for (std::size_t i = 0; i < f; ++i) {
    for (std::size_t o = 0; o < head.out; ++o) {
      w[head.weight_offset + (f + i) * head.out + o] = w[head.weight_offset + i * head.out + o];
    }
  }
  const PairDataset zeros(3, std::vector<float>(12, 0.0f), std::vector<float>(12, 0.0f),
                          {Label::kPositive, Label::kNegative, Label::kNegative, Label::kPositive});
  const auto g = gradient(t, w, PairBatch::all(zeros), TrainConfig{});
  for (std::size_t i = 0; i < f; ++i) {
    for (std::size_t o = 0; o < head.out; ++o) {
      EXPECT_EQ(g[head.weight_offset + i * head.out + o], g[head.weight_offset + (f + i) * head.out + o]);
    }
  }
  // First-layer weights multiply zero inputs.
  for (std::size_t i = 0; i < layers[0].weight_count(); ++i) EXPECT_EQ(g[i], 0.0);
}

TEST(Gradient, DuplicatedBatchKeepsMean) {
  const PairDataset d = test::random_dataset(3, 4, 4, 12);
  const SiameseTopology t = test::small_topology();
  const auto w = test::random_weights(t.parameter_count(), 13);
  std::vector<std::size_t> once(d.size());
  std::iota(once.begin(), once.end(), std::size_t{0});
  std::vector<std::size_t> twice = once;
  twice.insert(twice.end(), once.begin(), once.end());
  const auto a = loss_and_gradient(t, w, PairBatch::from(d, once), TrainConfig{});
  const auto b = loss_and_gradient(t, w, PairBatch::from(d, twice), TrainConfig{});
  EXPECT_NEAR(a.loss, b.loss, 1e-14);
  for (std::size_t i = 0; i < a.gradient.size(); ++i) EXPECT_NEAR(a.gradient[i], b.gradient[i], 1e-14);
}

TEST(Gradient, EmptyBatchRejected) {
  const SiameseTopology t = test::small_topology();
  PairBatch empty;
  empty.dim = 4;
  EXPECT_THROW(gradient(t, std::vector<double>(t.parameter_count()), empty, TrainConfig{}), Error);
}

TEST(Adam, ZeroGradientKeepsWeights) {
  std::vector<double> w = {1.0, -2.0, 3.5};
  const std::vector<double> before = w;
  AdamState s(3);
  adam_step(w, std::vector<double>(3, 0.0), s, TrainConfig{});
  EXPECT_EQ(w, before);
  EXPECT_EQ(s.t, 1u);
}

TEST(Adam, FirstStepIsSignedLearningRate) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> mag(0.01, 10.0);
  TrainConfig cfg;
  std::vector<double> g(50);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = (i % 2 ? -1.0 : 1.0) * mag(rng);
  std::vector<double> w(50, 0.25);
  AdamState s(50);
  adam_step(w, g, s, cfg);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double step = w[i] - 0.25;
    EXPECT_NEAR(step, -cfg.learning_rate * (g[i] > 0 ? 1.0 : -1.0), cfg.learning_rate * 1e-6);
  }
}

TEST(Adam, ZeroLearningRateKeepsWeights) {
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  std::vector<double> w = {1.0, 2.0};
  AdamState s(2);
  for (int i = 0; i < 5; ++i) adam_step(w, std::vector<double>{0.3, -7.0}, s, cfg);
  EXPECT_EQ(w, (std::vector<double>{1.0, 2.0}));
  for (double v : s.v) EXPECT_GE(v, 0.0);
}

TEST(Adam, PermutationEquivariant) {
  const std::size_t n = 12;
  std::vector<double> w = test::random_weights(n, 1);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(2));
  std::vector<double> wp(n);
  for (std::size_t i = 0; i < n; ++i) wp[i] = w[perm[i]];
  AdamState s(n), sp(n);
  for (int step = 0; step < 4; ++step) {
    const std::vector<double> g = test::random_weights(n, 10 + step);
    std::vector<double> gp(n);
    for (std::size_t i = 0; i < n; ++i) gp[i] = g[perm[i]];
    adam_step(w, g, s, TrainConfig{});
    adam_step(wp, gp, sp, TrainConfig{});
  }
  for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(wp[i], w[perm[i]]);
}

TEST(Adam, LengthMismatch) {
  std::vector<double> w(3);
  AdamState s(2);
  EXPECT_THROW(adam_step(w, std::vector<double>(3), s, TrainConfig{}), Error);
}

}  // namespace
}  // namespace rbag
