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
#include <cmath>
#include <random>
#include <vector>

#include "gtest/gtest.h"
#include "test_util.hpp"

namespace rbag {
namespace {

class EnsembleTest : public ::testing::Test {
 protected:
  EnsembleTest() : dataset_(test::random_dataset(30, 400, 4, 77)) {
    draw_ = draw_k_shot(dataset_, 10, 1);
    plan_ = make_chunk_plan(dataset_, 10, 2);
    config_.iterations = 15;
    recipe_.topology = test::small_topology();
  }

  Ensemble train(std::size_t m, std::uint64_t trial_seed = 5) const {
    return train_ensemble(dataset_, draw_, plan_, assign_chunks(plan_, m, 3), config_, recipe_,
                          trial_seed);
  }

  PairDataset dataset_;
  KShotDraw draw_;
  ChunkPlan plan_;
  TrainConfig config_;
  BaseModelRecipe recipe_;
};

TEST_F(EnsembleTest, SingleModelIsIdentity) {
  const Ensemble e = train(1);
  ASSERT_EQ(e.size(), 1u);
  const PairDataset inputs = test::random_dataset(5000, 5000, 4, 123);
  const auto scores = predict_scores(e, inputs);
  const auto base = score_dataset(e.models[0], inputs);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    ASSERT_EQ(scores[i], base[i]);
    if (i % 97 == 0) {
      ASSERT_EQ(predict_score(e, inputs.pre(i), inputs.post(i)),
                forward(e.models[0], inputs.pre(i), inputs.post(i)));
    }
  }
}

TEST_F(EnsembleTest, ModelsUsePerIndexSeeds) {
  const Ensemble e = train(4, 99);
  const ChunkAssignment a = assign_chunks(plan_, 4, 3);
  // Model 3 trained before model 1, each on its own.
  const BaseModel m3 = train_base_model(dataset_, draw_, plan_, a, config_, recipe_, 99, 3);
  const BaseModel m1 = train_base_model(dataset_, draw_, plan_, a, config_, recipe_, 99, 1);
  EXPECT_EQ(m3, e.models[2]);
  EXPECT_EQ(m1, e.models[0]);
  EXPECT_EQ(e.models[1].seed, model_seed(99, 2));
  EXPECT_EQ(e.provenance.model_seeds.size(), 4u);
  EXPECT_EQ(e.provenance.assignment, a);
}

TEST_F(EnsembleTest, SerialAndParallelAgree) {
  const ChunkAssignment a = assign_chunks(plan_, 6, 3);
  const Ensemble par = train_ensemble(dataset_, draw_, plan_, a, config_, recipe_, 8);
  const Ensemble ser = train_ensemble_serial(dataset_, draw_, plan_, a, config_, recipe_, 8);
  EXPECT_EQ(par, ser);
  const PairDataset inputs = test::random_dataset(150, 150, 4, 4);
  EXPECT_EQ(predict_scores(par, inputs), predict_scores_serial(par, inputs));
}

TEST_F(EnsembleTest, DeterministicGivenTrialSeed) {
  EXPECT_EQ(train(3, 11), train(3, 11));
  EXPECT_NE(train(3, 11).models[0].weights, train(3, 12).models[0].weights);
}

TEST_F(EnsembleTest, PaperScaleShape) {
  const PairDataset d = test::random_dataset(60, 1100, 4, 5);
  const KShotDraw draw = draw_k_shot(d, 50, 1);
  const ChunkPlan plan = make_chunk_plan(d, 50, 2);
  TrainConfig cfg;
  cfg.iterations = 1;
  const Ensemble e = train_ensemble(d, draw, plan, assign_chunks(plan, 20, 3), cfg, recipe_, 1);
  ASSERT_EQ(e.size(), 20u);
  for (std::size_t i = 1; i <= 20; ++i) {
    EXPECT_EQ(base_training_set(d, draw, plan, e.provenance.assignment, i).size(), 100u);
  }
}

TEST_F(EnsembleTest, ScoreBetweenBaseExtremesAndPermutationInvariant) {
  Ensemble e = train(5);
  const PairDataset inputs = test::random_dataset(40, 40, 4, 6);
  const auto scores = predict_scores(e, inputs);
  std::vector<std::vector<double>> base;
  for (const auto& m : e.models) base.push_back(score_dataset(m, inputs));
  std::reverse(e.models.begin(), e.models.end());
  std::swap(e.models[0], e.models[3]);
  const auto permuted = predict_scores(e, inputs);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    double lo = 1.0, hi = 0.0;
    for (const auto& b : base) {
      lo = std::min(lo, b[i]);
      hi = std::max(hi, b[i]);
    }
    EXPECT_LE(lo, scores[i]);
    EXPECT_GE(hi, scores[i]);
    EXPECT_NEAR(permuted[i], scores[i], 1e-15);
  }
}

TEST_F(EnsembleTest, PropagatesModelIndexOnFailure) {
  BaseModelRecipe transfer;
  transfer.topology = recipe_.topology;
  transfer.mode = InitMode::kTransfer;
  EXPECT_THROW(train_ensemble(dataset_, draw_, plan_, assign_chunks(plan_, 2, 3), config_,
                              transfer, 1),
               Error);
}

TEST(MeanScore, Values) {
  EXPECT_NEAR(mean_score(std::vector<double>{0.2, 0.4, 0.6}), 0.4, 1e-16);
  EXPECT_EQ(mean_score(std::vector<double>{1.0, 1.0, 1.0, 1.0}), 1.0);
  EXPECT_THROW(mean_score(std::vector<double>{}), Error);
}

TEST(MeanScore, MatchesDirectSummation) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int c = 0; c < 1000; ++c) {
    std::vector<double> s(7);
    long double sum = 0.0L;
    for (auto& x : s) {
      x = u(rng);
      sum += x;
    }
    EXPECT_NEAR(mean_score(s), static_cast<double>(sum / 7.0L), 1e-15);
  }
}

TEST(Decide, TieIsPositive) {
  EXPECT_EQ(decide(0.5), Label::kPositive);
  EXPECT_EQ(decide(0.49), Label::kNegative);
  EXPECT_EQ(decide(0.7, 0.7), Label::kPositive);
}

TEST_F(EnsembleTest, LabelsAgreeWithScoreRule) {
  const Ensemble e = train(3);
  const PairDataset inputs = test::random_dataset(100, 100, 4, 321);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const double threshold = 0.005 + 0.99 * static_cast<double>(i) / inputs.size();
    const double s = predict_score(e, inputs.pre(i), inputs.post(i));
    EXPECT_EQ(predict_label(e, inputs.pre(i), inputs.post(i), threshold),
              s >= threshold ? Label::kPositive : Label::kNegative);
  }
  EXPECT_THROW(predict_label(e, inputs.pre(0), inputs.post(0), 1.0), Error);
  EXPECT_THROW(predict_label(e, inputs.pre(0), inputs.post(0), 0.0), Error);
}

TEST_F(EnsembleTest, DimensionMismatch) {
  const Ensemble e = train(2);
  const std::vector<float> x(3, 0.0f);
  EXPECT_THROW(predict_score(e, x, x), Error);
}

}  // namespace
}  // namespace rbag
