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

#include "rbag/persist.hpp"

#include <cstring>
#include <vector>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "test_util.hpp"

namespace rbag {
namespace {

using ::testing::HasSubstr;

Ensemble small_ensemble(const PairDataset& d) {
  const KShotDraw draw = draw_k_shot(d, 5, 1);
  const ChunkPlan plan = make_chunk_plan(d, 5, 2);
  TrainConfig cfg;
  cfg.iterations = 5;
  BaseModelRecipe recipe;
  recipe.topology = test::small_topology();
  return train_ensemble(d, draw, plan, assign_chunks(plan, 3, 3), cfg, recipe, 42);
}

TEST(Persist, HeaderLayout) {
  const PairDataset d = test::random_dataset(3, 4, 2, 1);
  const auto bytes = save(d);
  ASSERT_GE(bytes.size(), kHeaderSize);
  EXPECT_EQ(std::memcmp(bytes.data(), "RBAG", 4), 0);
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5], 0);
  EXPECT_EQ(bytes[6], static_cast<std::uint8_t>(ArtifactKind::kDataset));
  const ArtifactHeader h = read_header(bytes);
  EXPECT_EQ(h.version, kFormatVersion);
  EXPECT_EQ(h.kind, ArtifactKind::kDataset);
  EXPECT_EQ(h.payload_size, bytes.size() - kHeaderSize);
}

TEST(Persist, DatasetRoundTrip) {
  const PairDataset d = test::random_dataset(5, 9, 3, 2).subset(std::vector<std::size_t>{8, 1, 0, 4});
  EXPECT_EQ(load_dataset(save(d)), d);
}

TEST(Persist, PlanAndAssignmentRoundTrip) {
  const PairDataset d = test::random_dataset(2, 23, 1, 3);
  const ChunkPlan plan = make_chunk_plan(d, 4, 9);
  EXPECT_EQ(load_chunk_plan(save(plan)), plan);
  const ChunkAssignment a = assign_chunks(plan, 4, 10);
  EXPECT_EQ(load_chunk_assignment(save(a)), a);
}

TEST(Persist, ModelAndExtractorRoundTrip) {
  BaseModel m = init_scratch(test::small_topology(), 4);
  m.weights[3] = -0.0;
  m.weights[5] = 1e-310;  // subnormal
  EXPECT_EQ(load_model(save(m)), m);
  PretrainedExtractor p;
  p.topology = m.topology;
  p.weights.assign(m.weights.begin(),
                   m.weights.begin() + static_cast<std::ptrdiff_t>(m.topology.extractor_parameter_count()));
  p.source_seed = 77;
  const PretrainedExtractor back = load_pretrained_extractor(save(p));
  EXPECT_EQ(back, p);
  EXPECT_EQ(back.digest(), p.digest());
}

TEST(Persist, EnsembleRoundTripPredictsIdentically) {
  const PairDataset d = test::random_dataset(10, 40, 4, 5);
  const Ensemble e = small_ensemble(d);
  const Ensemble back = load_ensemble(save(e));
  EXPECT_EQ(back, e);
  const PairDataset inputs = test::random_dataset(50, 50, 4, 6);
  EXPECT_EQ(predict_scores(back, inputs), predict_scores(e, inputs));
}

TEST(Persist, TrialReportsRoundTrip) {
  TrialReport r;
  r.trial = 4;
  r.arm = InitMode::kTransfer;
  r.k = 5;
  r.ensemble_size = 2;
  r.trial_seed = 123456789;
  r.accuracy = 88.125;
  r.base_accuracy = {80.5, 82.0};
  r.base_calibration = {{10.0, 8.0}, {12.5, 9.0}};
  r.training_origins = {{1, 2, 3}, {1, 2, 4}};
  const std::vector<TrialReport> reports = {r, TrialReport{}};
  EXPECT_EQ(load_trial_reports(save(reports)), reports);
}

TEST(Persist, CorruptedByteFailsDigest) {
  const auto good = save(init_scratch(test::small_topology(), 4));
  for (std::size_t pos : {std::size_t{12}, kHeaderSize + 3, good.size() - 1}) {
    auto bad = good;
    bad[pos] ^= 0x01;
    try {
      load_model(bad);
      FAIL() << "expected an error at byte " << pos;
    } catch (const Error& e) {
      EXPECT_THAT(e.what(), HasSubstr("digest mismatch"));
    }
  }
}

TEST(Persist, FutureVersionRefused) {
  auto bytes = save(test::random_dataset(1, 1, 1, 1));
  bytes[4] = 2;
  try {
    load_dataset(bytes);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_THAT(e.what(), HasSubstr("unsupported version"));
  }
}

TEST(Persist, StructuralErrors) {
  const auto model = save(init_scratch(test::small_topology(), 4));
  EXPECT_THROW(load_dataset(model), Error);  // wrong kind
  std::vector<std::uint8_t> short_bytes(model.begin(), model.begin() + 20);
  EXPECT_THROW(load_model(short_bytes), Error);
  auto truncated = model;
  truncated.pop_back();
  EXPECT_THROW(load_model(truncated), Error);
  auto magic = model;
  magic[0] = 'X';
  EXPECT_THROW(load_model(magic), Error);
}

TEST(Persist, FileRoundTrip) {
  test::TempDir dir("persist");
  const auto bytes = save(test::random_dataset(2, 3, 2, 8));
  write_file(dir.path() / "d.rbag", bytes);
  EXPECT_EQ(read_file(dir.path() / "d.rbag"), bytes);
  EXPECT_THROW(read_file(dir.path() / "missing.rbag"), Error);
}

}  // namespace
}  // namespace rbag
