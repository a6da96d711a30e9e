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

#ifndef RBAG_PARTITION_HPP_
#define RBAG_PARTITION_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rbag/data.hpp"

namespace rbag {

// The shuffled negative set split into floor(|N| / k) chunks of exactly k
// indices. Chunks are numbered from 1.
struct ChunkPlan {
  std::size_t k = 0;
  std::vector<std::vector<std::size_t>> chunks;
  std::vector<std::size_t> dropped;  // |N| mod k leftovers
  std::uint64_t seed = 0;

  std::size_t chunk_count() const { return chunks.size(); }
  // 1-based access.
  const std::vector<std::size_t>& chunk(std::size_t number) const;

  friend bool operator==(const ChunkPlan&, const ChunkPlan&) = default;
};

// Chunk numbers N'_1..N'_|M| picked without replacement.
struct ChunkAssignment {
  std::size_t model_count = 0;
  std::vector<std::size_t> assigned;  // 1-based chunk numbers
  std::uint64_t seed = 0;

  friend bool operator==(const ChunkAssignment&, const ChunkAssignment&) = default;
};

ChunkPlan make_chunk_plan(const PairDataset& dataset, std::size_t k, std::uint64_t seed);

// The assigned chunks are the first `model_count` entries of a seeded
// permutation of all chunk numbers, so a smaller assignment with the same seed
// is always a prefix of a larger one.
ChunkAssignment assign_chunks(const ChunkPlan& plan, std::size_t model_count,
                              std::uint64_t seed);

// D_i = P' followed by N'_i, for 1 <= model <= |M|.
std::vector<std::size_t> base_training_set(const PairDataset& dataset, const KShotDraw& draw,
                                           const ChunkPlan& plan,
                                           const ChunkAssignment& assignment,
                                           std::size_t model);

// Human-readable audit records (JSON).
std::string to_json(const ChunkPlan& plan);
std::string to_json(const ChunkAssignment& assignment);
ChunkPlan chunk_plan_from_json(const std::string& text);
ChunkAssignment chunk_assignment_from_json(const std::string& text);

}  // namespace rbag

#endif  // RBAG_PARTITION_HPP_
