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

#ifndef RBAG_PERSIST_HPP_
#define RBAG_PERSIST_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "rbag/data.hpp"
#include "rbag/ensemble.hpp"
#include "rbag/harness.hpp"
#include "rbag/learner.hpp"
#include "rbag/partition.hpp"

namespace rbag {

// `.rbag` container: a 64-byte header followed by a little-endian payload.
// Layout is documented in docs/rbag_format.md.
enum class ArtifactKind : std::uint16_t {
  kDataset = 1,
  kChunkPlan = 2,
  kChunkAssignment = 3,
  kModel = 4,
  kPretrainedExtractor = 5,
  kEnsemble = 6,
  kTrialReports = 7,
};

inline constexpr std::uint16_t kFormatVersion = 1;
inline constexpr std::size_t kHeaderSize = 64;

struct ArtifactHeader {
  std::uint16_t version = kFormatVersion;
  ArtifactKind kind = ArtifactKind::kDataset;
  std::uint64_t seed0 = 0;
  std::uint64_t seed1 = 0;
  std::uint64_t payload_size = 0;
  std::array<std::uint8_t, 32> digest{};  // SHA-256 of header[0, 32) + payload
};

// Parses and verifies the header (magic, version, length, digest).
ArtifactHeader read_header(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> save(const PairDataset& dataset);
std::vector<std::uint8_t> save(const ChunkPlan& plan);
std::vector<std::uint8_t> save(const ChunkAssignment& assignment);
std::vector<std::uint8_t> save(const BaseModel& model);
std::vector<std::uint8_t> save(const PretrainedExtractor& extractor);
std::vector<std::uint8_t> save(const Ensemble& ensemble);
std::vector<std::uint8_t> save(const std::vector<TrialReport>& reports);

PairDataset load_dataset(std::span<const std::uint8_t> bytes);
ChunkPlan load_chunk_plan(std::span<const std::uint8_t> bytes);
ChunkAssignment load_chunk_assignment(std::span<const std::uint8_t> bytes);
BaseModel load_model(std::span<const std::uint8_t> bytes);
PretrainedExtractor load_pretrained_extractor(std::span<const std::uint8_t> bytes);
Ensemble load_ensemble(std::span<const std::uint8_t> bytes);
std::vector<TrialReport> load_trial_reports(std::span<const std::uint8_t> bytes);

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace rbag

#endif  // RBAG_PERSIST_HPP_
