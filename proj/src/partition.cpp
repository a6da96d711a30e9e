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

#include "rbag/partition.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

#include "json.hpp"

namespace rbag {

const std::vector<std::size_t>& ChunkPlan::chunk(std::size_t number) const {
  if (number < 1 || number > chunks.size()) {
    throw Error("ChunkPlan: chunk number " + std::to_string(number) + " outside 1.." +
                std::to_string(chunks.size()));
  }
  return chunks[number - 1];
}

ChunkPlan make_chunk_plan(const PairDataset& dataset, std::size_t k, std::uint64_t seed) {
  const auto& negatives = dataset.negatives();
  if (k < 1) throw Error("make_chunk_plan: k must be >= 1");
  if (k > negatives.size()) {
    throw Error("make_chunk_plan: k=" + std::to_string(k) + " exceeds |N|=" +
                std::to_string(negatives.size()) + " (no chunk could be formed)");
  }
  std::vector<std::size_t> shuffled = negatives;
  Rng rng(seed);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);

  ChunkPlan plan;
  plan.k = k;
  plan.seed = seed;
  const std::size_t count = shuffled.size() / k;
  plan.chunks.reserve(count);
  for (std::size_t c = 0; c < count; ++c) {
    plan.chunks.emplace_back(shuffled.begin() + static_cast<std::ptrdiff_t>(c * k),
                             shuffled.begin() + static_cast<std::ptrdiff_t>((c + 1) * k));
  }
  plan.dropped.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(count * k), shuffled.end());
  return plan;
}

ChunkAssignment assign_chunks(const ChunkPlan& plan, std::size_t model_count,
                              std::uint64_t seed) {
  if (model_count < 1) throw Error("assign_chunks: model_count must be >= 1");
  if (model_count > plan.chunk_count()) {
    throw Error("assign_chunks: ensemble size " + std::to_string(model_count) +
                " exceeds the " + std::to_string(plan.chunk_count()) + " available chunks");
  }
  std::vector<std::size_t> numbers(plan.chunk_count());
  std::iota(numbers.begin(), numbers.end(), std::size_t{1});
  Rng rng(seed);
  // Partial Fisher-Yates over the full permutation keeps prefixes stable
  // across model counts.
  for (std::size_t i = 0; i < model_count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, numbers.size() - 1);
    std::swap(numbers[i], numbers[pick(rng)]);
  }
  numbers.resize(model_count);
  return ChunkAssignment{model_count, std::move(numbers), seed};
}

std::vector<std::size_t> base_training_set(const PairDataset& dataset, const KShotDraw& draw,
                                           const ChunkPlan& plan,
                                           const ChunkAssignment& assignment,
                                           std::size_t model) {
  if (model < 1 || model > assignment.model_count) {
    throw Error("base_training_set: model index " + std::to_string(model) + " outside 1.." +
                std::to_string(assignment.model_count));
  }
  if (draw.k != plan.k) {
    throw Error("base_training_set: k-shot draw size " + std::to_string(draw.k) +
                " differs from chunk size " + std::to_string(plan.k));
  }
  const auto& chunk = plan.chunk(assignment.assigned[model - 1]);
  std::vector<std::size_t> out;
  out.reserve(draw.indices.size() + chunk.size());
  for (std::size_t i : draw.indices) {
    if (i >= dataset.size() || dataset.label(i) != Label::kPositive) {
      throw Error("base_training_set: k-shot index " + std::to_string(i) + " is not a positive");
    }
    out.push_back(i);
  }
  for (std::size_t i : chunk) {
    if (i >= dataset.size() || dataset.label(i) != Label::kNegative) {
      throw Error("base_training_set: chunk index " + std::to_string(i) + " is not a negative");
    }
    out.push_back(i);
  }
  return out;
}

std::string to_json(const ChunkPlan& plan) {
  nlohmann::ordered_json j;
  j["kind"] = "chunk_plan";
  j["seed"] = plan.seed;
  j["k"] = plan.k;
  j["chunk_count"] = plan.chunk_count();
  j["chunks"] = plan.chunks;
  j["dropped"] = plan.dropped;
  return j.dump(2);
}

std::string to_json(const ChunkAssignment& assignment) {
  nlohmann::ordered_json j;
  j["kind"] = "chunk_assignment";
  j["seed"] = assignment.seed;
  j["model_count"] = assignment.model_count;
  j["assigned"] = assignment.assigned;
  return j.dump(2);
}

ChunkPlan chunk_plan_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("kind") != "chunk_plan") throw Error("not a chunk_plan record");
    ChunkPlan plan;
    plan.seed = j.at("seed").get<std::uint64_t>();
    plan.k = j.at("k").get<std::size_t>();
    plan.chunks = j.at("chunks").get<std::vector<std::vector<std::size_t>>>();
    plan.dropped = j.at("dropped").get<std::vector<std::size_t>>();
    for (const auto& c : plan.chunks) {
      if (c.size() != plan.k) throw Error("chunk size differs from k");
    }
    return plan;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("chunk plan record: ") + e.what());
  }
}

ChunkAssignment chunk_assignment_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("kind") != "chunk_assignment") throw Error("not a chunk_assignment record");
    ChunkAssignment a;
    a.seed = j.at("seed").get<std::uint64_t>();
    a.model_count = j.at("model_count").get<std::size_t>();
    a.assigned = j.at("assigned").get<std::vector<std::size_t>>();
    if (a.assigned.size() != a.model_count) throw Error("assigned count differs from model_count");
    std::unordered_set<std::size_t> seen(a.assigned.begin(), a.assigned.end());
    if (seen.size() != a.assigned.size()) throw Error("assigned chunk numbers repeat");
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("chunk assignment record: ") + e.what());
  }
}

}  // namespace rbag
