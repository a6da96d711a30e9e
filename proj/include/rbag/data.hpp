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

#ifndef RBAG_DATA_HPP_
#define RBAG_DATA_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "rbag/common.hpp"

namespace rbag {

enum class Label : std::uint8_t { kNegative = 0, kPositive = 1 };

// Read-only view of one (pre, post) observation pair.
struct PairView {
  std::span<const float> pre;
  std::span<const float> post;
  Label label;
};

// Labeled pre/post pairs with positive (P) and negative (N) index sets.
//
// Features are stored as two flat row-major n x d float arrays. A dataset
// produced by a split keeps, per sample, the index it had in its parent
// (`origin`), so that membership can be compared across splits.
class PairDataset {
 public:
  PairDataset() = default;

  // Throws if the arrays disagree on (n, d) or if there is no negative.
  PairDataset(std::size_t dim, std::vector<float> pre, std::vector<float> post,
              std::vector<Label> labels, std::vector<std::size_t> origin = {});

  std::size_t size() const { return labels_.size(); }
  std::size_t dim() const { return dim_; }

  PairView sample(std::size_t i) const;
  std::span<const float> pre(std::size_t i) const;
  std::span<const float> post(std::size_t i) const;
  Label label(std::size_t i) const { return labels_.at(i); }

  const std::vector<std::size_t>& positives() const { return positives_; }
  const std::vector<std::size_t>& negatives() const { return negatives_; }
  // Index of sample i in the dataset this one was derived from (identity
  // for datasets that were not derived).
  std::size_t origin(std::size_t i) const { return origin_.at(i); }
  const std::vector<std::size_t>& origins() const { return origin_; }

  const std::vector<float>& pre_data() const { return pre_; }
  const std::vector<float>& post_data() const { return post_; }
  const std::vector<Label>& labels() const { return labels_; }

  // New dataset holding `indices` (in order); origin() of the result refers
  // to this dataset's origin().
  PairDataset subset(std::span<const std::size_t> indices) const;

  friend bool operator==(const PairDataset&, const PairDataset&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<float> pre_;
  std::vector<float> post_;
  std::vector<Label> labels_;
  std::vector<std::size_t> origin_;
  std::vector<std::size_t> positives_;
  std::vector<std::size_t> negatives_;
};

// Pair difference post - pre is N(0, noise^2 I) for negatives and
// N(separation * u, noise^2 I) for positives; pre is N(0, I).
struct SyntheticSpec {
  std::size_t dim = 16;
  std::size_t n_pos = 1000;
  std::size_t n_neg = 2000;
  double separation = 4.0;
  double noise_scale = 1.0;
  std::uint64_t seed = 1;
  // Change direction u. Drawn uniformly on the sphere from `seed` when unset;
  // normalized when set.
  std::optional<std::vector<double>> direction;

  void validate() const;
};

// Unit vector used by generate_synthetic for `spec`.
std::vector<double> change_direction(const SyntheticSpec& spec);

// Positives occupy indices [0, n_pos), negatives [n_pos, n_pos + n_neg).
PairDataset generate_synthetic(const SyntheticSpec& spec);

// Manifest: CSV with header `pre_path,post_path,label`; relative paths are
// resolved against the manifest's directory.
PairDataset load_manifest(const std::filesystem::path& path);

// Writes `manifest.csv` plus one vector file per observation under
// `directory/vectors/`. Returns the manifest path.
std::filesystem::path export_manifest(const PairDataset& dataset,
                                      const std::filesystem::path& directory);

// Vector file: little-endian u32 length d, then d little-endian float32.
std::vector<float> read_vector_file(const std::filesystem::path& path);
void write_vector_file(const std::filesystem::path& path,
                       std::span<const float> values);

struct KShotDraw {
  std::size_t k = 0;
  std::vector<std::size_t> indices;  // P', in draw order
  std::uint64_t seed = 0;

  friend bool operator==(const KShotDraw&, const KShotDraw&) = default;
};

// k positives sampled without replacement.
KShotDraw draw_k_shot(const PairDataset& dataset, std::size_t k,
                      std::uint64_t seed);

}  // namespace rbag

#endif  // RBAG_DATA_HPP_
