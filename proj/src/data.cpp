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

#include "rbag/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>
#include <string>

#include "byte_io.hpp"

namespace rbag {

PairDataset::PairDataset(std::size_t dim, std::vector<float> pre,
                         std::vector<float> post, std::vector<Label> labels,
                         std::vector<std::size_t> origin)
    : dim_(dim),
      pre_(std::move(pre)),
      post_(std::move(post)),
      labels_(std::move(labels)),
      origin_(std::move(origin)) {
  if (dim_ == 0) throw Error("PairDataset: dimension must be >= 1");
  const std::size_t n = labels_.size();
  if (pre_.size() != n * dim_ || post_.size() != n * dim_) {
    throw Error("PairDataset: feature arrays do not match " + std::to_string(n) +
                " samples of dimension " + std::to_string(dim_));
  }
  if (origin_.empty()) {
    origin_.resize(n);
    std::iota(origin_.begin(), origin_.end(), std::size_t{0});
  } else if (origin_.size() != n) {
    throw Error("PairDataset: origin index count does not match sample count");
  }
  for (std::size_t i = 0; i < n; ++i) {
    switch (labels_[i]) {
      case Label::kPositive: positives_.push_back(i); break;
      case Label::kNegative: negatives_.push_back(i); break;
      default: throw Error("PairDataset: label of sample " + std::to_string(i) + " is not 0/1");
    }
  }
  if (negatives_.empty()) throw Error("PairDataset: needs at least one negative pair (|N| >= 1)");
}

std::span<const float> PairDataset::pre(std::size_t i) const {
  if (i >= size()) throw Error("PairDataset: sample index out of range");
  return std::span<const float>(pre_).subspan(i * dim_, dim_);
}

std::span<const float> PairDataset::post(std::size_t i) const {
  if (i >= size()) throw Error("PairDataset: sample index out of range");
  return std::span<const float>(post_).subspan(i * dim_, dim_);
}

PairView PairDataset::sample(std::size_t i) const { return {pre(i), post(i), label(i)}; }

PairDataset PairDataset::subset(std::span<const std::size_t> indices) const {
  std::vector<float> pre, post;
  std::vector<Label> labels;
  std::vector<std::size_t> origin;
  pre.reserve(indices.size() * dim_);
  post.reserve(indices.size() * dim_);
  for (std::size_t i : indices) {
    auto a = this->pre(i);
    auto b = this->post(i);
    pre.insert(pre.end(), a.begin(), a.end());
    post.insert(post.end(), b.begin(), b.end());
    labels.push_back(labels_[i]);
    origin.push_back(origin_[i]);
  }
  return PairDataset(dim_, std::move(pre), std::move(post), std::move(labels),
                     std::move(origin));
}

void SyntheticSpec::validate() const {
  if (dim < 1) throw Error("SyntheticSpec: dim must be >= 1");
  if (n_neg < 1) throw Error("SyntheticSpec: n_neg must be >= 1");
  if (!(separation >= 0.0) || !std::isfinite(separation)) {
    throw Error("SyntheticSpec: separation must be a finite non-negative number");
  }
  if (!(noise_scale > 0.0) || !std::isfinite(noise_scale)) {
    throw Error("SyntheticSpec: noise_scale must be a finite positive number");
  }
  if (direction) {
    if (direction->size() != dim) throw Error("SyntheticSpec: direction length must equal dim");
    double norm2 = 0.0;
    for (double x : *direction) norm2 += x * x;
    if (!(norm2 > 0.0) || !std::isfinite(norm2)) {
      throw Error("SyntheticSpec: direction must be a finite nonzero vector");
    }
  }
}

std::vector<double> change_direction(const SyntheticSpec& spec) {
  spec.validate();
  std::vector<double> u;
  if (spec.direction) {
    u = *spec.direction;
  } else {
    Rng rng(derive_seed(spec.seed, 0xD1EC7104ULL));
    std::normal_distribution<double> normal(0.0, 1.0);
    double norm2 = 0.0;
    while (!(norm2 > 0.0)) {
      u.assign(spec.dim, 0.0);
      norm2 = 0.0;
      for (auto& x : u) {
        x = normal(rng);
        norm2 += x * x;
      }
    }
  }
  double norm2 = 0.0;
  for (double x : u) norm2 += x * x;
  const double inv = 1.0 / std::sqrt(norm2);
  for (auto& x : u) x *= inv;
  return u;
}

PairDataset generate_synthetic(const SyntheticSpec& spec) {
  const std::vector<double> u = change_direction(spec);
  const std::size_t n = spec.n_pos + spec.n_neg;
  const std::size_t d = spec.dim;
  std::vector<float> pre(n * d), post(n * d);
  std::vector<Label> labels(n);
  Rng rng(derive_seed(spec.seed, 0x5A3B1E5ULL));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const bool positive = i < spec.n_pos;
    labels[i] = positive ? Label::kPositive : Label::kNegative;
    const double shift = positive ? spec.separation : 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double x = normal(rng);
      const double change = shift * u[j] + spec.noise_scale * normal(rng);
      pre[i * d + j] = static_cast<float>(x);
      post[i * d + j] = static_cast<float>(x + change);
    }
  }
  return PairDataset(d, std::move(pre), std::move(post), std::move(labels));
}

std::vector<float> read_vector_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open vector file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  detail::ByteReader reader(bytes);
  if (reader.remaining() < 4) throw Error("vector file " + path.string() + " is truncated");
  const std::uint32_t d = reader.u32();
  if (reader.remaining() != std::size_t{d} * 4) {
    throw Error("vector file " + path.string() + " declares length " + std::to_string(d) +
                " but holds " + std::to_string(reader.remaining()) + " payload bytes");
  }
  std::vector<float> out(d);
  for (auto& x : out) x = reader.f32();
  return out;
}

void write_vector_file(const std::filesystem::path& path, std::span<const float> values) {
  detail::ByteWriter writer;
  writer.u32(static_cast<std::uint32_t>(values.size()));
  for (float x : values) writer.f32(x);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write vector file " + path.string());
  out.write(reinterpret_cast<const char*>(writer.bytes().data()),
            static_cast<std::streamsize>(writer.bytes().size()));
  if (!out) throw Error("failed writing vector file " + path.string());
}

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

PairDataset load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open manifest " + path.string());
  const auto base = path.parent_path();
  std::string line;
  if (!std::getline(in, line) || trim(line) != "pre_path,post_path,label") {
    throw Error("manifest " + path.string() +
                ": row 1 must be the header `pre_path,post_path,label`");
  }
  std::size_t dim = 0;
  std::vector<float> pre, post;
  std::vector<Label> labels;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const std::string where = "manifest " + path.string() + " row " + std::to_string(row);
    const auto fields = split_csv_row(line);
    if (fields.size() != 3) {
      throw Error(where + ": expected 3 fields, got " + std::to_string(fields.size()));
    }
    Label label;
    if (fields[2] == "0") {
      label = Label::kNegative;
    } else if (fields[2] == "1") {
      label = Label::kPositive;
    } else {
      throw Error(where + ": label must be 0 or 1, got '" + fields[2] + "'");
    }
    auto resolve = [&](const std::string& p) {
      std::filesystem::path fp(p);
      return fp.is_absolute() ? fp : base / fp;
    };
    std::vector<float> a, b;
    try {
      a = read_vector_file(resolve(fields[0]));
      b = read_vector_file(resolve(fields[1]));
    } catch (const Error& e) {
      throw Error(where + ": " + e.what());
    }
    if (a.empty()) throw Error(where + ": vectors must have length >= 1");
    if (dim == 0) dim = a.size();
    if (a.size() != dim || b.size() != dim) {
      throw Error(where + ": inconsistent dimensions (expected " + std::to_string(dim) +
                  ", got pre " + std::to_string(a.size()) + " / post " +
                  std::to_string(b.size()) + ")");
    }
    pre.insert(pre.end(), a.begin(), a.end());
    post.insert(post.end(), b.begin(), b.end());
    labels.push_back(label);
  }
  if (labels.empty()) throw Error("manifest " + path.string() + " has no rows (|N| >= 1 required)");
  try {
    return PairDataset(dim, std::move(pre), std::move(post), std::move(labels));
  } catch (const Error& e) {
    throw Error("manifest " + path.string() + ": " + e.what());
  }
}

std::filesystem::path export_manifest(const PairDataset& dataset,
                                      const std::filesystem::path& directory) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(directory / "vectors", ec);
  if (ec) throw Error("cannot create " + (directory / "vectors").string() + ": " + ec.message());
  const auto manifest = directory / "manifest.csv";
  std::ofstream out(manifest, std::ios::trunc);
  if (!out) throw Error("cannot write manifest " + manifest.string());
  out << "pre_path,post_path,label\n";
  char name[64];
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    std::snprintf(name, sizeof(name), "%06zu", i);
    const std::string pre_rel = std::string("vectors/") + name + "_pre.vec";
    const std::string post_rel = std::string("vectors/") + name + "_post.vec";
    write_vector_file(directory / pre_rel, dataset.pre(i));
    write_vector_file(directory / post_rel, dataset.post(i));
    out << pre_rel << ',' << post_rel << ','
        << (dataset.label(i) == Label::kPositive ? '1' : '0') << '\n';
  }
  if (!out) throw Error("failed writing manifest " + manifest.string());
  return manifest;
}

KShotDraw draw_k_shot(const PairDataset& dataset, std::size_t k, std::uint64_t seed) {
  const auto& positives = dataset.positives();
  if (k < 1) throw Error("draw_k_shot: k must be >= 1");
  if (k > positives.size()) {
    throw Error("draw_k_shot: k=" + std::to_string(k) + " exceeds |P|=" +
                std::to_string(positives.size()));
  }
  std::vector<std::size_t> pool = positives;
  Rng rng(seed);
  // Partial Fisher-Yates: the first k slots are a uniform sample.
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(k);
  return KShotDraw{k, std::move(pool), seed};
}

}  // namespace rbag
