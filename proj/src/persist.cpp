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

#include <openssl/evp.h>

#include <cstring>
#include <fstream>
#include <iterator>

#include "byte_io.hpp"

namespace rbag {

namespace {

using detail::ByteReader;
using detail::ByteWriter;

constexpr std::array<std::uint8_t, 4> kMagic = {'R', 'B', 'A', 'G'};

std::array<std::uint8_t, 32> sha256(std::span<const std::uint8_t> head,
                                    std::span<const std::uint8_t> payload) {
  std::array<std::uint8_t, 32> out{};
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr) throw Error("persist: cannot allocate digest context");
  unsigned int len = 0;
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, head.data(), head.size()) == 1 &&
                  EVP_DigestUpdate(ctx, payload.data(), payload.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, out.data(), &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok || len != out.size()) throw Error("persist: SHA-256 failed");
  return out;
}

std::vector<std::uint8_t> seal(ArtifactKind kind, std::uint64_t seed0, std::uint64_t seed1,
                               std::span<const std::uint8_t> payload) {
  ByteWriter head;
  head.raw(kMagic);
  head.u16(kFormatVersion);
  head.u16(static_cast<std::uint16_t>(kind));
  head.u64(seed0);
  head.u64(seed1);
  head.u64(payload.size());
  const auto digest = sha256(head.bytes(), payload);
  head.raw(digest);
  std::vector<std::uint8_t> out = std::move(head.bytes());
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

const char* kind_name(ArtifactKind kind) {
  switch (kind) {
    case ArtifactKind::kDataset: return "dataset";
    case ArtifactKind::kChunkPlan: return "chunk plan";
    case ArtifactKind::kChunkAssignment: return "chunk assignment";
    case ArtifactKind::kModel: return "model";
    case ArtifactKind::kPretrainedExtractor: return "pretrained extractor";
    case ArtifactKind::kEnsemble: return "ensemble";
    case ArtifactKind::kTrialReports: return "trial reports";
  }
  return "unknown";
}

// Verified payload of an artifact that must be of `kind`.
std::span<const std::uint8_t> open(std::span<const std::uint8_t> bytes, ArtifactKind kind,
                                   ArtifactHeader* header_out = nullptr) {
  const ArtifactHeader header = read_header(bytes);
  if (header.kind != kind) {
    throw Error(std::string("persist: expected a ") + kind_name(kind) + " artifact, found a " +
                kind_name(header.kind));
  }
  if (header_out) *header_out = header;
  return bytes.subspan(kHeaderSize);
}

void finish(const ByteReader& r) {
  if (!r.done()) throw Error("persist: trailing bytes after payload");
}

void put_topology(ByteWriter& w, const SiameseTopology& t) {
  w.u64(t.input_dim);
  w.sizes(t.extractor_widths);
  w.u64(t.penultimate);
}

SiameseTopology get_topology(ByteReader& r) {
  SiameseTopology t;
  t.input_dim = static_cast<std::size_t>(r.u64());
  t.extractor_widths = r.sizes();
  t.penultimate = static_cast<std::size_t>(r.u64());
  t.validate();
  return t;
}

void put_config(ByteWriter& w, const TrainConfig& c) {
  w.f64(c.learning_rate);
  w.u64(c.iterations);
  w.f64(c.alpha);
  w.f64(c.temperature);
  w.f64(c.adam_beta1);
  w.f64(c.adam_beta2);
  w.f64(c.adam_eps);
  w.u64(c.seed);
}

TrainConfig get_config(ByteReader& r) {
  TrainConfig c;
  c.learning_rate = r.f64();
  c.iterations = static_cast<std::size_t>(r.u64());
  c.alpha = r.f64();
  c.temperature = r.f64();
  c.adam_beta1 = r.f64();
  c.adam_beta2 = r.f64();
  c.adam_eps = r.f64();
  c.seed = r.u64();
  return c;
}

InitMode get_mode(ByteReader& r) {
  const auto v = r.u8();
  if (v > 1) throw Error("persist: unknown init mode " + std::to_string(v));
  return static_cast<InitMode>(v);
}

}  // namespace

ArtifactHeader read_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderSize) throw Error("persist: artifact shorter than its 64-byte header");
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw Error("persist: not an .rbag artifact (bad magic)");
  }
  ByteReader r(bytes.subspan(4, 28));
  ArtifactHeader h;
  h.version = r.u16();
  if (h.version != kFormatVersion) {
    throw Error("persist: unsupported version " + std::to_string(h.version) +
                " (this build reads version " + std::to_string(kFormatVersion) + ")");
  }
  const auto kind = r.u16();
  if (kind < 1 || kind > 7) throw Error("persist: unknown artifact kind " + std::to_string(kind));
  h.kind = static_cast<ArtifactKind>(kind);
  h.seed0 = r.u64();
  h.seed1 = r.u64();
  h.payload_size = r.u64();
  std::memcpy(h.digest.data(), bytes.data() + 32, 32);
  if (h.payload_size != bytes.size() - kHeaderSize) {
    throw Error("persist: payload length " + std::to_string(bytes.size() - kHeaderSize) +
                " differs from the declared " + std::to_string(h.payload_size));
  }
  const auto expect = sha256(bytes.subspan(0, 32), bytes.subspan(kHeaderSize));
  if (expect != h.digest) throw Error("persist: digest mismatch (artifact is corrupted)");
  return h;
}

std::vector<std::uint8_t> save(const PairDataset& d) {
  ByteWriter w;
  w.u64(d.dim());
  w.f32s(d.pre_data());
  w.f32s(d.post_data());
  w.u64(d.size());
  for (Label l : d.labels()) w.u8(static_cast<std::uint8_t>(l));
  w.sizes(d.origins());
  return seal(ArtifactKind::kDataset, 0, 0, w.bytes());
}

PairDataset load_dataset(std::span<const std::uint8_t> bytes) {
  ByteReader r(open(bytes, ArtifactKind::kDataset));
  const auto dim = static_cast<std::size_t>(r.u64());
  auto pre = r.f32s();
  auto post = r.f32s();
  const auto n = static_cast<std::size_t>(r.u64());
  if (n > r.remaining()) throw Error("persist: truncated label block");
  std::vector<Label> labels(n);
  for (auto& l : labels) {
    const auto v = r.u8();
    if (v > 1) throw Error("persist: label outside {0, 1}");
    l = static_cast<Label>(v);
  }
  auto origin = r.sizes();
  finish(r);
  return PairDataset(dim, std::move(pre), std::move(post), std::move(labels), std::move(origin));
}

std::vector<std::uint8_t> save(const ChunkPlan& p) {
  ByteWriter w;
  w.u64(p.k);
  w.u64(p.chunks.size());
  for (const auto& c : p.chunks) w.sizes(c);
  w.sizes(p.dropped);
  return seal(ArtifactKind::kChunkPlan, p.seed, 0, w.bytes());
}

ChunkPlan load_chunk_plan(std::span<const std::uint8_t> bytes) {
  ArtifactHeader h;
  ByteReader r(open(bytes, ArtifactKind::kChunkPlan, &h));
  ChunkPlan p;
  p.seed = h.seed0;
  p.k = static_cast<std::size_t>(r.u64());
  const auto count = r.u64();
  if (count > r.remaining() / 8) throw Error("persist: bad chunk count");
  for (std::uint64_t i = 0; i < count; ++i) {
    p.chunks.push_back(r.sizes());
    if (p.chunks.back().size() != p.k) throw Error("persist: chunk size differs from k");
  }
  p.dropped = r.sizes();
  finish(r);
  return p;
}

std::vector<std::uint8_t> save(const ChunkAssignment& a) {
  ByteWriter w;
  w.u64(a.model_count);
  w.sizes(a.assigned);
  return seal(ArtifactKind::kChunkAssignment, a.seed, 0, w.bytes());
}

ChunkAssignment load_chunk_assignment(std::span<const std::uint8_t> bytes) {
  ArtifactHeader h;
  ByteReader r(open(bytes, ArtifactKind::kChunkAssignment, &h));
  ChunkAssignment a;
  a.seed = h.seed0;
  a.model_count = static_cast<std::size_t>(r.u64());
  a.assigned = r.sizes();
  finish(r);
  if (a.assigned.size() != a.model_count) throw Error("persist: assignment count mismatch");
  return a;
}

std::vector<std::uint8_t> save(const BaseModel& m) {
  m.validate();
  ByteWriter w;
  put_topology(w, m.topology);
  w.u8(static_cast<std::uint8_t>(m.init_mode));
  w.u8(m.trained ? 1 : 0);
  w.f64s(m.weights);
  return seal(ArtifactKind::kModel, m.seed, 0, w.bytes());
}

BaseModel load_model(std::span<const std::uint8_t> bytes) {
  ArtifactHeader h;
  ByteReader r(open(bytes, ArtifactKind::kModel, &h));
  BaseModel m;
  m.seed = h.seed0;
  m.topology = get_topology(r);
  m.init_mode = get_mode(r);
  m.trained = r.u8() != 0;
  m.weights = r.f64s();
  finish(r);
  m.validate();
  return m;
}

std::vector<std::uint8_t> save(const PretrainedExtractor& e) {
  ByteWriter w;
  put_topology(w, e.topology);
  w.f64s(e.weights);
  return seal(ArtifactKind::kPretrainedExtractor, e.source_seed, 0, w.bytes());
}

PretrainedExtractor load_pretrained_extractor(std::span<const std::uint8_t> bytes) {
  ArtifactHeader h;
  ByteReader r(open(bytes, ArtifactKind::kPretrainedExtractor, &h));
  PretrainedExtractor e;
  e.source_seed = h.seed0;
  e.topology = get_topology(r);
  e.weights = r.f64s();
  finish(r);
  if (e.weights.size() != e.topology.extractor_parameter_count()) {
    throw Error("persist: extractor weights do not match topology");
  }
  return e;
}

std::vector<std::uint8_t> save(const Ensemble& e) {
  e.validate();
  const auto& p = e.provenance;
  ByteWriter w;
  w.u64(p.draw.k);
  w.u64(p.draw.seed);
  w.sizes(p.draw.indices);
  w.blob(save(p.plan));
  w.blob(save(p.assignment));
  put_config(w, p.config);
  w.u64(p.model_seeds.size());
  for (auto s : p.model_seeds) w.u64(s);
  w.u64(e.models.size());
  for (const auto& m : e.models) w.blob(save(m));
  return seal(ArtifactKind::kEnsemble, p.trial_seed, 0, w.bytes());
}

Ensemble load_ensemble(std::span<const std::uint8_t> bytes) {
  ArtifactHeader h;
  ByteReader r(open(bytes, ArtifactKind::kEnsemble, &h));
  Ensemble e;
  auto& p = e.provenance;
  p.trial_seed = h.seed0;
  p.draw.k = static_cast<std::size_t>(r.u64());
  p.draw.seed = r.u64();
  p.draw.indices = r.sizes();
  p.plan = load_chunk_plan(r.blob());
  p.assignment = load_chunk_assignment(r.blob());
  p.config = get_config(r);
  const auto seeds = r.u64();
  if (seeds > r.remaining() / 8) throw Error("persist: bad model seed count");
  for (std::uint64_t i = 0; i < seeds; ++i) p.model_seeds.push_back(r.u64());
  const auto models = r.u64();
  if (models > r.remaining() / 8) throw Error("persist: bad model count");
  for (std::uint64_t i = 0; i < models; ++i) e.models.push_back(load_model(r.blob()));
  finish(r);
  e.validate();
  return e;
}

std::vector<std::uint8_t> save(const std::vector<TrialReport>& reports) {
  ByteWriter w;
  w.u64(reports.size());
  for (const auto& t : reports) {
    w.u64(t.trial);
    w.u8(static_cast<std::uint8_t>(t.arm));
    w.u64(t.k);
    w.u64(t.ensemble_size);
    w.u64(t.trial_seed);
    w.f64(t.accuracy);
    w.f64s(t.base_accuracy);
    w.u64(t.base_calibration.size());
    for (const auto& c : t.base_calibration) {
      w.f64(c.rms_error);
      w.f64(c.mad_error);
    }
    w.u64(t.training_origins.size());
    for (const auto& o : t.training_origins) w.sizes(o);
  }
  return seal(ArtifactKind::kTrialReports, 0, 0, w.bytes());
}

std::vector<TrialReport> load_trial_reports(std::span<const std::uint8_t> bytes) {
  ByteReader r(open(bytes, ArtifactKind::kTrialReports));
  const auto count = r.u64();
  if (count > r.remaining()) throw Error("persist: bad report count");
  std::vector<TrialReport> out;
  for (std::uint64_t i = 0; i < count; ++i) {
    TrialReport t;
    t.trial = static_cast<std::size_t>(r.u64());
    t.arm = get_mode(r);
    t.k = static_cast<std::size_t>(r.u64());
    t.ensemble_size = static_cast<std::size_t>(r.u64());
    t.trial_seed = r.u64();
    t.accuracy = r.f64();
    t.base_accuracy = r.f64s();
    const auto cal = r.u64();
    if (cal > r.remaining() / 16) throw Error("persist: bad calibration count");
    for (std::uint64_t c = 0; c < cal; ++c) {
      const double rms = r.f64();
      const double mad = r.f64();
      t.base_calibration.push_back({rms, mad});
    }
    const auto sets = r.u64();
    if (sets > r.remaining() / 8) throw Error("persist: bad training-set count");
    for (std::uint64_t s = 0; s < sets; ++s) t.training_origins.push_back(r.sizes());
    out.push_back(std::move(t));
  }
  finish(r);
  return out;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + path.string());
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
}

}  // namespace rbag
