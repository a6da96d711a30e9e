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

// Little-endian primitive encoding shared by the vector-file and .rbag
// formats.
#ifndef RBAG_SRC_BYTE_IO_HPP_
#define RBAG_SRC_BYTE_IO_HPP_

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rbag/common.hpp"

namespace rbag::detail {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u64(s.size());
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  void raw(std::span<const std::uint8_t> b) {
    bytes_.insert(bytes_.end(), b.begin(), b.end());
  }
  void blob(std::span<const std::uint8_t> b) {
    u64(b.size());
    raw(b);
  }
  void f64s(std::span<const double> v) {
    u64(v.size());
    for (double x : v) f64(x);
  }
  void f32s(std::span<const float> v) {
    u64(v.size());
    for (float x : v) f32(x);
  }
  void sizes(std::span<const std::size_t> v) {
    u64(v.size());
    for (std::size_t x : v) u64(x);
  }

  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const auto n = length(1);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::span<const std::uint8_t> blob() {
    const auto n = length(1);
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  std::vector<double> f64s() {
    std::vector<double> v(length(8));
    for (auto& x : v) x = f64();
    return v;
  }
  std::vector<float> f32s() {
    std::vector<float> v(length(4));
    for (auto& x : v) x = f32();
    return v;
  }
  std::vector<std::size_t> sizes() {
    std::vector<std::size_t> v(length(8));
    for (auto& x : v) x = static_cast<std::size_t>(u64());
    return v;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::size_t length(std::size_t element_size) {
    const std::uint64_t n = u64();
    if (n > remaining() / element_size) throw Error("truncated payload: bad length prefix");
    return static_cast<std::size_t>(n);
  }
  std::uint64_t get(int n) {
    if (remaining() < static_cast<std::size_t>(n)) throw Error("truncated payload");
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace rbag::detail

#endif  // RBAG_SRC_BYTE_IO_HPP_
