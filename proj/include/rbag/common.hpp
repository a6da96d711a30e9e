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

#ifndef RBAG_COMMON_HPP_
#define RBAG_COMMON_HPP_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rbag {

// Raised for every contract violation, malformed input and runtime failure.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Child seed for `key` under `parent`:
//   derive_seed(p, k) = splitmix64(p ^ splitmix64(k)).
// Every stage of a trial (k-shot draw, chunk plan, chunk assignment, base
// model i) gets its own key, so results never depend on execution order.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t key) {
  return splitmix64(parent ^ splitmix64(key));
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample (n-1) standard deviation
  std::size_t count = 0;
};

// Welford accumulation. Requires at least two values.
MeanStd sample_mean_std(std::span<const double> values);

}  // namespace rbag

#endif  // RBAG_COMMON_HPP_
