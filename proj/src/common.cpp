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

#include "rbag/common.hpp"

#include <cmath>

namespace rbag {

MeanStd sample_mean_std(std::span<const double> values) {
  if (values.size() < 2) {
    throw Error("sample_mean_std: need at least 2 values, got " +
                std::to_string(values.size()));
  }
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t n = 0;
  for (double x : values) {
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }
  MeanStd out;
  out.mean = mean;
  out.std = std::sqrt(std::max(0.0, m2 / static_cast<double>(n - 1)));
  out.count = n;
  return out;
}

}  // namespace rbag
