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

#ifndef RBAG_CALIBRATE_HPP_
#define RBAG_CALIBRATE_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rbag/common.hpp"
#include "rbag/data.hpp"

namespace rbag {

struct PredictionRecord {
  double confidence = 0.5;  // max(score, 1 - score), in [0.5, 1]
  bool correct = false;
};

// Top-label record of a binary score under the >= threshold decision rule.
PredictionRecord make_record(double score, Label truth, double threshold = 0.5);

struct CalibrationBin {
  std::size_t count = 0;
  double mean_confidence = 0.0;
  double accuracy = 0.0;
};

struct CalibrationReport {
  double rms_error = 0.0;  // percent
  double mad_error = 0.0;  // percent
  std::vector<CalibrationBin> bins;
};

inline constexpr std::size_t kDefaultCalibrationBins = 15;

// Records are stably sorted by confidence and cut into `bin_count`
// equal-mass bins; bin b holds sorted positions [floor(b n / B), floor((b+1) n / B)).
// With gap g_b = |mean confidence - accuracy| and weight w_b = n_b / n:
//   MAD = sum w_b g_b,  RMS = sqrt(sum w_b g_b^2),  both in percent.
CalibrationReport calibration_errors(std::span<const PredictionRecord> records,
                                     std::size_t bin_count = kDefaultCalibrationBins);

struct CalibrationAggregate {
  MeanStd rms;
  MeanStd mad;
};

CalibrationAggregate aggregate_calibration(std::span<const CalibrationReport> reports);

std::string calibration_json(const CalibrationReport& report);
std::string calibration_bins_csv(const CalibrationReport& report);

}  // namespace rbag

#endif  // RBAG_CALIBRATE_HPP_
