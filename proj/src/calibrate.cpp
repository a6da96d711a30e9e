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

#include "rbag/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace rbag {

PredictionRecord make_record(double score, Label truth, double threshold) {
  PredictionRecord r;
  r.confidence = std::max(score, 1.0 - score);
  r.correct = (score >= threshold ? Label::kPositive : Label::kNegative) == truth;
  return r;
}

CalibrationReport calibration_errors(std::span<const PredictionRecord> records,
                                     std::size_t bin_count) {
  const std::size_t n = records.size();
  if (bin_count < 1) throw Error("calibration_errors: bin_count must be >= 1");
  if (n < bin_count) {
    throw Error("calibration_errors: " + std::to_string(n) + " records cannot fill " +
                std::to_string(bin_count) + " bins");
  }
  for (const auto& r : records) {
    if (!(r.confidence >= 0.5 && r.confidence <= 1.0)) {
      throw Error("calibration_errors: confidence outside [0.5, 1]");
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return records[a].confidence < records[b].confidence;
  });

  CalibrationReport report;
  double mad = 0.0;
  double ms = 0.0;
  for (std::size_t b = 0; b < bin_count; ++b) {
    const std::size_t begin = b * n / bin_count;
    const std::size_t end = (b + 1) * n / bin_count;
    CalibrationBin bin;
    bin.count = end - begin;
    if (bin.count > 0) {
      double conf = 0.0;
      std::size_t hits = 0;
      for (std::size_t p = begin; p < end; ++p) {
        conf += records[order[p]].confidence;
        hits += records[order[p]].correct ? 1 : 0;
      }
      bin.mean_confidence = conf / static_cast<double>(bin.count);
      bin.accuracy = static_cast<double>(hits) / static_cast<double>(bin.count);
      const double gap = std::abs(bin.mean_confidence - bin.accuracy);
      const double count = static_cast<double>(bin.count);
      mad += count * gap;
      ms += count * gap * gap;
    }
    report.bins.push_back(bin);
  }
  // Weights n_b / n are applied once at the end.
  const double total = static_cast<double>(n);
  report.mad_error = 100.0 * (mad / total);
  report.rms_error = 100.0 * std::sqrt(ms / total);
  return report;
}

CalibrationAggregate aggregate_calibration(std::span<const CalibrationReport> reports) {
  if (reports.size() < 2) {
    throw Error("aggregate_calibration: need at least 2 reports, got " +
                std::to_string(reports.size()));
  }
  std::vector<double> rms, mad;
  for (const auto& r : reports) {
    rms.push_back(r.rms_error);
    mad.push_back(r.mad_error);
  }
  return {sample_mean_std(rms), sample_mean_std(mad)};
}

std::string calibration_json(const CalibrationReport& report) {
  nlohmann::ordered_json j;
  j["rms_error"] = report.rms_error;
  j["mad_error"] = report.mad_error;
  auto& bins = j["bins"] = nlohmann::ordered_json::array();
  for (const auto& b : report.bins) {
    bins.push_back({{"count", b.count},
                    {"mean_confidence", b.mean_confidence},
                    {"accuracy", b.accuracy}});
  }
  return j.dump();
}

std::string calibration_bins_csv(const CalibrationReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "bin,count,mean_confidence,accuracy\n";
  for (std::size_t b = 0; b < report.bins.size(); ++b) {
    const auto& bin = report.bins[b];
    out << b << ',' << bin.count << ',' << bin.mean_confidence << ',' << bin.accuracy << '\n';
  }
  return out.str();
}

}  // namespace rbag
