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

#ifndef RBAG_HARNESS_HPP_
#define RBAG_HARNESS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rbag/calibrate.hpp"
#include "rbag/data.hpp"
#include "rbag/ensemble.hpp"
#include "rbag/learner.hpp"

namespace rbag {

// Training settings of one arm. The iteration budget depends on k: the entry
// for the largest listed k' <= k is used, or the smallest entry when k is
// below all of them.
struct ArmSettings {
  TrainConfig train;
  std::map<std::size_t, std::size_t> iterations_by_k;

  std::size_t iterations_for(std::size_t k) const;
  TrainConfig config_for(std::size_t k) const;
};

// Auxiliary task the transfer arm's extractor is pretrained on. Its change
// direction is cos-similar to the target direction by `relatedness` (for
// synthetic targets).
struct SourceTaskSpec {
  std::size_t n_pos = 1000;
  std::size_t n_neg = 1000;
  double separation = 4.0;
  double noise_scale = 1.0;
  double relatedness = 0.9;
  std::size_t pretrain_iterations = 300;
  double pretrain_learning_rate = 0.01;
};

struct ExperimentSpec {
  std::optional<SyntheticSpec> synthetic = SyntheticSpec{};
  std::optional<std::filesystem::path> manifest;
  SiameseTopology topology;
  std::vector<std::size_t> k_shots = {5, 50};
  std::vector<std::size_t> ensemble_sizes = {1, 5, 10, 15, 20};
  std::vector<InitMode> arms = {InitMode::kScratch, InitMode::kTransfer};
  std::size_t trials = 200;
  double test_fraction = 0.3;
  std::uint64_t seed = 2020;
  ArmSettings scratch;
  ArmSettings transfer;
  SourceTaskSpec source;
  double threshold = 0.5;
  std::size_t calibration_bins = kDefaultCalibrationBins;

  ExperimentSpec();
  void validate() const;
  const ArmSettings& arm(InitMode mode) const;
};

struct HoldoutSplit {
  PairDataset train;
  PairDataset test;
};

// Stratified split: round(fraction * |class|) samples of each class go to
// the test side. Both sides keep origin() indices into `dataset`.
HoldoutSplit split_holdout(const PairDataset& dataset, double test_fraction, std::uint64_t seed);

struct BaseCalibration {
  double rms_error = 0.0;
  double mad_error = 0.0;
  friend bool operator==(const BaseCalibration&, const BaseCalibration&) = default;
};

struct TrialReport {
  std::size_t trial = 0;
  InitMode arm = InitMode::kScratch;
  std::size_t k = 0;
  std::size_t ensemble_size = 0;
  std::uint64_t trial_seed = 0;
  double accuracy = 0.0;  // percent, ensemble on the held-out test set
  std::vector<double> base_accuracy;             // percent, per base model
  std::vector<BaseCalibration> base_calibration;  // per base model
  // Origin indices of every D_i; kept in memory only.
  std::vector<std::vector<std::size_t>> training_origins;

  friend bool operator==(const TrialReport&, const TrialReport&) = default;
};

// 100 (1 - e_new / e_old).
double error_rate_improvement(double e_new, double e_old);

struct CellSummary {
  InitMode arm = InitMode::kScratch;
  std::size_t k = 0;
  std::size_t ensemble_size = 0;
  MeanStd accuracy;
  MeanStd rms_calibration;  // over every base model of the cell
  MeanStd mad_calibration;
};

struct ImprovementRow {
  std::string comparison;  // "ensemble" or "transfer"
  InitMode arm = InitMode::kScratch;
  std::size_t k = 0;
  std::size_t ensemble_size = 0;
  std::size_t baseline_size = 0;
  double error_new = 0.0;
  double error_old = 0.0;
  double improvement = 0.0;
};

struct SweepSummary {
  std::vector<CellSummary> cells;  // ordered by (k, arm, ensemble_size)
  std::vector<ImprovementRow> improvements;

  const CellSummary* find(InitMode arm, std::size_t k, std::size_t m) const;
};

SweepSummary summarize(const std::vector<TrialReport>& reports);

// Improvement rows derived from cell accuracies: every |M| against the
// smallest |M| of its arm, and transfer against scratch at equal (k, |M|).
std::vector<ImprovementRow> improvement_rows(const std::vector<CellSummary>& cells);

// Owns the dataset, its holdout split and (for the transfer arm) the frozen
// pretrained extractor.
class Experiment {
 public:
  // Validates the spec and checks feasibility before any training.
  explicit Experiment(ExperimentSpec spec);

  const ExperimentSpec& spec() const { return spec_; }
  const PairDataset& dataset() const { return dataset_; }
  const PairDataset& train() const { return split_.train; }
  const PairDataset& test() const { return split_.test; }
  const std::optional<PretrainedExtractor>& pretrained() const { return pretrained_; }

  std::uint64_t trial_seed(std::size_t trial, std::size_t k) const;

  TrialReport run_trial(InitMode arm, std::size_t k, std::size_t m, std::uint64_t trial_seed,
                        std::size_t trial_index = 0) const;

  // Trains max(sizes) base models once and reports every size as the
  // corresponding prefix; equal to calling run_trial per size.
  std::vector<TrialReport> run_trial_sizes(InitMode arm, std::size_t k,
                                           const std::vector<std::size_t>& sizes,
                                           std::uint64_t trial_seed,
                                           std::size_t trial_index = 0) const;

  // All (trial, k, arm, size) reports, ordered by (k, arm, size, trial).
  std::vector<TrialReport> run_sweep(std::size_t workers = 1) const;

 private:
  void check_feasible() const;
  BaseModelRecipe recipe(InitMode arm) const;

  ExperimentSpec spec_;
  PairDataset dataset_;
  HoldoutSplit split_;
  std::optional<PretrainedExtractor> pretrained_;
};

// Source-task dataset the transfer extractor is pretrained on.
PairDataset make_source_dataset(const ExperimentSpec& spec, std::size_t dim);

void sort_reports(std::vector<TrialReport>& reports);

// Results files.
std::string trial_report_json(const TrialReport& report);
TrialReport trial_report_from_json(const std::string& line);
void write_trials_jsonl(const std::filesystem::path& path, const std::vector<TrialReport>& reports);
std::vector<TrialReport> read_trials_jsonl(const std::filesystem::path& path);

inline constexpr const char* kSummaryCsvHeader =
    "arm,k,ensemble_size,mean_acc,std_acc,mean_rms_cal,std_rms_cal,mean_mad_cal,std_mad_cal";
std::string summary_csv(const SweepSummary& summary);
void write_summary_csv(const std::filesystem::path& path, const SweepSummary& summary);
SweepSummary read_summary_csv(const std::filesystem::path& path);

// Console report: accuracy table (rows k, columns arm/|M|), base-model
// calibration table and error-rate improvements; values to 2 decimals.
std::string render_report(const SweepSummary& summary);

}  // namespace rbag

#endif  // RBAG_HARNESS_HPP_
