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

#include "rbag/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_set>

#include "json.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rbag {

namespace {

// Stage keys for derive_seed. Base models use keys 1..|M|.
constexpr std::uint64_t kDrawKey = 0xD0A7'0000'0001ULL;
constexpr std::uint64_t kPlanKey = 0xD0A7'0000'0002ULL;
constexpr std::uint64_t kAssignKey = 0xD0A7'0000'0003ULL;
constexpr std::uint64_t kSplitKey = 0x5911'7000'0001ULL;
constexpr std::uint64_t kSourceKey = 0x5011'4CE0'0001ULL;
constexpr std::uint64_t kPretrainKey = 0x5011'4CE0'0002ULL;
constexpr std::uint64_t kTrialKey = 0x7419'1000'0000ULL;

std::size_t arm_rank(InitMode arm) { return arm == InitMode::kScratch ? 0 : 1; }

}  // namespace

std::size_t ArmSettings::iterations_for(std::size_t k) const {
  if (iterations_by_k.empty()) return train.iterations;
  auto it = iterations_by_k.upper_bound(k);
  if (it == iterations_by_k.begin()) return it->second;
  return std::prev(it)->second;
}

TrainConfig ArmSettings::config_for(std::size_t k) const {
  TrainConfig c = train;
  c.iterations = iterations_for(k);
  return c;
}

ExperimentSpec::ExperimentSpec() {
  scratch.iterations_by_k = {{5, 100}, {50, 130}};
  transfer.iterations_by_k = {{5, 20}, {50, 50}};
}

void ExperimentSpec::validate() const {
  if (synthetic.has_value() == manifest.has_value()) {
    throw Error("ExperimentSpec: exactly one of a synthetic spec or a manifest is required");
  }
  if (synthetic) synthetic->validate();
  topology.validate();
  if (k_shots.empty()) throw Error("ExperimentSpec: k_shots is empty");
  for (auto k : k_shots) {
    if (k < 1) throw Error("ExperimentSpec: every k must be >= 1");
  }
  if (ensemble_sizes.empty()) throw Error("ExperimentSpec: ensemble_sizes is empty");
  for (auto m : ensemble_sizes) {
    if (m < 1) throw Error("ExperimentSpec: every ensemble size must be >= 1");
  }
  if (arms.empty()) throw Error("ExperimentSpec: no arms selected");
  if (trials < 1) throw Error("ExperimentSpec: trials must be >= 1");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error("ExperimentSpec: test_fraction must lie in (0, 1)");
  }
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error("ExperimentSpec: threshold must lie in (0, 1)");
  }
  scratch.train.validate();
  transfer.train.validate();
  if (!(source.relatedness >= -1.0 && source.relatedness <= 1.0)) {
    throw Error("ExperimentSpec: source relatedness must lie in [-1, 1]");
  }
  if (calibration_bins < 1) throw Error("ExperimentSpec: calibration_bins must be >= 1");
}

const ArmSettings& ExperimentSpec::arm(InitMode mode) const {
  return mode == InitMode::kTransfer ? transfer : scratch;
}

HoldoutSplit split_holdout(const PairDataset& dataset, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error("split_holdout: test_fraction must lie in (0, 1)");
  }
  Rng rng(seed);
  std::vector<std::size_t> train_idx, test_idx;
  for (const auto* cls : {&dataset.positives(), &dataset.negatives()}) {
    std::vector<std::size_t> pool = *cls;
    std::shuffle(pool.begin(), pool.end(), rng);
    const auto n_test = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(pool.size())));
    if (n_test == 0 || n_test == pool.size()) {
      throw Error("split_holdout: test_fraction " + std::to_string(test_fraction) +
                  " leaves a class with " + std::to_string(pool.size()) +
                  " samples empty on one side");
    }
    test_idx.insert(test_idx.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_test));
    train_idx.insert(train_idx.end(), pool.begin() + static_cast<std::ptrdiff_t>(n_test), pool.end());
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  return {dataset.subset(train_idx), dataset.subset(test_idx)};
}

double error_rate_improvement(double e_new, double e_old) {
  if (!(e_old > 0.0)) throw Error("error_rate_improvement: baseline error must be > 0");
  return 100.0 * (1.0 - e_new / e_old);
}

PairDataset make_source_dataset(const ExperimentSpec& spec, std::size_t dim) {
  SyntheticSpec src;
  src.dim = dim;
  src.n_pos = spec.source.n_pos;
  src.n_neg = spec.source.n_neg;
  src.separation = spec.source.separation;
  src.noise_scale = spec.source.noise_scale;
  src.seed = derive_seed(spec.seed, kSourceKey);
  // A random direction orthogonalized against the target, then mixed.
  SyntheticSpec probe;
  probe.dim = dim;
  probe.seed = src.seed;
  std::vector<double> v = change_direction(probe);
  if (spec.synthetic) {
    const std::vector<double> u = change_direction(*spec.synthetic);
    double dot = 0.0;
    for (std::size_t i = 0; i < dim; ++i) dot += u[i] * v[i];
    double norm2 = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      v[i] -= dot * u[i];
      norm2 += v[i] * v[i];
    }
    const double rho = spec.source.relatedness;
    const double ortho = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    const double inv = norm2 > 0.0 ? 1.0 / std::sqrt(norm2) : 0.0;
    std::vector<double> dir(dim);
    for (std::size_t i = 0; i < dim; ++i) dir[i] = rho * u[i] + ortho * v[i] * inv;
    src.direction = dir;
  }
  return generate_synthetic(src);
}

Experiment::Experiment(ExperimentSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  dataset_ = spec_.synthetic ? generate_synthetic(*spec_.synthetic) : load_manifest(*spec_.manifest);
  if (dataset_.dim() != spec_.topology.input_dim) {
    throw Error("experiment: dataset dimension " + std::to_string(dataset_.dim()) +
                " does not match topology input_dim " + std::to_string(spec_.topology.input_dim));
  }
  split_ = split_holdout(dataset_, spec_.test_fraction, derive_seed(spec_.seed, kSplitKey));
  check_feasible();
  if (std::find(spec_.arms.begin(), spec_.arms.end(), InitMode::kTransfer) != spec_.arms.end()) {
    const PairDataset source = make_source_dataset(spec_, dataset_.dim());
    TrainConfig cfg = spec_.transfer.train;
    cfg.learning_rate = spec_.source.pretrain_learning_rate;
    pretrained_ = pretrain_extractor(source, spec_.topology, spec_.source.pretrain_iterations,
                                     derive_seed(spec_.seed, kPretrainKey), cfg);
  }
}

void Experiment::check_feasible() const {
  const std::size_t n_pos = train().positives().size();
  const std::size_t n_neg = train().negatives().size();
  const std::size_t max_m = *std::max_element(spec_.ensemble_sizes.begin(), spec_.ensemble_sizes.end());
  for (std::size_t k : spec_.k_shots) {
    if (k > n_pos) {
      throw Error("infeasible experiment: k=" + std::to_string(k) + " exceeds the " +
                  std::to_string(n_pos) + " training positives");
    }
    const std::size_t chunks = n_neg / k;
    if (max_m > chunks) {
      throw Error("infeasible experiment: ensemble size " + std::to_string(max_m) +
                  " exceeds floor(" + std::to_string(n_neg) + "/" + std::to_string(k) +
                  ") = " + std::to_string(chunks) + " negative chunks");
    }
  }
}

BaseModelRecipe Experiment::recipe(InitMode arm) const {
  BaseModelRecipe r;
  r.topology = spec_.topology;
  r.mode = arm;
  if (arm == InitMode::kTransfer) {
    if (!pretrained_) throw Error("experiment: transfer arm was not configured");
    r.pretrained = *pretrained_;
  }
  return r;
}

std::uint64_t Experiment::trial_seed(std::size_t trial, std::size_t k) const {
  return derive_seed(derive_seed(spec_.seed, kTrialKey + trial), k);
}

TrialReport Experiment::run_trial(InitMode arm, std::size_t k, std::size_t m,
                                  std::uint64_t trial_seed, std::size_t trial_index) const {
  return run_trial_sizes(arm, k, {m}, trial_seed, trial_index).front();
}

std::vector<TrialReport> Experiment::run_trial_sizes(InitMode arm, std::size_t k,
                                                     const std::vector<std::size_t>& sizes,
                                                     std::uint64_t trial_seed,
                                                     std::size_t trial_index) const {
  if (sizes.empty()) throw Error("run_trial: no ensemble sizes");
  const PairDataset& train_set = train();
  const PairDataset& test_set = test();
  const std::size_t max_m = *std::max_element(sizes.begin(), sizes.end());
  if (k < 1 || k > train_set.positives().size() || max_m > train_set.negatives().size() / k) {
    throw Error("run_trial: infeasible (k=" + std::to_string(k) + ", |M|=" +
                std::to_string(max_m) + ") for " + std::to_string(train_set.positives().size()) +
                " positives and " + std::to_string(train_set.negatives().size()) + " negatives");
  }
  const KShotDraw draw = draw_k_shot(train_set, k, derive_seed(trial_seed, kDrawKey));
  const ChunkPlan plan = make_chunk_plan(train_set, k, derive_seed(trial_seed, kPlanKey));
  const ChunkAssignment assignment = assign_chunks(plan, max_m, derive_seed(trial_seed, kAssignKey));
  const TrainConfig config = spec_.arm(arm).config_for(k);
  const BaseModelRecipe rec = recipe(arm);

  std::unordered_set<std::size_t> test_origins(test_set.origins().begin(), test_set.origins().end());
  const PairBatch test_batch = PairBatch::all(test_set);

  std::vector<std::vector<double>> base_scores;
  std::vector<double> base_accuracy;
  std::vector<BaseCalibration> base_calibration;
  std::vector<std::vector<std::size_t>> origins;
  for (std::size_t i = 1; i <= max_m; ++i) {
    const auto d_i = base_training_set(train_set, draw, plan, assignment, i);
    std::vector<std::size_t> o;
    o.reserve(d_i.size());
    for (std::size_t idx : d_i) {
      const std::size_t origin = train_set.origin(idx);
      if (test_origins.count(origin) != 0) {
        throw Error("run_trial: test sample " + std::to_string(origin) + " leaked into D_" +
                    std::to_string(i));
      }
      o.push_back(origin);
    }
    origins.push_back(std::move(o));

    const BaseModel model =
        train_base_model(train_set, draw, plan, assignment, config, rec, trial_seed, i);
    ForwardCache cache;
    forward_batch(model.topology, model.weights, test_batch, cache);
    std::vector<double> scores(test_set.size());
    std::vector<PredictionRecord> records(test_set.size());
    std::size_t hits = 0;
    for (std::size_t s = 0; s < scores.size(); ++s) {
      scores[s] = sigmoid(cache.logits[s]);
      records[s] = make_record(scores[s], test_set.label(s), spec_.threshold);
      hits += records[s].correct ? 1 : 0;
    }
    const auto cal = calibration_errors(records, spec_.calibration_bins);
    base_calibration.push_back({cal.rms_error, cal.mad_error});
    base_accuracy.push_back(100.0 * static_cast<double>(hits) / static_cast<double>(scores.size()));
    base_scores.push_back(std::move(scores));
  }

  std::vector<TrialReport> out;
  for (std::size_t m : sizes) {
    TrialReport r;
    r.trial = trial_index;
    r.arm = arm;
    r.k = k;
    r.ensemble_size = m;
    r.trial_seed = trial_seed;
    std::size_t hits = 0;
    std::vector<double> member(m);
    for (std::size_t s = 0; s < test_set.size(); ++s) {
      for (std::size_t i = 0; i < m; ++i) member[i] = base_scores[i][s];
      hits += decide(mean_score(member), spec_.threshold) == test_set.label(s) ? 1 : 0;
    }
    r.accuracy = 100.0 * static_cast<double>(hits) / static_cast<double>(test_set.size());
    r.base_accuracy.assign(base_accuracy.begin(), base_accuracy.begin() + static_cast<std::ptrdiff_t>(m));
    r.base_calibration.assign(base_calibration.begin(),
                              base_calibration.begin() + static_cast<std::ptrdiff_t>(m));
    r.training_origins.assign(origins.begin(), origins.begin() + static_cast<std::ptrdiff_t>(m));
    out.push_back(std::move(r));
  }
  return out;
}

void sort_reports(std::vector<TrialReport>& reports) {
  std::stable_sort(reports.begin(), reports.end(), [](const TrialReport& a, const TrialReport& b) {
    return std::make_tuple(a.k, arm_rank(a.arm), a.ensemble_size, a.trial) <
           std::make_tuple(b.k, arm_rank(b.arm), b.ensemble_size, b.trial);
  });
}

std::vector<TrialReport> Experiment::run_sweep(std::size_t workers) const {
  if (workers < 1) throw Error("run_sweep: workers must be >= 1");
  std::vector<std::size_t> sizes = spec_.ensemble_sizes;
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  std::vector<std::size_t> ks = spec_.k_shots;
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());

  struct Job {
    std::size_t trial;
    std::size_t k;
  };
  std::vector<Job> jobs;
  for (std::size_t t = 0; t < spec_.trials; ++t) {
    for (std::size_t k : ks) jobs.push_back({t, k});
  }
  std::vector<std::vector<TrialReport>> results(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  const auto count = static_cast<std::ptrdiff_t>(jobs.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(static_cast<int>(workers))
  for (std::ptrdiff_t j = 0; j < count; ++j) {
    const Job& job = jobs[static_cast<std::size_t>(j)];
    try {
      const std::uint64_t seed = trial_seed(job.trial, job.k);
      for (InitMode arm : spec_.arms) {
        auto part = run_trial_sizes(arm, job.k, sizes, seed, job.trial);
        for (auto& r : part) results[static_cast<std::size_t>(j)].push_back(std::move(r));
      }
    } catch (...) {
      errors[static_cast<std::size_t>(j)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<TrialReport> all;
  for (auto& part : results) {
    for (auto& r : part) all.push_back(std::move(r));
  }
  sort_reports(all);
  return all;
}

const CellSummary* SweepSummary::find(InitMode arm, std::size_t k, std::size_t m) const {
  for (const auto& c : cells) {
    if (c.arm == arm && c.k == k && c.ensemble_size == m) return &c;
  }
  return nullptr;
}

std::vector<ImprovementRow> improvement_rows(const std::vector<CellSummary>& cells) {
  std::vector<ImprovementRow> rows;
  // Within an arm: each size against the smallest size.
  for (const auto& c : cells) {
    const CellSummary* base = nullptr;
    for (const auto& b : cells) {
      if (b.arm == c.arm && b.k == c.k && (!base || b.ensemble_size < base->ensemble_size)) base = &b;
    }
    if (!base || base->ensemble_size == c.ensemble_size) continue;
    const double e_new = 100.0 - c.accuracy.mean;
    const double e_old = 100.0 - base->accuracy.mean;
    if (!(e_old > 0.0)) continue;
    rows.push_back({"ensemble", c.arm, c.k, c.ensemble_size, base->ensemble_size, e_new, e_old,
                    error_rate_improvement(e_new, e_old)});
  }
  // Transfer against scratch.
  for (const auto& c : cells) {
    if (c.arm != InitMode::kTransfer) continue;
    for (const auto& s : cells) {
      if (s.arm != InitMode::kScratch || s.k != c.k || s.ensemble_size != c.ensemble_size) continue;
      const double e_new = 100.0 - c.accuracy.mean;
      const double e_old = 100.0 - s.accuracy.mean;
      if (!(e_old > 0.0)) continue;
      rows.push_back({"transfer", c.arm, c.k, c.ensemble_size, s.ensemble_size, e_new, e_old,
                      error_rate_improvement(e_new, e_old)});
    }
  }
  return rows;
}

SweepSummary summarize(const std::vector<TrialReport>& reports) {
  if (reports.empty()) throw Error("summarize: no trial reports");
  using Key = std::tuple<std::size_t, std::size_t, std::size_t>;  // k, arm rank, m
  std::map<Key, std::vector<const TrialReport*>> groups;
  for (const auto& r : reports) {
    groups[{r.k, arm_rank(r.arm), r.ensemble_size}].push_back(&r);
  }
  SweepSummary summary;
  for (const auto& [key, members] : groups) {
    const auto& first = *members.front();
    const std::string name = "(" + to_string(first.arm) + ", k=" + std::to_string(first.k) +
                             ", |M|=" + std::to_string(first.ensemble_size) + ")";
    if (members.size() < 2) {
      throw Error("summarize: cell " + name + " has " + std::to_string(members.size()) +
                  " report(s); at least 2 are needed");
    }
    std::vector<double> acc, rms, mad;
    for (const auto* r : members) {
      acc.push_back(r->accuracy);
      for (const auto& c : r->base_calibration) {
        rms.push_back(c.rms_error);
        mad.push_back(c.mad_error);
      }
    }
    if (rms.size() < 2) throw Error("summarize: cell " + name + " lacks calibration records");
    CellSummary cell;
    cell.arm = first.arm;
    cell.k = first.k;
    cell.ensemble_size = first.ensemble_size;
    cell.accuracy = sample_mean_std(acc);
    cell.rms_calibration = sample_mean_std(rms);
    cell.mad_calibration = sample_mean_std(mad);
    summary.cells.push_back(cell);
  }
  summary.improvements = improvement_rows(summary.cells);
  return summary;
}

std::string trial_report_json(const TrialReport& r) {
  nlohmann::ordered_json j;
  j["trial"] = r.trial;
  j["arm"] = to_string(r.arm);
  j["k"] = r.k;
  j["ensemble_size"] = r.ensemble_size;
  j["trial_seed"] = r.trial_seed;
  j["accuracy"] = r.accuracy;
  j["base_accuracy"] = r.base_accuracy;
  auto& cal = j["base_calibration"] = nlohmann::ordered_json::array();
  for (const auto& c : r.base_calibration) cal.push_back({{"rms", c.rms_error}, {"mad", c.mad_error}});
  return j.dump();
}

TrialReport trial_report_from_json(const std::string& line) {
  try {
    const auto j = nlohmann::json::parse(line);
    TrialReport r;
    r.trial = j.at("trial").get<std::size_t>();
    r.arm = init_mode_from_string(j.at("arm").get<std::string>());
    r.k = j.at("k").get<std::size_t>();
    r.ensemble_size = j.at("ensemble_size").get<std::size_t>();
    r.trial_seed = j.at("trial_seed").get<std::uint64_t>();
    r.accuracy = j.at("accuracy").get<double>();
    r.base_accuracy = j.at("base_accuracy").get<std::vector<double>>();
    for (const auto& c : j.at("base_calibration")) {
      r.base_calibration.push_back({c.at("rms").get<double>(), c.at("mad").get<double>()});
    }
    if (!(r.accuracy >= 0.0 && r.accuracy <= 100.0)) throw Error("accuracy outside [0, 100]");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(e.what());
  }
}

void write_trials_jsonl(const std::filesystem::path& path, const std::vector<TrialReport>& reports) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& r : reports) out << trial_report_json(r) << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

std::vector<TrialReport> read_trials_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open results file " + path.string());
  std::vector<TrialReport> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    try {
      out.push_back(trial_report_from_json(line));
    } catch (const Error& e) {
      throw Error(path.string() + " line " + std::to_string(number) + ": " + e.what());
    }
  }
  if (out.empty()) throw Error("results file " + path.string() + " holds no trial reports");
  return out;
}

namespace {

std::string shortest(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double x = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error("'" + s + "' is not a number");
  }
  return x;
}

std::size_t parse_size(const std::string& s) {
  std::size_t x = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error("'" + s + "' is not a non-negative integer");
  }
  return x;
}

}  // namespace

std::string summary_csv(const SweepSummary& summary) {
  std::ostringstream out;
  out << kSummaryCsvHeader << '\n';
  for (const auto& c : summary.cells) {
    out << to_string(c.arm) << ',' << c.k << ',' << c.ensemble_size << ','
        << shortest(c.accuracy.mean) << ',' << shortest(c.accuracy.std) << ','
        << shortest(c.rms_calibration.mean) << ',' << shortest(c.rms_calibration.std) << ','
        << shortest(c.mad_calibration.mean) << ',' << shortest(c.mad_calibration.std) << '\n';
  }
  return out.str();
}

void write_summary_csv(const std::filesystem::path& path, const SweepSummary& summary) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << summary_csv(summary);
  if (!out) throw Error("failed writing " + path.string());
}

SweepSummary read_summary_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open summary " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(path.string() + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kSummaryCsvHeader) {
    throw Error(path.string() + " line 1: unexpected header '" + line + "'");
  }
  SweepSummary summary;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(field);
    try {
      if (f.size() != 9) throw Error("expected 9 fields, got " + std::to_string(f.size()));
      CellSummary c;
      c.arm = init_mode_from_string(f[0]);
      c.k = parse_size(f[1]);
      c.ensemble_size = parse_size(f[2]);
      c.accuracy.mean = parse_double(f[3]);
      c.accuracy.std = parse_double(f[4]);
      c.rms_calibration.mean = parse_double(f[5]);
      c.rms_calibration.std = parse_double(f[6]);
      c.mad_calibration.mean = parse_double(f[7]);
      c.mad_calibration.std = parse_double(f[8]);
      summary.cells.push_back(c);
    } catch (const Error& e) {
      throw Error(path.string() + " line " + std::to_string(number) + ": " + e.what());
    }
  }
  if (summary.cells.empty()) throw Error(path.string() + " holds no summary rows");
  summary.improvements = improvement_rows(summary.cells);
  return summary;
}

namespace {

std::string fixed2(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

}  // namespace

std::string render_report(const SweepSummary& summary) {
  std::ostringstream out;
  std::set<std::size_t> ks;
  std::vector<std::pair<std::size_t, std::size_t>> columns;  // arm rank, m
  for (const auto& c : summary.cells) {
    ks.insert(c.k);
    const std::pair<std::size_t, std::size_t> col{arm_rank(c.arm), c.ensemble_size};
    if (std::find(columns.begin(), columns.end(), col) == columns.end()) columns.push_back(col);
  }
  std::sort(columns.begin(), columns.end());
  auto arm_of = [](std::size_t rank) { return rank == 0 ? InitMode::kScratch : InitMode::kTransfer; };

  constexpr std::size_t kWidth = 18;
  out << "Accuracy (%), mean (+-std)\n";
  out << pad("k", 8);
  for (const auto& [rank, m] : columns) {
    out << pad(to_string(arm_of(rank)) + " |M|=" + std::to_string(m), kWidth);
  }
  out << '\n';
  for (std::size_t k : ks) {
    out << pad(std::to_string(k), 8);
    for (const auto& [rank, m] : columns) {
      const auto* c = summary.find(arm_of(rank), k, m);
      out << pad(c ? fixed2(c->accuracy.mean) + " (+-" + fixed2(c->accuracy.std) + ")" : "-",
                 kWidth);
    }
    out << '\n';
  }

  out << "\nBase-model calibration error (%), smallest |M| per arm, mean (+-std)\n";
  out << pad("arm", 10);
  for (std::size_t k : ks) {
    out << pad("k=" + std::to_string(k) + " RMS", kWidth) << pad("k=" + std::to_string(k) + " MAD", kWidth);
  }
  out << '\n';
  for (std::size_t rank = 0; rank < 2; ++rank) {
    bool any = false;
    std::ostringstream row;
    row << pad(to_string(arm_of(rank)), 10);
    for (std::size_t k : ks) {
      const CellSummary* best = nullptr;
      for (const auto& c : summary.cells) {
        if (arm_rank(c.arm) == rank && c.k == k && (!best || c.ensemble_size < best->ensemble_size)) {
          best = &c;
        }
      }
      if (best) {
        any = true;
        row << pad(fixed2(best->rms_calibration.mean) + " (+-" + fixed2(best->rms_calibration.std) + ")", kWidth)
            << pad(fixed2(best->mad_calibration.mean) + " (+-" + fixed2(best->mad_calibration.std) + ")", kWidth);
      } else {
        row << pad("-", kWidth) << pad("-", kWidth);
      }
    }
    if (any) out << row.str() << '\n';
  }

  out << "\nError-rate improvement (%)\n";
  if (summary.improvements.empty()) out << "(none)\n";
  for (const auto& r : summary.improvements) {
    std::string label;
    if (r.comparison == "ensemble") {
      label = to_string(r.arm) + " k=" + std::to_string(r.k) + " |M|=" +
              std::to_string(r.ensemble_size) + " vs |M|=" + std::to_string(r.baseline_size);
    } else {
      label = "transfer vs scratch k=" + std::to_string(r.k) + " |M|=" + std::to_string(r.ensemble_size);
    }
    out << pad(label, 40) << "1 - " << fixed2(r.error_new) << "/" << fixed2(r.error_old) << " = "
        << fixed2(r.improvement) << "\n";
  }
  return out.str();
}

}  // namespace rbag
