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

// Acceptance checks; prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "rbag/calibrate.hpp"
#include "rbag/cli.hpp"
#include "rbag/config.hpp"
#include "rbag/ensemble.hpp"
#include "rbag/harness.hpp"
#include "rbag/optimize.hpp"
#include "rbag/partition.hpp"

namespace {

using namespace rbag;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(int number, const std::string& name, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", number, name.c_str(), o.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

PairDataset random_dataset(std::size_t n_pos, std::size_t n_neg, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  const std::size_t n = n_pos + n_neg;
  std::vector<float> pre(n * dim), post(n * dim);
  for (auto& v : pre) v = normal(rng);
  for (auto& v : post) v = normal(rng);
  std::vector<Label> labels(n, Label::kNegative);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n_pos), Label::kPositive);
  return PairDataset(dim, std::move(pre), std::move(post), std::move(labels));
}

Outcome partition_oracle() {
  const auto start = Clock::now();
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::size_t> n_dist(10, 2000);
  for (int c = 0; c < 500; ++c) {
    const std::size_t n = n_dist(rng);
    const std::size_t k = std::uniform_int_distribution<std::size_t>(1, std::min<std::size_t>(60, n))(rng);
    const PairDataset d(1, std::vector<float>(n), std::vector<float>(n), std::vector<Label>(n, Label::kNegative));
    const ChunkPlan plan = make_chunk_plan(d, k, rng());
    if (plan.chunk_count() != n / k || plan.dropped.size() != n % k) {
      return {false, "counts wrong for |N|=" + std::to_string(n) + " k=" + std::to_string(k)};
    }
    std::vector<char> seen(n, 0);
    for (const auto& chunk : plan.chunks) {
      if (chunk.size() != k) return {false, "chunk size differs from k"};
      for (std::size_t i : chunk) {
        if (seen[i]++) return {false, "chunks overlap"};
      }
    }
    for (std::size_t i : plan.dropped) {
      if (seen[i]++) return {false, "dropped index also in a chunk"};
    }
  }
  const double secs = seconds_since(start);
  return {secs < 5.0, "500 cases in " + fmt("%.2f s", secs)};
}

Outcome paper_arithmetic() {
  const PairDataset d(1, std::vector<float>(6848), std::vector<float>(6848),
                      std::vector<Label>(6848, Label::kNegative));
  const std::size_t chunks = make_chunk_plan(d, 50, 1).chunk_count();
  const double a = error_rate_improvement(10.04, 21.48);
  const double b = error_rate_improvement(7.44, 10.3);
  const bool ok = chunks == 136 && std::abs(a - 53.3) <= 0.05 && std::abs(b - 27.8) <= 0.05;
  return {ok, std::to_string(chunks) + " chunks, " + fmt("%.3f%%", a) + ", " + fmt("%.3f%%", b)};
}

Outcome ensemble_identity() {
  const PairDataset train = random_dataset(20, 200, 16, 3);
  const KShotDraw draw = draw_k_shot(train, 5, 1);
  const ChunkPlan plan = make_chunk_plan(train, 5, 2);
  TrainConfig cfg;
  cfg.iterations = 20;
  BaseModelRecipe recipe;
  const Ensemble e = train_ensemble(train, draw, plan, assign_chunks(plan, 1, 3), cfg, recipe, 4);
  const PairDataset inputs = random_dataset(5000, 5000, 16, 5);
  const auto ens = predict_scores(e, inputs);
  const auto base = score_dataset(e.models[0], inputs);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (ens[i] != base[i]) return {false, "|M|=1 differs at input " + std::to_string(i)};
  }
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int c = 0; c < 1000; ++c) {
    std::vector<double> s(1 + c % 20);
    long double sum = 0.0L;
    for (auto& x : s) sum += (x = u(rng));
    worst = std::max(worst, std::abs(mean_score(s) - static_cast<double>(sum / s.size())));
  }
  return {worst <= 1e-15, "10^4 inputs identical, max averaging error " + fmt("%.1e", worst)};
}

Outcome gradient_check() {
  const auto start = Clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> width(1, 8);
  std::uniform_real_distribution<double> uw(-0.8, 0.8);
  TrainConfig cfg;
  const double h = 1e-5;
  double worst = 0.0;
  std::size_t checked = 0;
  for (int c = 0; c < 20; ++c) {
    SiameseTopology t;
    t.input_dim = width(rng);
    t.extractor_widths.assign(1 + rng() % 2, 0);
    for (auto& w : t.extractor_widths) w = width(rng);
    t.penultimate = width(rng);
    std::vector<double> w(t.parameter_count());
    for (auto& x : w) x = uw(rng);
    const PairBatch batch = PairBatch::all(random_dataset(1 + rng() % 5, 1 + rng() % 5, t.input_dim, rng()));
    const auto g = gradient(t, w, batch, cfg);
    for (std::size_t i = 0; i < w.size(); ++i) {
      auto wp = w;
      wp[i] += h;
      const double up = loss_and_gradient(t, wp, batch, cfg).loss;
      wp[i] -= 2 * h;
      const double down = loss_and_gradient(t, wp, batch, cfg).loss;
      const double num = (up - down) / (2 * h);
      const double scale = std::max(std::abs(g[i]), std::abs(num));
      if (scale <= 1e-6) continue;
      ++checked;
      worst = std::max(worst, std::abs(g[i] - num) / scale);
    }
  }
  const double secs = seconds_since(start);
  return {worst < 1e-4 && secs < 30.0,
          std::to_string(checked) + " components, max rel err " + fmt("%.2e", worst) + " in " +
              fmt("%.2f s", secs)};
}

std::pair<double, double> calibration_oracle(std::vector<PredictionRecord> r, std::size_t bins) {
  std::stable_sort(r.begin(), r.end(), [](const auto& a, const auto& b) { return a.confidence < b.confidence; });
  const std::size_t n = r.size();
  double mad = 0.0, ms = 0.0;
  for (std::size_t b = 0; b < bins; ++b) {
    double conf = 0.0, hits = 0.0;
    const std::size_t lo = b * n / bins, hi = (b + 1) * n / bins;
    for (std::size_t i = lo; i < hi; ++i) {
      conf += r[i].confidence;
      hits += r[i].correct;
    }
    const double cnt = static_cast<double>(hi - lo);
    if (cnt == 0) continue;
    const double gap = std::abs(conf / cnt - hits / cnt);
    mad += cnt / n * gap;
    ms += cnt / n * gap * gap;
  }
  return {100 * std::sqrt(ms), 100 * mad};
}

Outcome calibration_metrics() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> score(0.0, 1.0);
  double worst = 0.0;
  bool ordered = true;
  for (int c = 0; c < 100; ++c) {
    std::vector<PredictionRecord> r;
    const std::size_t n = 15 + rng() % 3000;
    for (std::size_t i = 0; i < n; ++i) {
      r.push_back(make_record(score(rng), rng() % 2 ? Label::kPositive : Label::kNegative));
    }
    const auto rep = calibration_errors(r);
    const auto [rms, mad] = calibration_oracle(r, 15);
    worst = std::max({worst, std::abs(rep.rms_error - rms), std::abs(rep.mad_error - mad)});
    ordered = ordered && rep.rms_error >= rep.mad_error;
  }
  std::vector<PredictionRecord> perfect;
  const double levels[] = {0.5, 0.625, 0.75, 0.875, 1.0};
  for (std::size_t b = 0; b < 15; ++b) {
    for (int i = 0; i < 8; ++i) perfect.push_back({levels[b / 3], i < levels[b / 3] * 8});
  }
  std::vector<PredictionRecord> half;
  for (int i = 0; i < 300; ++i) half.push_back({1.0, i % 2 == 0});
  const auto p = calibration_errors(perfect);
  const auto hr = calibration_errors(half);
  const bool exact = p.rms_error == 0.0 && p.mad_error == 0.0 && hr.rms_error == 50.0 && hr.mad_error == 50.0;
  return {worst <= 1e-12 && ordered && exact,
          "max oracle diff " + fmt("%.1e", worst) + (ordered ? ", RMS>=MAD" : ", RMS<MAD seen") +
              (exact ? ", analytic cases exact" : ", analytic cases off")};
}

std::string read_all(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentSpec benchmark_spec() {
  return load_experiment_config(std::filesystem::path(RBAG_SOURCE_DIR) / "configs" / "benchmark.ini");
}

struct Benchmark {
  std::vector<TrialReport> reports;
  SweepSummary summary;
  std::vector<std::size_t> test_origins;
  double seconds = 0.0;
};

const Benchmark& benchmark() {
  static const Benchmark b = [] {
    Benchmark out;
    const auto start = Clock::now();
    const Experiment e(benchmark_spec());
    out.reports = e.run_sweep(1);
    out.summary = summarize(out.reports);
    out.test_origins = e.test().origins();
    out.seconds = seconds_since(start);
    return out;
  }();
  return b;
}

Outcome trend_reproduction() {
  const ExperimentSpec spec = benchmark_spec();
  if (spec.synthetic->dim != 16 || spec.synthetic->n_neg != 2000 || spec.test_fraction != 0.3 ||
      spec.trials != 50) {
    return {false, "benchmark config drifted from d=16, |N|=2000, 0.3, 50 trials"};
  }
  const Benchmark& b = benchmark();
  bool ok = true;
  std::string detail;
  for (InitMode arm : {InitMode::kScratch, InitMode::kTransfer}) {
    for (std::size_t k : {5u, 50u}) {
      const CellSummary* one = b.summary.find(arm, k, 1);
      const CellSummary* five = b.summary.find(arm, k, 5);
      if (!one || !five) return {false, "missing cell"};
      const bool cell_ok = five->accuracy.mean >= one->accuracy.mean && five->accuracy.std <= one->accuracy.std;
      ok = ok && cell_ok;
      char buf[200];
      std::snprintf(buf, sizeof buf, "%s k=%zu %.2f+-%.2f -> %.2f+-%.2f%s; ", to_string(arm).c_str(), k,
                    one->accuracy.mean, one->accuracy.std, five->accuracy.mean, five->accuracy.std,
                    cell_ok ? "" : " (violated)");
      detail += buf;
    }
  }
  const double rms_scratch = b.summary.find(InitMode::kScratch, 5, 1)->rms_calibration.mean;
  const double rms_transfer = b.summary.find(InitMode::kTransfer, 5, 1)->rms_calibration.mean;
  ok = ok && rms_transfer < rms_scratch;
  char buf[160];
  std::snprintf(buf, sizeof buf, "k=5 RMS cal transfer %.2f vs scratch %.2f; %.0f s", rms_transfer,
                rms_scratch, b.seconds);
  detail += buf;
  return {ok && b.seconds < 600.0, detail};
}

Outcome determinism() {
  // Second run of the benchmark config through the CLI, with a different
  // worker count, compared against the in-process run.
  const auto dir = std::filesystem::temp_directory_path() / "rbag_acceptance_sweep";
  std::filesystem::remove_all(dir);
  std::ostringstream out, err;
  const int code = run_cli({"rbag", "sweep", "--config",
                            (std::filesystem::path(RBAG_SOURCE_DIR) / "configs" / "benchmark.ini").string(),
                            "--out", dir.string(), "--workers", "2"},
                           out, err);
  if (code != 0) return {false, "sweep failed: " + err.str()};
  const std::string cli_csv = read_all(dir / "summary.csv");
  const std::string in_process = summary_csv(benchmark().summary);
  std::filesystem::remove_all(dir);
  return {cli_csv == in_process && !cli_csv.empty(),
          std::to_string(cli_csv.size()) + " CSV bytes, " + (cli_csv == in_process ? "identical" : "differ")};
}

Outcome leakage_guard() {
  const Benchmark& b = benchmark();
  const std::unordered_set<std::size_t> test(b.test_origins.begin(), b.test_origins.end());
  std::size_t sets = 0, samples = 0;
  for (const auto& r : b.reports) {
    for (const auto& d_i : r.training_origins) {
      ++sets;
      for (std::size_t o : d_i) {
        ++samples;
        if (test.count(o)) return {false, "test sample " + std::to_string(o) + " in a training set"};
      }
    }
  }
  return {sets > 0, std::to_string(sets) + " training sets, " + std::to_string(samples) +
                        " samples, none in the " + std::to_string(test.size()) + "-pair test split"};
}

}  // namespace

int main() {
  report(1, "partition oracle", partition_oracle);
  report(2, "paper arithmetic", paper_arithmetic);
  report(3, "ensemble identity", ensemble_identity);
  report(4, "gradient verification", gradient_check);
  report(5, "calibration metrics", calibration_metrics);
  report(6, "trend reproduction", trend_reproduction);
  report(7, "determinism", determinism);
  report(8, "leakage guard", leakage_guard);
  return failures == 0 ? 0 : 1;
}
