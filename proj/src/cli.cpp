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

#include "rbag/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "rbag/config.hpp"
#include "rbag/harness.hpp"
#include "rbag/persist.hpp"

namespace rbag {

namespace {

namespace fs = std::filesystem;

struct CommonOptions {
  std::string config;
  std::string out;
  std::size_t workers = 1;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::vector<std::string> overrides;
  int verbosity = 0;
};

ExperimentSpec load_spec(const CommonOptions& o, bool seed_is_data_seed) {
  std::vector<std::string> overrides = o.overrides;
  if (o.seed) {
    overrides.push_back((seed_is_data_seed ? "data.seed=" : "harness.seed=") +
                        std::to_string(*o.seed));
  }
  if (o.trials) overrides.push_back("harness.trials=" + std::to_string(*o.trials));
  if (o.config.empty()) return parse_experiment_config(default_config_text(), overrides);
  return load_experiment_config(o.config, overrides);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error("cannot create output directory " + dir.string() +
                (ec ? ": " + ec.message() : std::string()));
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
  if (!f) throw Error("failed writing " + path.string());
}

int cmd_generate(const CommonOptions& o, std::ostream& out) {
  const ExperimentSpec spec = load_spec(o, true);
  if (!spec.synthetic) throw Error("generate needs data.source = synthetic");
  const fs::path dir = o.out.empty() ? fs::path("rbag-data") : fs::path(o.out);
  ensure_dir(dir);
  const PairDataset dataset = generate_synthetic(*spec.synthetic);
  const auto manifest = export_manifest(dataset, dir);
  write_file(dir / "dataset.rbag", save(dataset));
  out << "wrote " << manifest.string() << ": " << dataset.size() << " pairs, |P|="
      << dataset.positives().size() << ", |N|=" << dataset.negatives().size()
      << ", d=" << dataset.dim() << '\n';
  return 0;
}

std::string calibration_table(const SweepSummary& summary) {
  std::ostringstream s;
  s << "arm,k,ensemble_size,mean_rms_cal,std_rms_cal,mean_mad_cal,std_mad_cal\n";
  char buf[256];
  for (const auto& c : summary.cells) {
    std::snprintf(buf, sizeof buf, "%s,%zu,%zu,%.2f,%.2f,%.2f,%.2f\n", to_string(c.arm).c_str(),
                  c.k, c.ensemble_size, c.rms_calibration.mean, c.rms_calibration.std,
                  c.mad_calibration.mean, c.mad_calibration.std);
    s << buf;
  }
  return s.str();
}

int run_experiment(ExperimentSpec spec, const CommonOptions& o, std::ostream& out,
                   std::ostream& err, bool calibration_only) {
  if (o.workers < 1) throw Error("--workers must be >= 1");
  if (calibration_only) spec.ensemble_sizes = {1};
  const fs::path dir = o.out.empty() ? fs::path("rbag-results") : fs::path(o.out);
  ensure_dir(dir);
  const auto start = std::chrono::steady_clock::now();
  const Experiment experiment(std::move(spec));
  if (o.verbosity > 0) {
    err << "train split: " << experiment.train().positives().size() << " positives, "
        << experiment.train().negatives().size() << " negatives; test split: "
        << experiment.test().size() << " pairs\n";
  }
  const auto reports = experiment.run_sweep(o.workers);
  const SweepSummary summary = summarize(reports);
  write_trials_jsonl(dir / "trials.jsonl", reports);
  write_summary_csv(dir / "summary.csv", summary);
  if (calibration_only) {
    const std::string table = calibration_table(summary);
    write_text(dir / "calibration.csv", table);
    out << table;
  } else {
    const std::string report = render_report(summary);
    write_text(dir / "report.txt", report);
    out << report;
  }
  if (o.verbosity > 0) {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    err << reports.size() << " trial reports in " << secs << " s\n";
  }
  return 0;
}

SweepSummary load_results(const fs::path& path) {
  if (fs::is_directory(path)) {
    if (fs::exists(path / "summary.csv")) return read_summary_csv(path / "summary.csv");
    if (fs::exists(path / "trials.jsonl")) return summarize(read_trials_jsonl(path / "trials.jsonl"));
    throw Error(path.string() + " holds neither summary.csv nor trials.jsonl");
  }
  if (!fs::exists(path)) throw Error("results path " + path.string() + " does not exist");
  if (path.extension() == ".jsonl") return summarize(read_trials_jsonl(path));
  return read_summary_csv(path);
}

int cmd_report(const std::string& input, const CommonOptions& o, std::ostream& out) {
  const SweepSummary summary = load_results(input);
  const std::string report = render_report(summary);
  if (!o.out.empty()) {
    ensure_dir(o.out);
    write_text(fs::path(o.out) / "report.txt", report);
    write_summary_csv(fs::path(o.out) / "summary.csv", summary);
  }
  out << report;
  return 0;
}

void add_common(CLI::App* cmd, CommonOptions& o, bool experiment) {
  cmd->add_option("--config", o.config, "Experiment config file (INI)");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--seed", o.seed, "Seed override");
  cmd->add_option("--set", o.overrides, "Config override section.key=value (repeatable)");
  cmd->add_flag("-v,--verbose", o.verbosity, "Progress on stderr");
  if (experiment) {
    cmd->add_option("--workers", o.workers, "Concurrent trial jobs")->check(CLI::PositiveNumber);
    cmd->add_option("--trials", o.trials, "Trials per cell")->check(CLI::PositiveNumber);
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"rbag: bagging by partitioning for imbalanced pair classification"};
  app.require_subcommand(1);
  CommonOptions gen_opts, sweep_opts, cal_opts, report_opts;
  std::string report_input;

  auto* gen = app.add_subcommand("generate", "Write a synthetic dataset in manifest format");
  add_common(gen, gen_opts, false);
  auto* sweep = app.add_subcommand("sweep", "Run the k-shot / arm / ensemble-size sweep");
  add_common(sweep, sweep_opts, true);
  auto* report = app.add_subcommand("report", "Render a results directory or file");
  report->add_option("results", report_input, "summary.csv, trials.jsonl, or their directory")
      ->required();
  report->add_option("--out", report_opts.out, "Also write report.txt and summary.csv here");
  auto* cal = app.add_subcommand("calibrate", "Base-model calibration measurement only");
  add_common(cal, cal_opts, true);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }
  try {
    if (gen->parsed()) return cmd_generate(gen_opts, out);
    if (sweep->parsed()) return run_experiment(load_spec(sweep_opts, false), sweep_opts, out, err, false);
    if (cal->parsed()) return run_experiment(load_spec(cal_opts, false), cal_opts, out, err, true);
    if (report->parsed()) return cmd_report(report_input, report_opts, out);
  } catch (const std::exception& e) {
    err << "rbag: error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace rbag
