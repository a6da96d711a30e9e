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

#include "rbag/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace rbag {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"data", {"source", "manifest", "dim", "n_pos", "n_neg", "separation", "noise_scale", "seed"}},
      {"learner", {"extractor_widths", "penultimate"}},
      {"optimize",
       {"learning_rate", "alpha", "temperature", "adam_beta1", "adam_beta2", "adam_eps"}},
      {"scratch", {"iterations", "learning_rate"}},
      {"transfer", {"iterations", "learning_rate"}},
      {"source",
       {"n_pos", "n_neg", "separation", "noise_scale", "relatedness", "pretrain_iterations",
        "pretrain_learning_rate"}},
      {"harness",
       {"k_shots", "ensemble_sizes", "arms", "trials", "test_fraction", "seed", "threshold",
        "calibration_bins"}},
  };
  return keys;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const auto s = trim(text);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error("config: " + key + " = '" + text + "' is not a valid number");
  }
  return value;
}

std::vector<std::size_t> parse_sizes(const std::string& key, const std::string& text) {
  std::vector<std::size_t> out;
  for (const auto& item : split(text, ',')) out.push_back(parse_number<std::size_t>(key, item));
  if (out.empty()) throw Error("config: " + key + " is empty");
  return out;
}

std::map<std::size_t, std::size_t> parse_budgets(const std::string& key, const std::string& text) {
  std::map<std::size_t, std::size_t> out;
  for (const auto& item : split(text, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      throw Error("config: " + key + " entries must look like k:iterations, got '" + item + "'");
    }
    out[parse_number<std::size_t>(key, item.substr(0, colon))] =
        parse_number<std::size_t>(key, item.substr(colon + 1));
  }
  if (out.empty()) throw Error("config: " + key + " is empty");
  return out;
}

class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  template <class T>
  void number(const std::string& path, T& target) const {
    if (auto v = tree_.get_optional<std::string>(path)) target = parse_number<T>(path, *v);
  }
  void text(const std::string& path, std::string& target) const {
    if (auto v = tree_.get_optional<std::string>(path)) target = trim(*v);
  }
  std::optional<std::string> get(const std::string& path) const {
    if (auto v = tree_.get_optional<std::string>(path)) return trim(*v);
    return std::nullopt;
  }

 private:
  const pt::ptree& tree_;
};

}  // namespace

ExperimentSpec parse_experiment_config(const std::string& text,
                                       const std::vector<std::string>& overrides,
                                       const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    const auto dot = o.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
      throw Error("config override '" + o + "' must look like section.key=value");
    }
    tree.put(trim(o.substr(0, eq)), trim(o.substr(eq + 1)));
  }
  for (const auto& [section, body] : tree) {
    const auto it = known_keys().find(section);
    if (it == known_keys().end() || !body.data().empty()) {
      throw Error("config: unknown section [" + section + "]");
    }
    for (const auto& [key, value] : body) {
      if (it->second.count(key) == 0) throw Error("config: unknown key " + section + "." + key);
    }
  }

  const Reader r(tree);
  ExperimentSpec spec;
  std::string source = "synthetic";
  r.text("data.source", source);
  if (source == "synthetic") {
    SyntheticSpec s;
    r.number("data.dim", s.dim);
    r.number("data.n_pos", s.n_pos);
    r.number("data.n_neg", s.n_neg);
    r.number("data.separation", s.separation);
    r.number("data.noise_scale", s.noise_scale);
    r.number("data.seed", s.seed);
    spec.synthetic = s;
    spec.manifest.reset();
  } else if (source == "manifest") {
    auto m = r.get("data.manifest");
    if (!m || m->empty()) throw Error("config: data.source = manifest needs data.manifest");
    std::filesystem::path p(*m);
    spec.manifest = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
    spec.synthetic.reset();
  } else {
    throw Error("config: data.source must be synthetic or manifest, got '" + source + "'");
  }

  if (auto w = r.get("learner.extractor_widths")) {
    spec.topology.extractor_widths = parse_sizes("learner.extractor_widths", *w);
  }
  r.number("learner.penultimate", spec.topology.penultimate);
  if (spec.synthetic) spec.topology.input_dim = spec.synthetic->dim;

  TrainConfig base;
  r.number("optimize.learning_rate", base.learning_rate);
  r.number("optimize.alpha", base.alpha);
  r.number("optimize.temperature", base.temperature);
  r.number("optimize.adam_beta1", base.adam_beta1);
  r.number("optimize.adam_beta2", base.adam_beta2);
  r.number("optimize.adam_eps", base.adam_eps);
  for (auto* arm : {&spec.scratch, &spec.transfer}) arm->train = base;
  for (const auto& [name, arm] : {std::pair{"scratch", &spec.scratch}, std::pair{"transfer", &spec.transfer}}) {
    const std::string prefix = name;
    if (auto it = r.get(prefix + ".iterations")) {
      arm->iterations_by_k = parse_budgets(prefix + ".iterations", *it);
    }
    r.number(prefix + ".learning_rate", arm->train.learning_rate);
  }

  r.number("source.n_pos", spec.source.n_pos);
  r.number("source.n_neg", spec.source.n_neg);
  r.number("source.separation", spec.source.separation);
  r.number("source.noise_scale", spec.source.noise_scale);
  r.number("source.relatedness", spec.source.relatedness);
  r.number("source.pretrain_iterations", spec.source.pretrain_iterations);
  r.number("source.pretrain_learning_rate", spec.source.pretrain_learning_rate);

  if (auto v = r.get("harness.k_shots")) spec.k_shots = parse_sizes("harness.k_shots", *v);
  if (auto v = r.get("harness.ensemble_sizes")) {
    spec.ensemble_sizes = parse_sizes("harness.ensemble_sizes", *v);
  }
  if (auto v = r.get("harness.arms")) {
    spec.arms.clear();
    for (const auto& a : split(*v, ',')) spec.arms.push_back(init_mode_from_string(a));
    if (spec.arms.empty()) throw Error("config: harness.arms is empty");
  }
  r.number("harness.trials", spec.trials);
  r.number("harness.test_fraction", spec.test_fraction);
  r.number("harness.seed", spec.seed);
  r.number("harness.threshold", spec.threshold);
  r.number("harness.calibration_bins", spec.calibration_bins);
  spec.validate();
  return spec;
}

ExperimentSpec load_experiment_config(const std::filesystem::path& path,
                                      const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_experiment_config(buf.str(), overrides, path.parent_path());
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

std::string default_config_text() {
  return R"(; rbag experiment configuration.
; Every key is optional; the values below are the built-in defaults.

[data]
; synthetic | manifest
source = synthetic
; manifest = data/manifest.csv
dim = 16
n_pos = 1000
n_neg = 2000
; distance between the class-conditional means of the pair difference
separation = 4.0
noise_scale = 1.0
seed = 1

[learner]
; extractor: dim -> widths..., the last width is the feature size f
extractor_widths = 64,32
; head: 2f -> penultimate -> 1
penultimate = 128

[optimize]
; Adam, full batch
learning_rate = 0.001
adam_beta1 = 0.9
adam_beta2 = 0.999
adam_eps = 1e-8
; label smoothing, targets y (1 - alpha) + alpha / 2
alpha = 0.1
; stored but not applied
temperature = 0.0

[scratch]
; k:iterations
iterations = 5:100,50:130

[transfer]
iterations = 5:20,50:50

[source]
; auxiliary task for the transfer arm's frozen extractor
n_pos = 1000
n_neg = 1000
separation = 4.0
noise_scale = 1.0
; cosine between the source and target change directions
relatedness = 0.9
pretrain_iterations = 300
pretrain_learning_rate = 0.01

[harness]
k_shots = 5,50
ensemble_sizes = 1,5,10,15,20
arms = scratch,transfer
trials = 200
test_fraction = 0.3
seed = 2020
threshold = 0.5
calibration_bins = 15
)";
}

}  // namespace rbag
