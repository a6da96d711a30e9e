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

#ifndef RBAG_CONFIG_HPP_
#define RBAG_CONFIG_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "rbag/harness.hpp"

namespace rbag {

// Flat INI-style experiment config: `[section]` headers, `key = value`
// lines, `;` or `#` comment lines. Unknown sections or keys are rejected.
// `overrides` are `section.key=value` strings applied after the file.
ExperimentSpec parse_experiment_config(const std::string& text,
                                       const std::vector<std::string>& overrides = {},
                                       const std::filesystem::path& base_dir = {});

ExperimentSpec load_experiment_config(const std::filesystem::path& path,
                                      const std::vector<std::string>& overrides = {});

// Commented config listing every key at its default value.
std::string default_config_text();

}  // namespace rbag

#endif  // RBAG_CONFIG_HPP_
