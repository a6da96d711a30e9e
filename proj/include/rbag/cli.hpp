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

#ifndef RBAG_CLI_HPP_
#define RBAG_CLI_HPP_

#include <ostream>
#include <string>
#include <vector>

namespace rbag {

// Entry point of the `rbag` tool: subcommands generate, sweep, report and
// calibrate. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rbag

#endif  // RBAG_CLI_HPP_
