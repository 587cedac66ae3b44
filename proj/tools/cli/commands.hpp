/*
 * Copyright 2026 The PermuteAttack Authors.
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


#ifndef PERMUTEATTACK_TOOLS_CLI_COMMANDS_HPP_
#define PERMUTEATTACK_TOOLS_CLI_COMMANDS_HPP_

#include <ostream>
#include <string>
#include <vector>

namespace permuteattack::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitNotConverged = 1,  // attack only
  kExitUsage = 2,
  kExitBackend = 3,
};

// Runs the command line `args` (without the program name). Normal output
// goes to `out`, diagnostics to `err`; returns the process exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace permuteattack::cli

#endif  // PERMUTEATTACK_TOOLS_CLI_COMMANDS_HPP_
