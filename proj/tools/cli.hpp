/*
 Copyright 2026 The limco Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#ifndef LIMCO_TOOLS_CLI_HPP
#define LIMCO_TOOLS_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace limco::cli {

enum ExitCode : int {
  kPass = 0,
  kVerdictFail = 2,
  kNumericalFailure = 3,
  kUsage = 4,
};

/// args excludes the program name. Reports go to --out, falling back to
/// $LIMCO_OUT and then ./limco-out.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace limco::cli

#endif  // LIMCO_TOOLS_CLI_HPP
