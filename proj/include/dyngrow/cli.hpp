// Copyright 2026 The dyngrow Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DYNGROW_CLI_HPP_
#define DYNGROW_CLI_HPP_

#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace dyngrow {

// Entry point behind the `dyngrow` binary. `args` excludes the program name.
// Returns 0 on success, 1 on data or runtime errors, 2 on usage errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Parses "key=value" lines; '#' starts a comment. Throws FormatError.
std::map<std::string, std::string> read_config_file(const std::string& path);

}  // namespace dyngrow

#endif  // DYNGROW_CLI_HPP_
