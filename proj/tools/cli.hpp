// Copyright 2026 The usdcert Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef USDCERT_TOOLS_CLI_HPP
#define USDCERT_TOOLS_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace usdcert::cli {

/// Parses and runs one command line. `args` excludes the program name.
/// Table output goes to `out` unless redirected to a file; diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace usdcert::cli

#endif  // USDCERT_TOOLS_CLI_HPP
