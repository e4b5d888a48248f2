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


#ifndef USDCERT_TOOLS_OUTPUT_HPP
#define USDCERT_TOOLS_OUTPUT_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace usdcert::cli {

enum class Format { kCsv, kJson };

/// One cell. Empty monostate renders as an empty CSV field and JSON null.
using Cell = std::variant<std::monostate, bool, std::int64_t, std::uint64_t, double, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row);
};

/// Ordered parameter echo for the output header.
using Params = std::vector<std::pair<std::string, nlohmann::json>>;

struct Meta {
  std::string command;
  std::uint64_t seed = 0;
  Params params;
  std::vector<std::string> notes;  ///< extra comment lines (CSV) / "notes" array (JSON)
};

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

std::string cell_to_csv(const Cell& cell);
nlohmann::json cell_to_json(const Cell& cell);

/// `# usdcert <version>` and `# command=... seed=... key=value ...` lines.
void write_csv_header(std::ostream& out, const Meta& meta);
void write_csv(std::ostream& out, const Meta& meta, const Table& table);

nlohmann::json meta_json(const Meta& meta);
/// {"meta": {...}, "results": [{column: value, ...}, ...]}
void write_json(std::ostream& out, const Meta& meta, const Table& table);

void write_table(std::ostream& out, Format format, const Meta& meta, const Table& table);

/// Resolves --out against USDCERT_OUTPUT_DIR. Returns nullopt for stdout.
std::optional<std::filesystem::path> resolve_output(const std::string& out, const std::string& command,
                                                    std::uint64_t seed, Format format);

}  // namespace usdcert::cli

#endif  // USDCERT_TOOLS_OUTPUT_HPP
