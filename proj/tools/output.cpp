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


#include "output.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <ostream>

#include "usdcert/error.hpp"

namespace usdcert::cli {

void Table::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size()) throw InvalidInput("table row width does not match the header");
  rows.push_back(std::move(row));
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string param_text(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) return format_double(v.get<double>());
  return v.dump();
}

}  // namespace

std::string cell_to_csv(const Cell& cell) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return "";
        } else if constexpr (std::is_same_v<T, bool>) {
          return v ? "true" : "false";
        } else if constexpr (std::is_same_v<T, double>) {
          return format_double(v);
        } else if constexpr (std::is_same_v<T, std::string>) {
          return csv_escape(v);
        } else {
          return std::to_string(v);
        }
      },
      cell);
}

nlohmann::json cell_to_json(const Cell& cell) {
  return std::visit(
      [](const auto& v) -> nlohmann::json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return nullptr;
        } else if constexpr (std::is_same_v<T, double>) {
          if (!std::isfinite(v)) return format_double(v);
          return v;
        } else {
          return v;
        }
      },
      cell);
}

void write_csv_header(std::ostream& out, const Meta& meta) {
  out << "# usdcert " << USDCERT_VERSION << '\n';
  out << "# command=" << meta.command << " seed=" << meta.seed;
  for (const auto& [key, value] : meta.params) out << ' ' << key << '=' << param_text(value);
  out << '\n';
  for (const auto& note : meta.notes) out << "# " << note << '\n';
}

void write_csv(std::ostream& out, const Meta& meta, const Table& table) {
  write_csv_header(out, meta);
  for (std::size_t c = 0; c < table.columns.size(); ++c) out << (c ? "," : "") << table.columns[c];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << cell_to_csv(row[c]);
    out << '\n';
  }
}

nlohmann::json meta_json(const Meta& meta) {
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [key, value] : meta.params) params[key] = value;
  nlohmann::json j{{"version", USDCERT_VERSION}, {"command", meta.command}, {"seed", meta.seed}, {"params", params}};
  if (!meta.notes.empty()) j["notes"] = meta.notes;
  return j;
}

void write_json(std::ostream& out, const Meta& meta, const Table& table) {
  nlohmann::json results = nlohmann::json::array();
  for (const auto& row : table.rows) {
    nlohmann::json obj = nlohmann::json::object();
    for (std::size_t c = 0; c < row.size(); ++c) obj[table.columns[c]] = cell_to_json(row[c]);
    results.push_back(std::move(obj));
  }
  nlohmann::json doc{{"meta", meta_json(meta)}, {"results", std::move(results)}};
  out << doc.dump(2) << '\n';
}

void write_table(std::ostream& out, Format format, const Meta& meta, const Table& table) {
  if (format == Format::kJson) {
    write_json(out, meta, table);
  } else {
    write_csv(out, meta, table);
  }
}

std::optional<std::filesystem::path> resolve_output(const std::string& out, const std::string& command,
                                                    std::uint64_t seed, Format format) {
  const char* env = std::getenv("USDCERT_OUTPUT_DIR");
  const std::filesystem::path dir = env && *env ? std::filesystem::path(env) : std::filesystem::path();
  if (out == "-") return std::nullopt;
  if (out.empty()) {
    if (dir.empty()) return std::nullopt;
    const char* ext = format == Format::kJson ? ".json" : ".csv";
    return dir / (command + "-seed" + std::to_string(seed) + ext);
  }
  std::filesystem::path p(out);
  if (p.is_relative() && !dir.empty()) p = dir / p;
  return p;
}

}  // namespace usdcert::cli
