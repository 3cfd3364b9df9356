// Copyright 2026 The LatentDyn Authors.
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

#include "latentdyn/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "latentdyn/container.hpp"
#include "latentdyn/error.hpp"

namespace latentdyn {

std::string FormatNumber(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string FormatNumber(std::optional<double> v) { return v ? FormatNumber(*v) : std::string(); }

std::string CsvQuote(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::size_t CsvTable::Column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  Fail(ErrorCategory::kSchema, "csv has no column '" + name + "'");
}

std::optional<double> CsvTable::Number(std::size_t row, const std::string& column) const {
  const std::string& s = rows.at(row).at(Column(column));
  if (s.empty()) return std::nullopt;
  if (s == "nan") return std::nan("");
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  double v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  Require(res.ec == std::errc() && res.ptr == s.data() + s.size(), ErrorCategory::kSchema,
          "csv value '" + s + "' in column '" + column + "' is not a number");
  return v;
}

std::string CsvTable::ToString() const {
  std::string out;
  auto line = [&](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out += ',';
      out += CsvQuote(fields[i]);
    }
    out += '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out;
}

void CsvTable::Save(const std::filesystem::path& path) const {
  const std::string s = ToString();
  WriteFileAtomic(path, std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

CsvTable CsvTable::Parse(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> rec;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      rec.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      rec.push_back(std::move(field));
      field.clear();
      records.push_back(std::move(rec));
      rec.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  Require(!quoted, ErrorCategory::kSchema, "csv ends inside a quoted field");
  if (any) {
    rec.push_back(std::move(field));
    records.push_back(std::move(rec));
  }
  Require(!records.empty(), ErrorCategory::kSchema, "csv is empty");
  CsvTable t;
  t.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    Require(records[r].size() == t.header.size(), ErrorCategory::kSchema,
            "csv row " + std::to_string(r) + " has " + std::to_string(records[r].size()) + " fields, expected " +
                std::to_string(t.header.size()));
    t.rows.push_back(std::move(records[r]));
  }
  return t;
}

CsvTable CsvTable::Load(const std::filesystem::path& path) {
  const auto bytes = ReadFileBytes(path);
  return Parse(std::string(bytes.begin(), bytes.end()));
}

}  // namespace latentdyn
