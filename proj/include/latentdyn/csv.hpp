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

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace latentdyn {

// Shortest round-trip decimal form; empty for nullopt.
std::string FormatNumber(double v);
std::string FormatNumber(std::optional<double> v);

std::string CsvQuote(const std::string& field);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t Column(const std::string& name) const;  // throws kSchema if absent
  std::optional<double> Number(std::size_t row, const std::string& column) const;

  std::string ToString() const;
  void Save(const std::filesystem::path& path) const;
  static CsvTable Parse(const std::string& text);
  static CsvTable Load(const std::filesystem::path& path);
};

}  // namespace latentdyn
