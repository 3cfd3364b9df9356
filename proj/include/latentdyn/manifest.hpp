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
#include <map>
#include <span>
#include <string>

#include "json.hpp"

namespace latentdyn {

// Hex SHA-1 of "blob <size>\0" + bytes, as `git hash-object` computes it.
std::string GitBlobHash(std::span<const std::uint8_t> bytes);
std::string GitBlobHashFile(const std::filesystem::path& path);
// SHA-1 of the compact dump of a JSON value. nlohmann sorts object keys, so
// the digest is independent of key order in the source document.
std::string ConfigHash(const nlohmann::json& config);

struct RunManifest {
  std::string command;
  nlohmann::json config;
  nlohmann::json seeds = nlohmann::json::object();
  std::map<std::string, std::string> inputs;   // path -> blob hash
  std::map<std::string, std::string> outputs;  // file name -> blob hash
  double wall_time_s = 0;

  nlohmann::json ToJson() const;
};

// Hashes every output listed in m.outputs (relative to dir) and writes
// dir/manifest.json.
void WriteManifest(const std::filesystem::path& dir, RunManifest m);

}  // namespace latentdyn
