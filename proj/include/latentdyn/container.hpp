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

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "latentdyn/tensor.hpp"

namespace latentdyn {

// Single-file tensor store:
//   "LDTN" | u16 version | u64 header length | JSON header | pad to 64 |
//   payloads, each 64-byte aligned, little-endian.
// Header: {"tensors": {name: {dtype, shape, offset, nbytes}}, "meta": {...}}
// with offsets relative to the start of the payload section.
class TensorContainer {
 public:
  using Entry = std::variant<Tensor, SpikeTensor, MaskTensor>;
  static constexpr std::uint16_t kVersion = 1;
  static constexpr std::size_t kAlign = 64;

  void Put(const std::string& name, Tensor t) { entries_[name] = std::move(t); }
  void Put(const std::string& name, SpikeTensor t) { entries_[name] = std::move(t); }
  void Put(const std::string& name, MaskTensor t) { entries_[name] = std::move(t); }

  bool Has(const std::string& name) const { return entries_.count(name) != 0; }
  const Tensor& F64(const std::string& name) const;
  const SpikeTensor& I64(const std::string& name) const;
  const MaskTensor& U8(const std::string& name) const;
  std::vector<std::string> Names() const;

  nlohmann::json& meta() { return meta_; }
  const nlohmann::json& meta() const { return meta_; }

  std::vector<std::uint8_t> Serialize() const;
  static TensorContainer Parse(std::span<const std::uint8_t> bytes);

  // Writes via a temporary file and rename.
  void Save(const std::filesystem::path& path) const;
  static TensorContainer Load(const std::filesystem::path& path);

  friend bool operator==(const TensorContainer&, const TensorContainer&) = default;

 private:
  const Entry& Find(const std::string& name) const;

  std::map<std::string, Entry> entries_;
  nlohmann::json meta_ = nlohmann::json::object();
};

std::vector<std::uint8_t> ReadFileBytes(const std::filesystem::path& path);
void WriteFileAtomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace latentdyn
