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

#include "latentdyn/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "latentdyn/error.hpp"

namespace latentdyn {

static_assert(std::endian::native == std::endian::little, "container I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'L', 'D', 'T', 'N'};
constexpr std::size_t kPreamble = 4 + 2 + 8;

std::size_t AlignUp(std::size_t n, std::size_t a) { return (n + a - 1) / a * a; }

template <typename T>
const char* DtypeName() {
  if constexpr (std::is_same_v<T, double>) return "f64";
  if constexpr (std::is_same_v<T, std::int64_t>) return "i64";
  return "u8";
}

template <typename T>
BasicTensor<T> ReadTensor(std::span<const std::uint8_t> payload, const nlohmann::json& h) {
  const Shape shape = h.at("shape").get<Shape>();
  const std::size_t offset = h.at("offset").get<std::size_t>();
  const std::size_t nbytes = NumElements(shape) * sizeof(T);
  Require(h.at("nbytes").get<std::size_t>() == nbytes, ErrorCategory::kSchema, "container nbytes disagrees with shape");
  Require(offset % TensorContainer::kAlign == 0, ErrorCategory::kSchema, "container payload misaligned");
  Require(offset <= payload.size() && nbytes <= payload.size() - offset, ErrorCategory::kSchema,
          "container payload out of range");
  std::vector<T> data(NumElements(shape));
  if (nbytes) std::memcpy(data.data(), payload.data() + offset, nbytes);
  return BasicTensor<T>(shape, std::move(data));
}

}  // namespace

const TensorContainer::Entry& TensorContainer::Find(const std::string& name) const {
  const auto it = entries_.find(name);
  Require(it != entries_.end(), ErrorCategory::kSchema, "container has no tensor '" + name + "'");
  return it->second;
}

const Tensor& TensorContainer::F64(const std::string& name) const {
  const Entry& e = Find(name);
  Require(std::holds_alternative<Tensor>(e), ErrorCategory::kSchema, "tensor '" + name + "' is not f64");
  return std::get<Tensor>(e);
}

const SpikeTensor& TensorContainer::I64(const std::string& name) const {
  const Entry& e = Find(name);
  Require(std::holds_alternative<SpikeTensor>(e), ErrorCategory::kSchema, "tensor '" + name + "' is not i64");
  return std::get<SpikeTensor>(e);
}

const MaskTensor& TensorContainer::U8(const std::string& name) const {
  const Entry& e = Find(name);
  Require(std::holds_alternative<MaskTensor>(e), ErrorCategory::kSchema, "tensor '" + name + "' is not u8");
  return std::get<MaskTensor>(e);
}

std::vector<std::string> TensorContainer::Names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : entries_) out.push_back(k);
  return out;
}

std::vector<std::uint8_t> TensorContainer::Serialize() const {
  nlohmann::json tensors = nlohmann::json::object();
  std::size_t offset = 0;
  for (const auto& [name, entry] : entries_) {
    std::visit(
        [&](const auto& t) {
          using T = typename std::decay_t<decltype(t)>::value_type;
          const std::size_t nbytes = t.size() * sizeof(T);
          tensors[name] = {{"dtype", DtypeName<T>()}, {"shape", t.shape()}, {"offset", offset}, {"nbytes", nbytes}};
          offset = AlignUp(offset + nbytes, kAlign);
        },
        entry);
  }
  const std::string header = nlohmann::json{{"tensors", tensors}, {"meta", meta_}}.dump();
  const std::size_t data_start = AlignUp(kPreamble + header.size(), kAlign);
  std::vector<std::uint8_t> out(data_start + offset, 0);
  std::memcpy(out.data(), kMagic, 4);
  const std::uint16_t version = kVersion;
  std::memcpy(out.data() + 4, &version, 2);
  const std::uint64_t hlen = header.size();
  std::memcpy(out.data() + 6, &hlen, 8);
  std::memcpy(out.data() + kPreamble, header.data(), header.size());
  for (const auto& [name, entry] : entries_) {
    const std::size_t off = tensors[name]["offset"].get<std::size_t>();
    std::visit(
        [&](const auto& t) {
          using T = typename std::decay_t<decltype(t)>::value_type;
          if (t.size()) std::memcpy(out.data() + data_start + off, t.data().data(), t.size() * sizeof(T));
        },
        entry);
  }
  return out;
}

TensorContainer TensorContainer::Parse(std::span<const std::uint8_t> bytes) {
  Require(bytes.size() >= kPreamble && std::memcmp(bytes.data(), kMagic, 4) == 0, ErrorCategory::kSchema,
          "not a tensor container (bad magic)");
  std::uint16_t version = 0;
  std::memcpy(&version, bytes.data() + 4, 2);
  Require(version == kVersion, ErrorCategory::kSchema, "unsupported container version " + std::to_string(version));
  std::uint64_t hlen = 0;
  std::memcpy(&hlen, bytes.data() + 6, 8);
  Require(hlen <= bytes.size() - kPreamble, ErrorCategory::kSchema, "container header truncated");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + kPreamble, bytes.begin() + kPreamble + static_cast<std::ptrdiff_t>(hlen));
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCategory::kSchema, std::string("container header is not JSON: ") + e.what());
  }
  const std::size_t data_start = AlignUp(kPreamble + hlen, kAlign);
  Require(data_start <= bytes.size(), ErrorCategory::kSchema, "container payload truncated");
  const auto payload = bytes.subspan(data_start);
  TensorContainer c;
  try {
    c.meta_ = header.at("meta");
    for (const auto& [name, h] : header.at("tensors").items()) {
      const std::string dtype = h.at("dtype").get<std::string>();
      if (dtype == "f64") {
        c.entries_[name] = ReadTensor<double>(payload, h);
      } else if (dtype == "i64") {
        c.entries_[name] = ReadTensor<std::int64_t>(payload, h);
      } else if (dtype == "u8") {
        c.entries_[name] = ReadTensor<std::uint8_t>(payload, h);
      } else {
        Fail(ErrorCategory::kSchema, "unknown dtype '" + dtype + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCategory::kSchema, std::string("malformed container header: ") + e.what());
  }
  return c;
}

void TensorContainer::Save(const std::filesystem::path& path) const { WriteFileAtomic(path, Serialize()); }

TensorContainer TensorContainer::Load(const std::filesystem::path& path) { return Parse(ReadFileBytes(path)); }

std::vector<std::uint8_t> ReadFileBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  Require(static_cast<bool>(in), ErrorCategory::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

void WriteFileAtomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    Require(static_cast<bool>(out), ErrorCategory::kIo, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    Require(static_cast<bool>(out), ErrorCategory::kIo, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace latentdyn
