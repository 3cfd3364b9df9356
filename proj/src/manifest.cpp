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

#include "latentdyn/manifest.hpp"

#include <openssl/evp.h>

#include <memory>

#include <chrono>
#include <cstdio>
#include <ctime>

#include "latentdyn/container.hpp"
#include "latentdyn/error.hpp"

namespace latentdyn {
namespace {

std::string Hex(const unsigned char* d, std::size_t n) {
  static const char* kDigits = "0123456789abcdef";
  std::string s(2 * n, '0');
  for (std::size_t i = 0; i < n; ++i) {
    s[2 * i] = kDigits[d[i] >> 4];
    s[2 * i + 1] = kDigits[d[i] & 15];
  }
  return s;
}

std::string Sha1(std::string_view prefix, std::span<const std::uint8_t> bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  unsigned char out[EVP_MAX_MD_SIZE];
  unsigned int n = 0;
  const bool ok = ctx && EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx.get(), prefix.data(), prefix.size()) == 1 &&
                  EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx.get(), out, &n) == 1;
  Require(ok, ErrorCategory::kState, "sha1 digest failed");
  return Hex(out, n);
}

std::string UtcNow() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::string GitBlobHash(std::span<const std::uint8_t> bytes) {
  std::string prefix = "blob " + std::to_string(bytes.size());
  prefix.push_back('\0');
  return Sha1(prefix, bytes);
}

std::string GitBlobHashFile(const std::filesystem::path& path) { return GitBlobHash(ReadFileBytes(path)); }

std::string ConfigHash(const nlohmann::json& config) {
  const std::string s = config.dump();
  return Sha1("", {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
}

nlohmann::json RunManifest::ToJson() const {
  return {{"command", command},   {"config", config},           {"config_hash", ConfigHash(config)},
          {"seeds", seeds},       {"inputs", inputs},           {"outputs", outputs},
          {"wall_time_s", wall_time_s}, {"created_utc", UtcNow()}};
}

void WriteManifest(const std::filesystem::path& dir, RunManifest m) {
  for (auto& [name, hash] : m.outputs) {
    const auto p = dir / name;
    Require(std::filesystem::exists(p), ErrorCategory::kIo, "expected output missing: " + p.string());
    hash = GitBlobHashFile(p);
  }
  const std::string text = m.ToJson().dump(2) + "\n";
  WriteFileAtomic(dir / "manifest.json", {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

}  // namespace latentdyn
