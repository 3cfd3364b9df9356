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
#include <random>
#include <string_view>

namespace latentdyn {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
constexpr std::uint64_t Mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t Fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Named-stream splitter: every subsystem derives its own seed from the
// top-level seed and a purpose string, so streams never alias.
constexpr std::uint64_t StreamSeed(std::uint64_t seed, std::string_view purpose) {
  return Mix64(Mix64(seed) ^ Fnv1a(purpose));
}

constexpr std::uint64_t StreamSeed(std::uint64_t seed, std::string_view purpose,
                                   std::uint64_t index) {
  return Mix64(StreamSeed(seed, purpose) + Mix64(index + 1));
}

inline Rng MakeRng(std::uint64_t seed, std::string_view purpose) {
  return Rng(StreamSeed(seed, purpose));
}

inline Rng MakeRng(std::uint64_t seed, std::string_view purpose, std::uint64_t index) {
  return Rng(StreamSeed(seed, purpose, index));
}

// Uniform double in [0, 1) from the top 53 bits; identical on every platform,
// unlike std::uniform_real_distribution.
inline double Uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace latentdyn
