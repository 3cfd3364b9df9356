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

#include <stdexcept>
#include <string>
#include <string_view>

namespace latentdyn {

// Machine-readable error categories; the CLI prints the category name on
// stderr and maps each to a distinct exit code.
enum class ErrorCategory {
  kInvalidArgument,
  kShapeMismatch,
  kNonFinite,
  kDivergence,
  kIo,
  kSchema,
  kState,
};

std::string_view CategoryName(ErrorCategory c);
int ExitCode(ErrorCategory c);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}
  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

// Recoverable: a training step produced NaN/Inf. PBT ranks such members last.
class DivergenceError : public Error {
 public:
  explicit DivergenceError(const std::string& what)
      : Error(ErrorCategory::kDivergence, what) {}
};

[[noreturn]] inline void Fail(ErrorCategory c, const std::string& what) {
  throw Error(c, what);
}

inline void Require(bool cond, ErrorCategory c, const std::string& what) {
  if (!cond) throw Error(c, what);
}

}  // namespace latentdyn
