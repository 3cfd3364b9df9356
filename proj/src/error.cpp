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

#include "latentdyn/error.hpp"

namespace latentdyn {

std::string_view CategoryName(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::kInvalidArgument: return "invalid_argument";
    case ErrorCategory::kShapeMismatch: return "shape_mismatch";
    case ErrorCategory::kNonFinite: return "non_finite";
    case ErrorCategory::kDivergence: return "divergence";
    case ErrorCategory::kIo: return "io";
    case ErrorCategory::kSchema: return "schema";
    case ErrorCategory::kState: return "state";
  }
  return "unknown";
}

int ExitCode(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::kInvalidArgument: return 2;
    case ErrorCategory::kSchema: return 3;
    case ErrorCategory::kIo: return 4;
    case ErrorCategory::kShapeMismatch: return 5;
    case ErrorCategory::kNonFinite: return 6;
    case ErrorCategory::kDivergence: return 7;
    case ErrorCategory::kState: return 8;
  }
  return 1;
}

}  // namespace latentdyn
