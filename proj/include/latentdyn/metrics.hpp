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

#include <span>
#include <vector>

#include "latentdyn/tensor.hpp"

namespace latentdyn {

// 1 - SS_res / SS_tot over all elements.
double R2(std::span<const double> pred, std::span<const double> target);

// Mean of per-column R2 where columns are the last axis; columns with zero
// target variance are skipped.
double R2PerColumn(const Tensor& pred, const Tensor& target);

// Fractional ranks, ties averaged, 1-based.
std::vector<double> Ranks(std::span<const double> x);

double Pearson(std::span<const double> x, std::span<const double> y);
double Spearman(std::span<const double> x, std::span<const double> y);

}  // namespace latentdyn
