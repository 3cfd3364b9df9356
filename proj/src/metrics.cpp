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

#include "latentdyn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "latentdyn/error.hpp"

namespace latentdyn {

double R2(std::span<const double> pred, std::span<const double> target) {
  Require(pred.size() == target.size(), ErrorCategory::kShapeMismatch, "r2 length mismatch");
  Require(!target.empty(), ErrorCategory::kInvalidArgument, "r2 of empty input");
  const double mean = std::accumulate(target.begin(), target.end(), 0.0) / static_cast<double>(target.size());
  double ss_res = 0, ss_tot = 0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    ss_res += (target[i] - pred[i]) * (target[i] - pred[i]);
    ss_tot += (target[i] - mean) * (target[i] - mean);
  }
  Require(ss_tot > 0, ErrorCategory::kInvalidArgument, "r2 target has zero variance");
  return 1.0 - ss_res / ss_tot;
}

double R2PerColumn(const Tensor& pred, const Tensor& target) {
  RequireSameShape(pred.shape(), target.shape(), "r2 per column");
  Require(target.rank() >= 1 && !target.empty(), ErrorCategory::kInvalidArgument, "r2 of empty input");
  const std::size_t cols = target.dim(target.rank() - 1);
  const std::size_t rows = target.size() / cols;
  double sum = 0;
  std::size_t used = 0;
  std::vector<double> p(rows), t(rows);
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t r = 0; r < rows; ++r) {
      p[r] = pred[r * cols + c];
      t[r] = target[r * cols + c];
    }
    const auto [lo, hi] = std::minmax_element(t.begin(), t.end());
    if (*lo == *hi) continue;
    sum += R2(p, t);
    ++used;
  }
  Require(used > 0, ErrorCategory::kInvalidArgument, "r2 target has zero variance in every column");
  return sum / static_cast<double>(used);
}

std::vector<double> Ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double Pearson(std::span<const double> x, std::span<const double> y) {
  Require(x.size() == y.size() && x.size() >= 2, ErrorCategory::kInvalidArgument,
          "pearson needs two equal-length series of length >= 2");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  Require(sxx > 0 && syy > 0, ErrorCategory::kInvalidArgument, "correlation of a constant series");
  return sxy / std::sqrt(sxx * syy);
}

double Spearman(std::span<const double> x, std::span<const double> y) {
  const std::vector<double> rx = Ranks(x), ry = Ranks(y);
  return Pearson(rx, ry);
}

}  // namespace latentdyn
