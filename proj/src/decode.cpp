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

#include "latentdyn/decode.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "latentdyn/error.hpp"
#include "latentdyn/metrics.hpp"
#include "latentdyn/rng.hpp"

namespace latentdyn {

double DecodeResult::MeanR2() const {
  Require(!r2_per_dim.empty(), ErrorCategory::kState, "empty decode result");
  return std::accumulate(r2_per_dim.begin(), r2_per_dim.end(), 0.0) / static_cast<double>(r2_per_dim.size());
}

DecodeResult FitOleCv(const Tensor& features, const Tensor& target, std::size_t k_folds, std::uint64_t seed) {
  Require(features.rank() == 3 && target.rank() == 3, ErrorCategory::kShapeMismatch,
          "decode expects [trial, bin, dim] features and target");
  Require(features.dim(0) == target.dim(0) && features.dim(1) == target.dim(1), ErrorCategory::kShapeMismatch,
          "features " + ShapeString(features.shape()) + " and target " + ShapeString(target.shape()) +
              " disagree on trials/bins");
  const std::size_t trials = features.dim(0), bins = features.dim(1), nf = features.dim(2), nk = target.dim(2);
  Require(k_folds >= 2, ErrorCategory::kInvalidArgument, "k_folds must be >= 2");
  Require(trials >= k_folds, ErrorCategory::kInvalidArgument, "need at least k_folds trials");

  DecodeResult res;
  std::vector<std::size_t> order(trials);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = MakeRng(seed, "decode/folds");
  std::shuffle(order.begin(), order.end(), rng);
  res.fold_of_trial.assign(trials, 0);
  for (std::size_t i = 0; i < trials; ++i) res.fold_of_trial[order[i]] = i % k_folds;
  res.predictions = Tensor({trials, bins, nk});

  for (std::size_t fold = 0; fold < k_folds; ++fold) {
    std::vector<std::size_t> train, test;
    for (std::size_t t = 0; t < trials; ++t) (res.fold_of_trial[t] == fold ? test : train).push_back(t);
    const auto rows = static_cast<Eigen::Index>(train.size() * bins);
    Eigen::MatrixXd x(rows, static_cast<Eigen::Index>(nf + 1));
    Eigen::MatrixXd y(rows, static_cast<Eigen::Index>(nk));
    Eigen::Index r = 0;
    for (std::size_t t : train) {
      for (std::size_t b = 0; b < bins; ++b, ++r) {
        for (std::size_t f = 0; f < nf; ++f) x(r, static_cast<Eigen::Index>(f)) = features.at(t, b, f);
        x(r, static_cast<Eigen::Index>(nf)) = 1.0;
        for (std::size_t k = 0; k < nk; ++k) y(r, static_cast<Eigen::Index>(k)) = target.at(t, b, k);
      }
    }
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(x);
    if (cod.rank() < x.cols()) {
      if (!res.rank_deficient) {
        std::cerr << "warning: decode design is rank deficient (rank " << cod.rank() << " of " << x.cols()
                  << "); using the least-norm solution\n";
      }
      res.rank_deficient = true;
    }
    const Eigen::MatrixXd w = cod.solve(y);
    Tensor wt({nf + 1, nk});
    for (std::size_t i = 0; i <= nf; ++i)
      for (std::size_t k = 0; k < nk; ++k) wt.at(i, k) = w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
    res.weights.push_back(std::move(wt));
    for (std::size_t t : test) {
      for (std::size_t b = 0; b < bins; ++b) {
        for (std::size_t k = 0; k < nk; ++k) {
          double p = w(static_cast<Eigen::Index>(nf), static_cast<Eigen::Index>(k));
          for (std::size_t f = 0; f < nf; ++f) p += features.at(t, b, f) * w(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(k));
          res.predictions.at(t, b, k) = p;
        }
      }
    }
  }
  std::vector<double> p(trials * bins), y(trials * bins);
  for (std::size_t k = 0; k < nk; ++k) {
    for (std::size_t i = 0; i < trials * bins; ++i) {
      p[i] = res.predictions[i * nk + k];
      y[i] = target[i * nk + k];
    }
    res.r2_per_dim.push_back(R2(p, y));
  }
  return res;
}

std::vector<double> GaussianKernel(double sigma_bins) {
  Require(sigma_bins > 0, ErrorCategory::kInvalidArgument, "sigma must be > 0");
  const auto half = static_cast<std::ptrdiff_t>(std::floor(4.0 * sigma_bins));
  std::vector<double> k;
  for (std::ptrdiff_t i = -half; i <= half; ++i) {
    const double x = static_cast<double>(i) / sigma_bins;
    k.push_back(std::exp(-0.5 * x * x));
  }
  const double s = std::accumulate(k.begin(), k.end(), 0.0);
  for (double& v : k) v /= s;
  return k;
}

Tensor GaussianSmooth(const SpikeTensor& spikes, double sigma, double bin_width) {
  Require(spikes.rank() == 3, ErrorCategory::kShapeMismatch, "spikes must be [trial, bin, neuron]");
  Require(sigma > 0 && bin_width > 0, ErrorCategory::kInvalidArgument, "sigma and bin_width must be > 0");
  const std::vector<double> k = GaussianKernel(sigma / bin_width);
  const auto half = static_cast<std::ptrdiff_t>(k.size() / 2);
  const std::size_t trials = spikes.dim(0), bins = spikes.dim(1), n = spikes.dim(2);
  Tensor out({trials, bins, n});
  for (std::size_t tr = 0; tr < trials; ++tr) {
    for (std::size_t b = 0; b < bins; ++b) {
      for (std::ptrdiff_t o = -half; o <= half; ++o) {
        const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(b) + o;
        if (src < 0 || src >= static_cast<std::ptrdiff_t>(bins)) continue;
        const double w = k[static_cast<std::size_t>(o + half)];
        for (std::size_t j = 0; j < n; ++j) {
          out.at(tr, b, j) += w * static_cast<double>(spikes.at(tr, static_cast<std::size_t>(src), j));
        }
      }
    }
  }
  return out;
}

Tensor IntegrateTrajectory(const Tensor& velocity, double bin_width) {
  Require(velocity.rank() == 2, ErrorCategory::kShapeMismatch, "velocity must be [bin, dim]");
  Tensor pos(velocity.shape());
  const std::size_t bins = velocity.dim(0), d = velocity.dim(1);
  for (std::size_t j = 0; j < d; ++j) {
    double acc = 0;
    for (std::size_t b = 0; b < bins; ++b) {
      acc += velocity.at(b, j) * bin_width;
      pos.at(b, j) = acc;
    }
  }
  return pos;
}

}  // namespace latentdyn
