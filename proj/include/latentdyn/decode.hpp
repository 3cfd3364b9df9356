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
#include <vector>

#include "latentdyn/tensor.hpp"

namespace latentdyn {

struct DecodeResult {
  std::vector<double> r2_per_dim;         // pooled over held-out folds
  std::vector<std::size_t> fold_of_trial;
  std::vector<Tensor> weights;            // per fold, [n_features + 1, n_out], bias last
  Tensor predictions;                     // held-out predictions, [trial, bin, n_out]
  bool rank_deficient = false;

  double MeanR2() const;
};

// Optimal linear estimation with a bias term and trial-level k-fold CV.
// Rank-deficient designs use the least-norm solution and warn on stderr.
DecodeResult FitOleCv(const Tensor& features, const Tensor& target, std::size_t k_folds, std::uint64_t seed);

// Normalized Gaussian kernel truncated at +-4 sigma (sigma in bins).
std::vector<double> GaussianKernel(double sigma_bins);

// Per trial and neuron convolution of counts with GaussianKernel(sigma / bin_width).
Tensor GaussianSmooth(const SpikeTensor& spikes, double sigma, double bin_width);

// Position after each bin, starting from the origin: cumsum(v) * bin_width.
Tensor IntegrateTrajectory(const Tensor& velocity, double bin_width);

}  // namespace latentdyn
