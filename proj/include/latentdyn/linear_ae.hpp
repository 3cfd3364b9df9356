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

#include "latentdyn/datagen.hpp"
#include "latentdyn/tensor.hpp"

namespace latentdyn {

struct LinearAeOptions {
  bool cd_enabled = false;
  double keep_ratio = 0.8;
  std::size_t steps = 5000;
  double learning_rate = 0.01;
  bool random_init = false;  // zero init otherwise
  std::uint64_t seed = 0;
  std::size_t record_every = 10;
};

struct LinearAeCurvePoint {
  std::size_t step = 0;
  double train_recon = 0;  // unmasked, vs noisy training y
  double valid_recon = 0;  // vs noisy validation y
  double valid_true = 0;   // vs noise-free validation y_true
};

struct LinearAeState {
  Tensor u;  // [M, M], y_hat = U y
  std::size_t step = 0;
  std::vector<LinearAeCurvePoint> curve;
  double max_abs_diag_seen = 0;  // over all steps
};

// Full-batch gradient descent on mean_i ||U y_i - y_i||^2. With CD each
// step draws a complementary mask pair: U sees the kept (rescaled) inputs
// and the loss is taken over the dropped elements only.
LinearAeState TrainLinearAe(const LinearDemoDataset& data, const LinearAeOptions& opts);

// mean_i ||U x_i - target_i||^2 for row-sample matrices x, target [n, M].
double LinearAeLoss(const Tensor& u, const Tensor& x, const Tensor& target);

// Validation loss_true of the projector onto the top-D right singular
// subspace of the training y_true, applied to noisy validation y.
double OracleTrueLoss(const LinearDemoDataset& data);

double MeanAbsDiagMinusOne(const Tensor& u);
double MaxAbsDiag(const Tensor& u);

}  // namespace latentdyn
