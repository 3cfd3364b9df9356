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
#include <optional>

#include "latentdyn/tensor.hpp"

namespace latentdyn {

// Coordinated-dropout masks for one training step. Every element is in
// exactly one of the two: shown at the input, or scored at the output.
struct MaskPair {
  MaskTensor input_keep;
  MaskTensor grad_keep;
};

MaskPair MakeCdMasks(const Shape& shape, double keep_ratio, std::uint64_t step_seed);

// Persistent speckled holdout over [trial, bin, neuron]; true = held out.
struct SpeckleHoldout {
  MaskTensor held_out;
  double holdout_frac = 0;
};

SpeckleHoldout MakeSpeckleHoldout(const Shape& shape, double holdout_frac, std::uint64_t seed);

// Zeroes elements where keep is false. With rescale_keep_ratio set, the
// surviving elements are multiplied by 1 / *rescale_keep_ratio.
Tensor ApplyInputMask(const SpikeTensor& x, const MaskTensor& keep,
                      std::optional<double> rescale_keep_ratio = std::nullopt);

struct MaskedNll {
  double total = 0;
  std::size_t count = 0;
  double mean() const { return count ? total / static_cast<double>(count) : 0.0; }
};

// Sum of Poisson NLL (lambda - k log lambda + log k!) over included
// elements, rates given per bin. An empty include mask includes everything.
MaskedNll MaskedPoissonNll(const Tensor& rates, const SpikeTensor& counts,
                           const MaskTensor& include = {});

// What the model sees and what it is scored on during one training step,
// after composing optional CD masks with an optional SV holdout.
struct StepMasks {
  MaskTensor input_keep;
  MaskTensor loss_include;
  double input_scale = 1.0;
};

struct StepMaskOptions {
  bool cd_enabled = false;
  double keep_ratio = 0.7;
  bool cd_rescale = true;
  const MaskTensor* sv_held_out = nullptr;  // same shape as the batch
  double sv_frac = 0.0;
};

StepMasks ComposeStepMasks(const Shape& shape, const StepMaskOptions& opts,
                           std::uint64_t step_seed);

std::uint64_t MaskHash(const MaskTensor& mask);
double MaskFraction(const MaskTensor& mask);

}  // namespace latentdyn
