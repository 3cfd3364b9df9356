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

#include "latentdyn/masking.hpp"

#include <cmath>

#include "latentdyn/rng.hpp"

namespace latentdyn {

MaskPair MakeCdMasks(const Shape& shape, double keep_ratio, std::uint64_t step_seed) {
  Require(keep_ratio > 0 && keep_ratio < 1, ErrorCategory::kInvalidArgument,
          "keep_ratio must be in the open interval (0, 1)");
  MaskPair m{MaskTensor(shape), MaskTensor(shape)};
  Rng rng = MakeRng(step_seed, "cd_mask");
  for (std::size_t i = 0; i < m.input_keep.size(); ++i) {
    const bool keep = Uniform01(rng) < keep_ratio;
    m.input_keep[i] = keep;
    m.grad_keep[i] = !keep;
  }
  return m;
}

SpeckleHoldout MakeSpeckleHoldout(const Shape& shape, double holdout_frac, std::uint64_t seed) {
  Require(holdout_frac > 0 && holdout_frac < 1, ErrorCategory::kInvalidArgument,
          "holdout_frac must be in the open interval (0, 1)");
  SpeckleHoldout h{MaskTensor(shape), holdout_frac};
  Rng rng = MakeRng(seed, "sv_holdout");
  for (auto& v : h.held_out.data()) v = Uniform01(rng) < holdout_frac;
  return h;
}

Tensor ApplyInputMask(const SpikeTensor& x, const MaskTensor& keep,
                      std::optional<double> rescale_keep_ratio) {
  RequireSameShape(x.shape(), keep.shape(), "apply_input_mask");
  double scale = 1.0;
  if (rescale_keep_ratio) {
    Require(*rescale_keep_ratio > 0 && *rescale_keep_ratio <= 1, ErrorCategory::kInvalidArgument,
            "rescale keep ratio must be in (0, 1]");
    scale = 1.0 / *rescale_keep_ratio;
  }
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = keep[i] ? static_cast<double>(x[i]) * scale : 0.0;
  }
  return out;
}

MaskedNll MaskedPoissonNll(const Tensor& rates, const SpikeTensor& counts,
                           const MaskTensor& include) {
  RequireSameShape(rates.shape(), counts.shape(), "masked_poisson_nll");
  if (!include.empty()) RequireSameShape(rates.shape(), include.shape(), "masked_poisson_nll mask");
  constexpr double kFloor = 1e-10;
  MaskedNll out;
  for (std::size_t i = 0; i < rates.size(); ++i) {
    if (!include.empty() && !include[i]) continue;
    Require(rates[i] > 0, ErrorCategory::kInvalidArgument,
            "nonpositive rate on an included element");
    const double lambda = std::max(rates[i], kFloor);
    const double k = static_cast<double>(counts[i]);
    out.total += lambda - k * std::log(lambda) + std::lgamma(k + 1.0);
    ++out.count;
  }
  return out;
}

StepMasks ComposeStepMasks(const Shape& shape, const StepMaskOptions& opts,
                           std::uint64_t step_seed) {
  StepMasks m{MaskTensor(shape, 1), MaskTensor(shape, 1), 1.0};
  if (opts.cd_enabled) {
    MaskPair cd = MakeCdMasks(shape, opts.keep_ratio, step_seed);
    m.input_keep = std::move(cd.input_keep);
    m.loss_include = std::move(cd.grad_keep);
    if (opts.cd_rescale) m.input_scale /= opts.keep_ratio;
  }
  if (opts.sv_held_out != nullptr) {
    RequireSameShape(shape, opts.sv_held_out->shape(), "sv holdout");
    const MaskTensor& held = *opts.sv_held_out;
    for (std::size_t i = 0; i < held.size(); ++i) {
      if (held[i]) {
        m.input_keep[i] = 0;
        m.loss_include[i] = 0;
      }
    }
    Require(opts.sv_frac >= 0 && opts.sv_frac < 1, ErrorCategory::kInvalidArgument,
            "sv_frac must be in [0, 1)");
    m.input_scale /= 1.0 - opts.sv_frac;
  }
  return m;
}

std::uint64_t MaskHash(const MaskTensor& mask) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t d : mask.shape()) h = Mix64(h ^ d);
  for (auto v : mask.data()) {
    h ^= v;
    h *= 0x100000001b3ULL;
  }
  return h;
}

double MaskFraction(const MaskTensor& mask) {
  if (mask.empty()) return 0.0;
  std::size_t n = 0;
  for (auto v : mask.data()) n += v != 0;
  return static_cast<double>(n) / static_cast<double>(mask.size());
}

}  // namespace latentdyn
