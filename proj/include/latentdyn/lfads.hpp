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
#include <string>
#include <vector>

#include "latentdyn/autodiff.hpp"
#include "latentdyn/tensor.hpp"

namespace latentdyn {

struct Architecture {
  std::size_t enc_dim = 64;
  std::size_t gen_dim = 64;
  std::size_t con_dim = 64;
  std::size_t factor_dim = 20;
  std::size_t z_dim = 32;
  std::size_t u_dim = 2;  // 0 gives the autonomous model
  std::size_t n_neurons = 50;
  std::size_t n_bins = 100;

  void Validate() const;
  friend bool operator==(const Architecture&, const Architecture&) = default;
};

// The seven searched hyperparameters.
struct HyperParams {
  double l2_gen_scale = 500.0;
  double l2_con_scale = 500.0;
  double kl_ic_scale = 0.5;
  double kl_co_scale = 0.5;
  double dropout_prob = 0.05;
  double keep_ratio = 0.7;
  double learning_rate = 0.01;

  void Validate() const;
  friend bool operator==(const HyperParams&, const HyperParams&) = default;
};

enum class SampleMode { kPosteriorSample, kPosteriorMean };

struct ForwardOptions {
  SampleMode mode = SampleMode::kPosteriorMean;
  std::uint64_t sample_seed = 0;
  double dropout_prob = 0.0;  // applied only when > 0
  std::uint64_t dropout_seed = 0;
};

struct PosteriorParams {
  Tensor z_mean;    // [batch, z_dim]
  Tensor z_logvar;  // [batch, z_dim]
  Tensor u_mean;    // [batch, n_bins, u_dim]
  Tensor u_logvar;  // [batch, n_bins, u_dim]
};

struct ModelOutput {
  Tensor rates;    // [batch, n_bins, n_neurons], spikes per bin
  Tensor factors;  // [batch, n_bins, factor_dim]
  PosteriorParams posterior;
  Tensor z;        // sampled (or mean) code, [batch, z_dim]
  Tensor u;        // sampled (or mean) inputs, [batch, n_bins, u_dim]
};

struct LossBreakdown {
  double recon = 0;
  double kl_ic = 0;
  double kl_co = 0;
  double l2 = 0;
  double total = 0;
  std::size_t n_included = 0;
};

// Handles into a recorded forward pass. Sequence-valued nodes are
// time-major: row t * batch + b.
struct ForwardGraph {
  std::vector<NodeId> params;
  NodeId log_rates;  // [n_bins * batch, n_neurons]
  NodeId factors;    // [n_bins * batch, factor_dim]
  NodeId z_mean, z_logvar, z;
  std::vector<NodeId> u_mean, u_logvar, u;  // per step, [batch, u_dim]
  std::size_t batch = 0;
};

struct LossGraph {
  NodeId recon, kl_ic, kl_co, l2, total;
  std::size_t n_included = 0;
};

// Closed-form KL(N(mean, exp(logvar)) || N(0, prior_var I)) summed over dims.
double KlGaussian(std::span<const double> mean, std::span<const double> logvar, double prior_var);

// Sequential VAE: bidirectional GRU encoders -> z and per-step encodings,
// controller GRU -> inputs u(t), generator GRU -> factors -> exp-link
// Poisson rates.
class LfadsModel {
 public:
  LfadsModel() = default;
  LfadsModel(const Architecture& arch, std::uint64_t init_seed);

  const Architecture& arch() const { return arch_; }
  std::vector<Tensor>& params() { return params_; }
  const std::vector<Tensor>& params() const { return params_; }
  static const std::vector<std::string>& ParamNames();
  std::size_t NumParameters() const;

  // x is the (masked, rescaled) input [batch, n_bins, n_neurons].
  ForwardGraph BuildForward(Tape& tape, const Tensor& x, const ForwardOptions& opts) const;

  LossGraph BuildLoss(Tape& tape, const ForwardGraph& fwd, const SpikeTensor& counts,
                      const MaskTensor& include, const HyperParams& hps, double kl_ramp) const;

  ModelOutput RunForward(const Tensor& x, const ForwardOptions& opts) const;

  static constexpr double kLogvarMin = -16.0;
  static constexpr double kLogvarMax = 16.0;

 private:
  Architecture arch_;
  std::vector<Tensor> params_;
};

// Loss from an already computed output; mirrors BuildLoss without a tape.
LossBreakdown TotalLoss(const LfadsModel& model, const ModelOutput& out, const SpikeTensor& counts,
                        const MaskTensor& include, const HyperParams& hps, double kl_ramp);

struct LossAndGrad {
  LossBreakdown loss;
  std::vector<Tensor> grads;  // aligned with model.params()
};

LossAndGrad ComputeLossAndGrad(const LfadsModel& model, const Tensor& x, const SpikeTensor& counts,
                               const MaskTensor& include, const HyperParams& hps, double kl_ramp,
                               const ForwardOptions& opts);

// Time-major helpers: [batch, bins, n] <-> [bins * batch, n].
Tensor ToTimeMajor(const Tensor& x);
Tensor FromTimeMajor(const Tensor& x, std::size_t batch);

}  // namespace latentdyn
