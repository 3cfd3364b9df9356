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
#include <span>
#include <utility>
#include <vector>

#include "latentdyn/tensor.hpp"

namespace latentdyn {

// Input-driven chaotic rate network
//   tau * dy/dt = -y + gamma * W tanh(y) + B q(t)
// integrated with explicit Euler, read out as Poisson spiking.
struct SynthRnnConfig {
  std::size_t n_units = 50;
  double gamma = 2.5;
  double tau = 0.025;          // seconds
  std::size_t n_inputs = 2;
  std::size_t n_trials = 400;
  std::size_t n_conditions = 40;
  double trial_len = 1.0;      // seconds
  double bin_width = 0.01;     // seconds
  double dt = 0.001;           // Euler step, seconds
  double rate_lo = 0.0;        // spikes/s
  double rate_hi = 30.0;       // spikes/s
  double behavior_noise = 0.1;
  std::uint64_t seed = 0;

  static SynthRnnConfig Full();    // 4000 trials, 400 conditions
  static SynthRnnConfig Desk();   // 400 trials, 40 conditions

  std::size_t n_bins() const;
  std::size_t steps_per_bin() const;
  void Validate() const;
};

struct RnnSystem {
  Tensor w;  // [N, N], entries ~ N(0, 1/N)
  Tensor b;  // [N, n_inputs], entries ~ N(0, 1)
  double gamma = 0;
  double tau = 0;
};

RnnSystem MakeRnnSystem(const SynthRnnConfig& cfg);

// Euler-integrates from y0 with q held piecewise constant: row k of q
// ([n_steps, n_inputs]) drives the interval [k*dt, (k+1)*dt), which is
// split into `substeps` equal Euler steps. Returns the states after every
// dt interval, [n_steps + 1, N] including y0.
Tensor IntegrateRnn(const RnnSystem& sys, std::span<const double> y0, const Tensor& q,
                    double dt, std::size_t substeps = 1);

struct GroundTruthDataset {
  SpikeTensor spikes;                        // [trial, bin, neuron]
  Tensor true_rates;                         // [trial, bin, neuron], spikes/s
  std::vector<std::int64_t> condition_ids;   // per trial
  Tensor behavior;                           // [trial, bin, 2], arbitrary units
  double bin_width = 0.01;

  std::size_t n_trials() const { return spikes.empty() ? 0 : spikes.dim(0); }
  std::size_t n_bins() const { return spikes.dim(1); }
  std::size_t n_neurons() const { return spikes.dim(2); }
  bool has_rates() const { return !true_rates.empty(); }
  bool has_behavior() const { return !behavior.empty(); }
};

GroundTruthDataset SimulateChaoticRnn(const SynthRnnConfig& cfg);

// Independent Poisson draws with mean rate * bin_width.
SpikeTensor SamplePoisson(const Tensor& rates, double bin_width, std::uint64_t seed);

struct LinearDemoSplit {
  Tensor factors;  // [n, D]
  Tensor y_true;   // [n, M]
  Tensor y;        // [n, M]
};

struct LinearDemoDataset {
  Tensor readout;  // W, [M, D]
  LinearDemoSplit train;
  LinearDemoSplit valid;
};

LinearDemoDataset GenLinearDemo(std::size_t d, std::size_t m, std::size_t n_train,
                                std::size_t n_val, std::uint64_t seed);

GroundTruthDataset SelectTrials(const GroundTruthDataset& data,
                                std::span<const std::size_t> trials);

struct TrialSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> valid;
};

TrialSplit SplitTrialIndices(std::size_t n_trials, double train_frac, std::uint64_t seed);

std::pair<GroundTruthDataset, GroundTruthDataset> SplitTrials(const GroundTruthDataset& data,
                                                              double train_frac,
                                                              std::uint64_t seed);

std::vector<GroundTruthDataset> SubsampleTrials(const GroundTruthDataset& data, double fraction,
                                                std::size_t n_draws, std::uint64_t seed);

}  // namespace latentdyn
