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

#include "latentdyn/datagen.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "latentdyn/rng.hpp"

namespace latentdyn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMat> AsMat(const Tensor& t) {
  return Eigen::Map<const RowMat>(t.data().data(), static_cast<Eigen::Index>(t.dim(0)),
                                  static_cast<Eigen::Index>(t.dim(1)));
}

void FillNormal(Tensor& t, Rng& rng, double sd) {
  std::normal_distribution<double> n(0.0, sd);
  for (double& x : t.data()) x = n(rng);
}

std::size_t CheckedRatio(double num, double den, const char* what) {
  const double r = num / den;
  const double rounded = std::round(r);
  Require(rounded >= 1 && std::abs(r - rounded) < 1e-9, ErrorCategory::kInvalidArgument,
          std::string(what) + " must be a positive integer multiple");
  return static_cast<std::size_t>(rounded);
}

}  // namespace

SynthRnnConfig SynthRnnConfig::Full() {
  SynthRnnConfig c;
  c.n_trials = 4000;
  c.n_conditions = 400;
  return c;
}

SynthRnnConfig SynthRnnConfig::Desk() { return SynthRnnConfig{}; }

std::size_t SynthRnnConfig::n_bins() const {
  return CheckedRatio(trial_len, bin_width, "trial_len / bin_width");
}

std::size_t SynthRnnConfig::steps_per_bin() const {
  return CheckedRatio(bin_width, dt, "bin_width / dt");
}

void SynthRnnConfig::Validate() const {
  Require(n_units >= 1, ErrorCategory::kInvalidArgument, "n_units must be >= 1");
  Require(tau > 0, ErrorCategory::kInvalidArgument, "tau must be positive");
  Require(dt > 0, ErrorCategory::kInvalidArgument, "dt must be positive");
  Require(rate_lo < rate_hi, ErrorCategory::kInvalidArgument, "rate_lo must be < rate_hi");
  Require(rate_lo >= 0, ErrorCategory::kInvalidArgument, "rate_lo must be >= 0");
  Require(n_trials >= 1 && n_conditions >= 1 && n_conditions <= n_trials,
          ErrorCategory::kInvalidArgument, "need 1 <= n_conditions <= n_trials");
  Require(behavior_noise >= 0, ErrorCategory::kInvalidArgument, "behavior_noise must be >= 0");
  n_bins();
  steps_per_bin();
}

RnnSystem MakeRnnSystem(const SynthRnnConfig& cfg) {
  RnnSystem sys;
  sys.gamma = cfg.gamma;
  sys.tau = cfg.tau;
  sys.w = Tensor({cfg.n_units, cfg.n_units});
  sys.b = Tensor({cfg.n_units, cfg.n_inputs});
  Rng rng = MakeRng(cfg.seed, "datagen/weights");
  FillNormal(sys.w, rng, 1.0 / std::sqrt(static_cast<double>(cfg.n_units)));
  FillNormal(sys.b, rng, 1.0);
  return sys;
}

Tensor IntegrateRnn(const RnnSystem& sys, std::span<const double> y0, const Tensor& q,
                    double dt, std::size_t substeps) {
  const std::size_t n = sys.w.dim(0);
  Require(y0.size() == n, ErrorCategory::kShapeMismatch, "y0 length must equal n_units");
  Require(q.rank() == 2 && q.dim(1) == sys.b.dim(1), ErrorCategory::kShapeMismatch,
          "q must be [steps, n_inputs]");
  Require(substeps >= 1, ErrorCategory::kInvalidArgument, "substeps must be >= 1");
  const std::size_t steps = q.dim(0);
  const auto w = AsMat(sys.w);
  const auto b = AsMat(sys.b);
  const double h = dt / static_cast<double>(substeps) / sys.tau;

  Tensor traj({steps + 1, n});
  Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(y0.data(), static_cast<Eigen::Index>(n));
  Eigen::VectorXd drive(static_cast<Eigen::Index>(n));
  std::copy(y0.begin(), y0.end(), traj.data().begin());
  for (std::size_t k = 0; k < steps; ++k) {
    const Eigen::Map<const Eigen::VectorXd> qk(&q.data()[k * q.dim(1)],
                                               static_cast<Eigen::Index>(q.dim(1)));
    drive.noalias() = b * qk;
    for (std::size_t s = 0; s < substeps; ++s) {
      const Eigen::VectorXd act = y.array().tanh();
      y += h * (-y + sys.gamma * (w * act) + drive);
    }
    if (!y.allFinite()) throw DivergenceError("rnn integration produced non-finite state");
    std::copy(y.data(), y.data() + n, traj.data().begin() + (k + 1) * n);
  }
  return traj;
}

GroundTruthDataset SimulateChaoticRnn(const SynthRnnConfig& cfg) {
  cfg.Validate();
  const std::size_t n = cfg.n_units;
  const std::size_t bins = cfg.n_bins();
  const std::size_t per_bin = cfg.steps_per_bin();
  const std::size_t steps = bins * per_bin;
  const RnnSystem sys = MakeRnnSystem(cfg);

  Tensor y0s({cfg.n_conditions, n});
  {
    Rng rng = MakeRng(cfg.seed, "datagen/initial_states");
    FillNormal(y0s, rng, 1.0);
  }
  Tensor readout({2, n});
  {
    Rng rng = MakeRng(cfg.seed, "datagen/behavior_readout");
    FillNormal(readout, rng, 1.0 / std::sqrt(static_cast<double>(n)));
  }

  GroundTruthDataset out;
  out.bin_width = cfg.bin_width;
  Tensor activity({cfg.n_trials, bins, n});  // bin-averaged tanh(y)
  out.condition_ids.resize(cfg.n_trials);
  for (std::size_t trial = 0; trial < cfg.n_trials; ++trial) {
    const std::size_t cond = trial % cfg.n_conditions;
    out.condition_ids[trial] = static_cast<std::int64_t>(cond);
    Tensor q({steps, cfg.n_inputs});
    Rng rng = MakeRng(cfg.seed, "datagen/inputs", trial);
    FillNormal(q, rng, 1.0);
    const Tensor traj = IntegrateRnn(
        sys, std::span<const double>(&y0s.data()[cond * n], n), q, cfg.dt);
    for (std::size_t bin = 0; bin < bins; ++bin) {
      for (std::size_t k = 1; k <= per_bin; ++k) {
        const double* row = &traj.data()[(bin * per_bin + k) * n];
        for (std::size_t j = 0; j < n; ++j) activity.at(trial, bin, j) += std::tanh(row[j]);
      }
      for (std::size_t j = 0; j < n; ++j) activity.at(trial, bin, j) /= static_cast<double>(per_bin);
    }
  }

  // One affine map for the whole dataset onto [rate_lo, rate_hi].
  const auto [lo_it, hi_it] = std::minmax_element(activity.data().begin(), activity.data().end());
  const double lo = *lo_it, hi = *hi_it;
  Require(hi > lo, ErrorCategory::kNonFinite, "simulated activity is constant");
  out.true_rates = Tensor(activity.shape());
  for (std::size_t i = 0; i < activity.size(); ++i) {
    out.true_rates[i] = cfg.rate_lo + (cfg.rate_hi - cfg.rate_lo) * (activity[i] - lo) / (hi - lo);
  }
  out.true_rates[static_cast<std::size_t>(lo_it - activity.data().begin())] = cfg.rate_lo;
  out.true_rates[static_cast<std::size_t>(hi_it - activity.data().begin())] = cfg.rate_hi;

  out.spikes = SamplePoisson(out.true_rates, cfg.bin_width, StreamSeed(cfg.seed, "datagen/spikes"));

  // Synthetic behavior: fixed 2-D linear readout of the latent activity plus
  // small Gaussian noise; a known target for decoder checks.
  out.behavior = Tensor({cfg.n_trials, bins, 2});
  Rng noise_rng = MakeRng(cfg.seed, "datagen/behavior_noise");
  std::normal_distribution<double> noise(0.0, cfg.behavior_noise);
  for (std::size_t trial = 0; trial < cfg.n_trials; ++trial) {
    for (std::size_t bin = 0; bin < bins; ++bin) {
      for (std::size_t d = 0; d < 2; ++d) {
        double v = 0;
        for (std::size_t j = 0; j < n; ++j) v += readout.at(d, j) * activity.at(trial, bin, j);
        out.behavior.at(trial, bin, d) = v + noise(noise_rng);
      }
    }
  }
  return out;
}

SpikeTensor SamplePoisson(const Tensor& rates, double bin_width, std::uint64_t seed) {
  Require(bin_width > 0, ErrorCategory::kInvalidArgument, "bin_width must be positive");
  SpikeTensor out(rates.shape());
  Rng rng(seed);
  for (std::size_t i = 0; i < rates.size(); ++i) {
    Require(rates[i] >= 0 && std::isfinite(rates[i]), ErrorCategory::kInvalidArgument,
            "rates must be finite and nonnegative");
    const double mean = rates[i] * bin_width;
    if (mean == 0) continue;
    std::poisson_distribution<std::int64_t> pois(mean);
    out[i] = pois(rng);
  }
  return out;
}

LinearDemoDataset GenLinearDemo(std::size_t d, std::size_t m, std::size_t n_train,
                                std::size_t n_val, std::uint64_t seed) {
  Require(d >= 1 && d < m, ErrorCategory::kInvalidArgument, "need 1 <= D < M");
  Require(n_train >= 1 && n_val >= 1, ErrorCategory::kInvalidArgument,
          "need at least one training and one validation sample");
  LinearDemoDataset out;
  out.readout = Tensor({m, d});
  Rng wrng = MakeRng(seed, "linear_demo/readout");
  FillNormal(out.readout, wrng, 1.0);
  auto make_split = [&](std::size_t n, std::string_view purpose) {
    LinearDemoSplit s;
    s.factors = Tensor({n, d});
    Rng rng = MakeRng(seed, purpose);
    FillNormal(s.factors, rng, 1.0);
    s.y_true = Tensor({n, m});
    Eigen::Map<RowMat>(s.y_true.data().data(), static_cast<Eigen::Index>(n),
                       static_cast<Eigen::Index>(m))
        .noalias() = AsMat(s.factors) * AsMat(out.readout).transpose();
    s.y = s.y_true;
    std::normal_distribution<double> noise(0.0, 1.0);
    for (double& v : s.y.data()) v += noise(rng);
    return s;
  };
  out.train = make_split(n_train, "linear_demo/train");
  out.valid = make_split(n_val, "linear_demo/valid");
  return out;
}

GroundTruthDataset SelectTrials(const GroundTruthDataset& data,
                                std::span<const std::size_t> trials) {
  GroundTruthDataset out;
  out.bin_width = data.bin_width;
  out.spikes = GatherTrials(data.spikes, trials);
  if (data.has_rates()) out.true_rates = GatherTrials(data.true_rates, trials);
  if (data.has_behavior()) out.behavior = GatherTrials(data.behavior, trials);
  if (!data.condition_ids.empty()) {
    for (std::size_t t : trials) out.condition_ids.push_back(data.condition_ids.at(t));
  }
  return out;
}

TrialSplit SplitTrialIndices(std::size_t n_trials, double train_frac, std::uint64_t seed) {
  Require(train_frac > 0 && train_frac < 1, ErrorCategory::kInvalidArgument,
          "train_frac must be in (0, 1)");
  const auto n_train = static_cast<std::size_t>(std::round(train_frac * static_cast<double>(n_trials)));
  Require(n_train >= 1 && n_train < n_trials, ErrorCategory::kInvalidArgument,
          "split would leave an empty partition");
  std::vector<std::size_t> order(n_trials);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = MakeRng(seed, "split_trials");
  std::shuffle(order.begin(), order.end(), rng);
  TrialSplit split;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.valid.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.valid.begin(), split.valid.end());
  return split;
}

std::pair<GroundTruthDataset, GroundTruthDataset> SplitTrials(const GroundTruthDataset& data,
                                                              double train_frac,
                                                              std::uint64_t seed) {
  const TrialSplit split = SplitTrialIndices(data.n_trials(), train_frac, seed);
  return {SelectTrials(data, split.train), SelectTrials(data, split.valid)};
}

std::vector<GroundTruthDataset> SubsampleTrials(const GroundTruthDataset& data, double fraction,
                                                std::size_t n_draws, std::uint64_t seed) {
  Require(fraction > 0 && fraction <= 1, ErrorCategory::kInvalidArgument,
          "fraction must be in (0, 1]");
  Require(n_draws >= 1, ErrorCategory::kInvalidArgument, "n_draws must be >= 1");
  const auto size = static_cast<std::size_t>(std::round(fraction * static_cast<double>(data.n_trials())));
  Require(size >= 2, ErrorCategory::kInvalidArgument, "subsample would have fewer than 2 trials");
  if (size == data.n_trials()) return {data};
  std::vector<GroundTruthDataset> out;
  for (std::size_t draw = 0; draw < n_draws; ++draw) {
    std::vector<std::size_t> order(data.n_trials());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = MakeRng(seed, "subsample_trials", draw);
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(size);
    std::sort(order.begin(), order.end());
    out.push_back(SelectTrials(data, order));
  }
  return out;
}

}  // namespace latentdyn
