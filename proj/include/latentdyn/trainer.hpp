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
#include <string>
#include <vector>

#include "latentdyn/container.hpp"
#include "latentdyn/csv.hpp"
#include "latentdyn/datagen.hpp"
#include "latentdyn/lfads.hpp"

namespace latentdyn {

struct TrainConfig {
  HyperParams hps;
  Architecture arch;
  std::size_t batch_size = 16;
  std::size_t max_steps = 1000;
  std::size_t kl_ramp_steps = 500;
  std::size_t eval_every = 100;
  bool cd_enabled = false;
  bool cd_rescale = true;
  bool sv_enabled = false;
  double sv_frac = 0.2;
  double grad_clip = 200.0;
  bool r2_per_neuron = false;  // flattened otherwise
  std::size_t decode_folds = 5;  // 0 disables decode_r2
  std::uint64_t seed = 0;

  void Validate() const;
};

struct MetricRecord {
  std::size_t step = 0;
  double train_loss = 0;  // mean training recon since the previous record
  double valid_loss = 0;
  std::optional<double> sv_loss;
  std::optional<double> rate_r2;
  std::optional<double> decode_r2;
};

// Whole-trial train/valid split plus the speckled holdout over the training
// trials, all fixed for the lifetime of a run.
struct TrainInputs {
  GroundTruthDataset train;
  GroundTruthDataset valid;
  MaskTensor sv_held_out;  // shape of train.spikes; empty when SV is off
  double sv_frac = 0;
};

TrainInputs PrepareInputs(const GroundTruthDataset& data, double valid_frac, double sv_frac,
                          std::uint64_t data_seed);

struct AdamState {
  std::vector<Tensor> m, v;
};

struct Checkpoint {
  LfadsModel model;
  AdamState adam;
  HyperParams hps;
  std::size_t step = 0;
  std::uint64_t seed = 0;

  static Checkpoint Init(const TrainConfig& cfg);
  TensorContainer ToContainer() const;
  static Checkpoint FromContainer(const TensorContainer& c);
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<MetricRecord> log;
  bool failed = false;
  std::string failure;
};

// Runs n_steps more steps from ckpt with cfg.hps (ckpt.hps is replaced).
// Records every cfg.eval_every steps and always after the last step.
TrainResult ContinueTraining(Checkpoint ckpt, const TrainConfig& cfg, const TrainInputs& in,
                             std::size_t n_steps);

// Fresh model trained for cfg.max_steps.
TrainResult Train(const TrainConfig& cfg, const TrainInputs& in);

MetricRecord Evaluate(const Checkpoint& ckpt, const TrainConfig& cfg, const TrainInputs& in);

// Inferred rates in posterior-mean mode, spikes/s.
Tensor InferRates(const LfadsModel& model, const SpikeTensor& spikes, double bin_width);

CsvTable MetricsTable(const std::vector<MetricRecord>& log);

struct HpRange {
  double lo = 0;
  double hi = 0;
  bool log_scale = false;
};

struct SweepRanges {
  HpRange l2_gen{5, 5e4, true};
  HpRange l2_con{5, 5e4, true};
  HpRange kl_ic{0.05, 5, true};
  HpRange kl_co{0.05, 5, true};
  HpRange dropout{0, 0.7, false};
};

HyperParams DrawHyperParams(const SweepRanges& ranges, const HyperParams& base, std::uint64_t seed);

struct SweepRow {
  std::size_t model = 0;
  std::uint64_t seed = 0;
  HyperParams hps;
  MetricRecord final;
  bool failed = false;
};

struct SweepOptions {
  std::size_t n_models = 20;
  SweepRanges ranges;
  std::uint64_t seed = 0;
  bool shared_seed = false;  // every model gets `seed` itself
  std::size_t max_workers = 1;
};

std::vector<SweepRow> RandomSweep(const TrainConfig& base, const TrainInputs& in, const SweepOptions& opts);
CsvTable SweepTable(const std::vector<SweepRow>& rows);

}  // namespace latentdyn
