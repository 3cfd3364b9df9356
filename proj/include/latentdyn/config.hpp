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

#include <filesystem>
#include <initializer_list>
#include <string>

#include "json.hpp"
#include "latentdyn/datagen.hpp"
#include "latentdyn/lfads.hpp"
#include "latentdyn/linear_ae.hpp"
#include "latentdyn/pbt.hpp"
#include "latentdyn/trainer.hpp"

namespace latentdyn {

using Json = nlohmann::json;

// Throws kSchema naming the first key of obj not in allowed.
void RejectUnknownKeys(const Json& obj, std::initializer_list<const char*> allowed, const std::string& where);

Json ToJson(const HyperParams& h);
Json ToJson(const Architecture& a);
// Missing keys keep the defaults of `base`.
HyperParams HyperParamsFromJson(const Json& j, const HyperParams& base = {});
Architecture ArchitectureFromJson(const Json& j, const Architecture& base = {});

struct LinearDemoConfig {
  std::size_t d = 5;
  std::size_t m = 40;
  std::size_t n_train = 1000;
  std::size_t n_val = 1000;
  std::uint64_t seed = 0;
  LinearAeOptions train;
};

struct DecodeConfig {
  std::size_t k_folds = 5;
  std::uint64_t seed = 0;
  std::string features = "rates";  // rates | true_rates | smoothed
  double smooth_sigma = 0.06;      // seconds, for "smoothed"
  std::string checkpoint;          // required for "rates"
};

// The declarative experiment document. Every section is optional; absent
// keys keep their defaults and unknown keys are rejected.
struct ExperimentConfig {
  SynthRnnConfig data = SynthRnnConfig::Desk();
  std::string dataset;  // an existing dataset container instead of `data`
  double valid_frac = 0.2;
  std::uint64_t split_seed = 1;
  double data_fraction = 1.0;
  std::size_t draws = 1;
  TrainConfig train;
  SweepOptions sweep;
  PbtConfig pbt;
  bool pbt_keep_checkpoints = false;  // every member checkpoint of every generation
  HpSpace space = HpSpace::Default();
  LinearDemoConfig linear;
  DecodeConfig decode;
  std::string output;

  void Validate() const;
};

ExperimentConfig ExperimentConfigFromJson(const Json& j);
ExperimentConfig LoadExperimentConfig(const std::filesystem::path& path);
Json ToJson(const ExperimentConfig& c);

}  // namespace latentdyn
