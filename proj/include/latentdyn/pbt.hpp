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
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "latentdyn/rng.hpp"
#include "latentdyn/trainer.hpp"

namespace latentdyn {

enum class HpScale { kLog, kLinear };

struct HpSpec {
  std::string name;  // a HyperParams field name
  double lo = 0;
  double hi = 0;
  HpScale scale = HpScale::kLog;
  std::optional<double> init;  // drawn uniformly on `scale` when absent
};

struct PbtConfig {
  std::size_t population_size = 16;
  std::size_t steps_per_generation = 100;
  std::size_t n_generations = 10;
  double exploit_frac = 0.25;
  double perturb_low = 0.8;
  double perturb_high = 1.25;
  double linear_step_frac = 0.1;  // of the range, for linear-scale HPs
  double resample_prob = 0.1;
  std::uint64_t seed = 0;
  std::size_t max_workers = 1;
  std::filesystem::path checkpoint_dir;  // gen<g>/member<m>/ written when set

  void Validate() const;
};

struct HpSpace {
  std::vector<HpSpec> specs;

  static HpSpace Default();  // the seven searched HPs with their bounds and inits
  void Validate() const;
  HyperParams Draw(Rng& rng, const HyperParams& base) const;
  // Returns a description of what changed, one token per HP.
  HyperParams Explore(const HyperParams& h, Rng& rng, const PbtConfig& cfg, std::string* record = nullptr) const;
  bool Contains(const HyperParams& h) const;
};

double GetHp(const HyperParams& h, const std::string& name);
void SetHp(HyperParams& h, const std::string& name, double value);

struct LineageEntry {
  std::size_t generation = 0;
  std::size_t parent_id = 0;  // itself when not replaced
  std::string perturbation;
};

struct PopulationMember {
  std::size_t member_id = 0;
  std::uint64_t model_seed = 0;
  HyperParams hps;
  Checkpoint ckpt;
  double fitness = 0;  // standard validation loss, lower is better
  bool failed = false;
  std::optional<double> rate_r2;
  std::size_t generation = 0;
  std::vector<LineageEntry> lineage;
};

std::vector<PopulationMember> InitPopulation(const HpSpace& space, const PbtConfig& cfg, const TrainConfig& base);

struct ExploitDecision {
  std::size_t loser = 0;
  std::size_t winner = 0;
};

// Truncation selection. Bottom floor(frac * n) members and every failed
// member are replaced by uniform draws from the top ceil(frac * n) members.
std::vector<ExploitDecision> SelectExploit(const std::vector<double>& fitness, const std::vector<bool>& failed,
                                           double exploit_frac, Rng& rng);

// Trains every member steps_per_generation steps; appends history rows and
// writes checkpoints when configured.
void TrainGeneration(std::vector<PopulationMember>& pop, const PbtConfig& cfg, const TrainConfig& base,
                     const TrainInputs& in, std::size_t generation, CsvTable& history);

void ExploitAndExplore(std::vector<PopulationMember>& pop, const HpSpace& space, const PbtConfig& cfg,
                       std::size_t generation);

// TrainGeneration followed by ExploitAndExplore.
void StepGeneration(std::vector<PopulationMember>& pop, const HpSpace& space, const PbtConfig& cfg,
                    const TrainConfig& base, const TrainInputs& in, std::size_t generation, CsvTable& history);

struct PbtResult {
  PopulationMember best;  // best fitness seen at any evaluation
  std::vector<PopulationMember> population;
  CsvTable history;
};

CsvTable PbtHistoryHeader();

PbtResult RunPbt(const PbtConfig& cfg, const HpSpace& space, const TrainConfig& base, const TrainInputs& in);

}  // namespace latentdyn
