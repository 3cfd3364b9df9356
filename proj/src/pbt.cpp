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

#include "latentdyn/pbt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "latentdyn/error.hpp"
#include "latentdyn/parallel.hpp"

namespace latentdyn {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double DrawOne(const HpSpec& s, Rng& rng) {
  if (s.init) return *s.init;
  const double u = Uniform01(rng);
  if (s.scale == HpScale::kLog) return std::exp(std::log(s.lo) + u * (std::log(s.hi) - std::log(s.lo)));
  return s.lo + u * (s.hi - s.lo);
}

std::string Describe(const std::string& name, const char* op, double v) {
  return name + op + FormatNumber(v);
}

std::size_t ParentAt(const PopulationMember& m) {
  return m.lineage.empty() ? m.member_id : m.lineage.back().parent_id;
}

void AppendRows(const std::vector<PopulationMember>& pop, std::size_t generation, CsvTable& history) {
  for (const PopulationMember& m : pop) {
    std::vector<std::string> row{std::to_string(generation), std::to_string(m.member_id),
                                 std::to_string(ParentAt(m))};
    for (const char* name : {"l2_gen_scale", "l2_con_scale", "kl_ic_scale", "kl_co_scale", "dropout_prob",
                             "keep_ratio", "learning_rate"}) {
      row.push_back(FormatNumber(GetHp(m.hps, name)));
    }
    row.push_back(FormatNumber(m.fitness));
    row.push_back(FormatNumber(m.rate_r2));
    row.push_back(m.failed ? "1" : "0");
    history.rows.push_back(std::move(row));
  }
}

TrainConfig MemberConfig(const TrainConfig& base, const PopulationMember& m, std::size_t steps) {
  TrainConfig cfg = base;
  cfg.hps = m.hps;
  cfg.seed = m.model_seed;
  cfg.eval_every = std::max<std::size_t>(1, steps);
  return cfg;
}

void SaveMembers(const std::vector<PopulationMember>& pop, const PbtConfig& cfg, std::size_t generation) {
  if (cfg.checkpoint_dir.empty()) return;
  for (const PopulationMember& m : pop) {
    const auto dir = cfg.checkpoint_dir / ("gen" + std::to_string(generation)) / ("member" + std::to_string(m.member_id));
    TensorContainer c = m.ckpt.ToContainer();
    c.meta()["fitness"] = m.failed ? nlohmann::json(nullptr) : nlohmann::json(m.fitness);
    c.meta()["member_id"] = m.member_id;
    c.meta()["generation"] = generation;
    c.Save(dir / "checkpoint.ldt");
  }
}

}  // namespace

void PbtConfig::Validate() const {
  Require(population_size >= 4, ErrorCategory::kInvalidArgument, "population_size must be >= 4");
  Require(exploit_frac > 0 && exploit_frac <= 0.5, ErrorCategory::kInvalidArgument, "exploit_frac must be in (0, 0.5]");
  Require(perturb_low > 0 && perturb_high > 0, ErrorCategory::kInvalidArgument, "perturb factors must be > 0");
  Require(resample_prob >= 0 && resample_prob <= 1, ErrorCategory::kInvalidArgument, "resample_prob must be in [0, 1]");
  Require(steps_per_generation >= 1, ErrorCategory::kInvalidArgument, "steps_per_generation must be >= 1");
  Require(linear_step_frac >= 0, ErrorCategory::kInvalidArgument, "linear_step_frac must be >= 0");
}

double GetHp(const HyperParams& h, const std::string& name) {
  if (name == "l2_gen_scale") return h.l2_gen_scale;
  if (name == "l2_con_scale") return h.l2_con_scale;
  if (name == "kl_ic_scale") return h.kl_ic_scale;
  if (name == "kl_co_scale") return h.kl_co_scale;
  if (name == "dropout_prob") return h.dropout_prob;
  if (name == "keep_ratio") return h.keep_ratio;
  if (name == "learning_rate") return h.learning_rate;
  Fail(ErrorCategory::kInvalidArgument, "unknown hyperparameter '" + name + "'");
}

void SetHp(HyperParams& h, const std::string& name, double value) {
  if (name == "l2_gen_scale") h.l2_gen_scale = value;
  else if (name == "l2_con_scale") h.l2_con_scale = value;
  else if (name == "kl_ic_scale") h.kl_ic_scale = value;
  else if (name == "kl_co_scale") h.kl_co_scale = value;
  else if (name == "dropout_prob") h.dropout_prob = value;
  else if (name == "keep_ratio") h.keep_ratio = value;
  else if (name == "learning_rate") h.learning_rate = value;
  else Fail(ErrorCategory::kInvalidArgument, "unknown hyperparameter '" + name + "'");
}

HpSpace HpSpace::Default() {
  HpSpace s;
  s.specs = {
      {"l2_gen_scale", 5, 5e4, HpScale::kLog, std::nullopt},
      {"l2_con_scale", 5, 5e4, HpScale::kLog, std::nullopt},
      {"kl_ic_scale", 0.05, 5, HpScale::kLog, std::nullopt},
      {"kl_co_scale", 0.05, 5, HpScale::kLog, std::nullopt},
      {"dropout_prob", 0, 0.7, HpScale::kLinear, std::nullopt},
      {"keep_ratio", 0.3, 0.99, HpScale::kLinear, 0.5},
      {"learning_rate", 1e-5, 0.02, HpScale::kLog, 0.01},
  };
  return s;
}

void HpSpace::Validate() const {
  for (const HpSpec& s : specs) {
    GetHp(HyperParams{}, s.name);
    Require(s.lo < s.hi, ErrorCategory::kInvalidArgument, "hp space '" + s.name + "' needs lower < upper");
    if (s.scale == HpScale::kLog) {
      Require(s.lo > 0, ErrorCategory::kInvalidArgument, "log-scale hp '" + s.name + "' needs lower > 0");
    }
    if (s.init) {
      Require(*s.init >= s.lo && *s.init <= s.hi, ErrorCategory::kInvalidArgument,
              "initial value of '" + s.name + "' is outside its bounds");
    }
  }
}

HyperParams HpSpace::Draw(Rng& rng, const HyperParams& base) const {
  HyperParams h = base;
  for (const HpSpec& s : specs) SetHp(h, s.name, DrawOne(s, rng));
  return h;
}

HyperParams HpSpace::Explore(const HyperParams& in, Rng& rng, const PbtConfig& cfg, std::string* record) const {
  HyperParams h = in;
  std::string rec;
  for (const HpSpec& s : specs) {
    const double v = GetHp(h, s.name);
    double out = 0;
    std::string what;
    if (Uniform01(rng) < cfg.resample_prob) {
      out = DrawOne(s, rng);
      what = Describe(s.name, "=", out);
    } else {
      const bool up = Uniform01(rng) < 0.5;
      if (s.scale == HpScale::kLog) {
        const double f = up ? cfg.perturb_high : cfg.perturb_low;
        out = v * f;
        what = Describe(s.name, "*", f);
      } else {
        const double step = (up ? 1.0 : -1.0) * cfg.linear_step_frac * (s.hi - s.lo);
        out = v + step;
        what = Describe(s.name, step >= 0 ? "+" : "", step);
      }
    }
    out = std::clamp(out, s.lo, s.hi);
    SetHp(h, s.name, out);
    if (!rec.empty()) rec += ';';
    rec += what;
  }
  if (record) *record = rec;
  return h;
}

bool HpSpace::Contains(const HyperParams& h) const {
  return std::all_of(specs.begin(), specs.end(), [&](const HpSpec& s) {
    const double v = GetHp(h, s.name);
    return v >= s.lo && v <= s.hi;
  });
}

std::vector<PopulationMember> InitPopulation(const HpSpace& space, const PbtConfig& cfg, const TrainConfig& base) {
  cfg.Validate();
  space.Validate();
  std::vector<PopulationMember> pop(cfg.population_size);
  for (std::size_t i = 0; i < pop.size(); ++i) {
    PopulationMember& m = pop[i];
    m.member_id = i;
    m.model_seed = StreamSeed(cfg.seed, "pbt/member", i);
    Rng rng = MakeRng(cfg.seed, "pbt/init_hps", i);
    m.hps = space.Draw(rng, base.hps);
    m.ckpt = Checkpoint::Init(MemberConfig(base, m, cfg.steps_per_generation));
  }
  return pop;
}

std::vector<ExploitDecision> SelectExploit(const std::vector<double>& fitness, const std::vector<bool>& failed,
                                           double exploit_frac, Rng& rng) {
  const std::size_t n = fitness.size();
  Require(failed.size() == n, ErrorCategory::kShapeMismatch, "fitness/failed length mismatch");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto key = [&](std::size_t i) { return failed[i] || !std::isfinite(fitness[i]) ? kInf : fitness[i]; };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
  const std::size_t n_ok = static_cast<std::size_t>(std::count_if(order.begin(), order.end(), [&](std::size_t i) { return key(i) < kInf; }));
  Require(n_ok > 0, ErrorCategory::kDivergence, "all population members failed");
  const auto cut = static_cast<std::size_t>(std::floor(exploit_frac * static_cast<double>(n)));
  const std::size_t n_top = std::min(n_ok, std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(exploit_frac * static_cast<double>(n)))));
  const std::size_t first_loser = std::min(n - cut, n_ok);
  std::vector<ExploitDecision> out;
  std::uniform_int_distribution<std::size_t> pick(0, n_top - 1);
  for (std::size_t r = std::max(first_loser, n_top); r < n; ++r) out.push_back({order[r], order[pick(rng)]});
  return out;
}

CsvTable PbtHistoryHeader() {
  CsvTable t;
  t.header = {"generation",  "member_id",    "parent_id",  "l2_gen_scale", "l2_con_scale",
              "kl_ic_scale", "kl_co_scale",  "dropout_prob", "keep_ratio",  "learning_rate",
              "fitness",     "rate_r2",      "failed"};
  return t;
}

void TrainGeneration(std::vector<PopulationMember>& pop, const PbtConfig& cfg, const TrainConfig& base,
                     const TrainInputs& in, std::size_t generation, CsvTable& history) {
  ParallelFor(pop.size(), cfg.max_workers, [&](std::size_t i) {
    PopulationMember& m = pop[i];
    TrainResult r = ContinueTraining(std::move(m.ckpt), MemberConfig(base, m, cfg.steps_per_generation), in,
                                     cfg.steps_per_generation);
    m.ckpt = std::move(r.checkpoint);
    m.failed = r.failed;
    m.fitness = r.failed || r.log.empty() ? kInf : r.log.back().valid_loss;
    m.rate_r2 = r.failed || r.log.empty() ? std::nullopt : r.log.back().rate_r2;
  });
  AppendRows(pop, generation, history);
  SaveMembers(pop, cfg, generation);
}

void ExploitAndExplore(std::vector<PopulationMember>& pop, const HpSpace& space, const PbtConfig& cfg,
                       std::size_t generation) {
  std::vector<double> fitness;
  std::vector<bool> failed;
  for (const PopulationMember& m : pop) {
    fitness.push_back(m.fitness);
    failed.push_back(m.failed);
  }
  Rng rng = MakeRng(cfg.seed, "pbt/exploit", generation);
  const std::vector<ExploitDecision> decisions = SelectExploit(fitness, failed, cfg.exploit_frac, rng);
  std::vector<LineageEntry> entries(pop.size());
  for (std::size_t i = 0; i < pop.size(); ++i) entries[i] = {generation, pop[i].member_id, ""};
  // Winners always rank above losers, so no winner is overwritten here.
  for (const ExploitDecision& d : decisions) {
    PopulationMember& loser = pop[d.loser];
    const PopulationMember& winner = pop[d.winner];
    std::string record;
    Rng explore_rng = MakeRng(cfg.seed, "pbt/explore", generation * pop.size() + loser.member_id);
    loser.hps = space.Explore(winner.hps, explore_rng, cfg, &record);
    loser.ckpt = winner.ckpt;
    loser.ckpt.seed = loser.model_seed;
    loser.ckpt.hps = loser.hps;
    loser.fitness = winner.fitness;
    loser.failed = false;
    loser.rate_r2 = winner.rate_r2;
    entries[d.loser] = {generation, winner.member_id, record};
  }
  for (std::size_t i = 0; i < pop.size(); ++i) {
    pop[i].lineage.push_back(entries[i]);
    pop[i].generation = generation;
  }
}

void StepGeneration(std::vector<PopulationMember>& pop, const HpSpace& space, const PbtConfig& cfg,
                    const TrainConfig& base, const TrainInputs& in, std::size_t generation, CsvTable& history) {
  TrainGeneration(pop, cfg, base, in, generation, history);
  ExploitAndExplore(pop, space, cfg, generation);
}

PbtResult RunPbt(const PbtConfig& cfg, const HpSpace& space, const TrainConfig& base, const TrainInputs& in) {
  PbtResult res;
  res.history = PbtHistoryHeader();
  std::vector<PopulationMember> pop = InitPopulation(space, cfg, base);
  ParallelFor(pop.size(), cfg.max_workers, [&](std::size_t i) {
    PopulationMember& m = pop[i];
    const MetricRecord rec = Evaluate(m.ckpt, MemberConfig(base, m, cfg.steps_per_generation), in);
    m.failed = !std::isfinite(rec.valid_loss);
    m.fitness = m.failed ? kInf : rec.valid_loss;
    m.rate_r2 = rec.rate_r2;
  });
  AppendRows(pop, 0, res.history);
  SaveMembers(pop, cfg, 0);
  bool have_best = false;
  auto track_best = [&] {
    for (const PopulationMember& m : pop) {
      if (m.failed) continue;
      if (!have_best || m.fitness < res.best.fitness) {
        res.best = m;
        have_best = true;
      }
    }
  };
  track_best();
  Require(have_best, ErrorCategory::kDivergence, "all population members failed at initialization");
  for (std::size_t g = 1; g <= cfg.n_generations; ++g) {
    TrainGeneration(pop, cfg, base, in, g, res.history);
    track_best();
    ExploitAndExplore(pop, space, cfg, g);
  }
  res.population = std::move(pop);
  return res;
}

}  // namespace latentdyn
