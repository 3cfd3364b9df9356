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

#include "latentdyn/config.hpp"

#include <algorithm>
#include <cstring>

#include "latentdyn/container.hpp"
#include "latentdyn/error.hpp"

namespace latentdyn {

void RejectUnknownKeys(const Json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  Require(obj.is_object(), ErrorCategory::kSchema, where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
    Require(known, ErrorCategory::kSchema, "unknown key '" + key + "' in " + where);
  }
}

namespace {

void Real(const Json& j, const char* key, double& out, const std::string& where) {
  if (!j.contains(key)) return;
  Require(j.at(key).is_number(), ErrorCategory::kSchema, where + "." + key + " must be a number");
  out = j.at(key).get<double>();
}

void Count(const Json& j, const char* key, std::size_t& out, const std::string& where) {
  if (!j.contains(key)) return;
  Require(j.at(key).is_number_unsigned(), ErrorCategory::kSchema,
          where + "." + key + " must be a non-negative integer");
  out = j.at(key).get<std::size_t>();
}

void Seed(const Json& j, const char* key, std::uint64_t& out, const std::string& where) {
  if (!j.contains(key)) return;
  Require(j.at(key).is_number_unsigned(), ErrorCategory::kSchema,
          where + "." + key + " must be a non-negative integer");
  out = j.at(key).get<std::uint64_t>();
}

void Flag(const Json& j, const char* key, bool& out, const std::string& where) {
  if (!j.contains(key)) return;
  Require(j.at(key).is_boolean(), ErrorCategory::kSchema, where + "." + key + " must be true or false");
  out = j.at(key).get<bool>();
}

void Text(const Json& j, const char* key, std::string& out, const std::string& where) {
  if (!j.contains(key)) return;
  Require(j.at(key).is_string(), ErrorCategory::kSchema, where + "." + key + " must be a string");
  out = j.at(key).get<std::string>();
}

SynthRnnConfig DataFromJson(const Json& j) {
  const std::string w = "data";
  RejectUnknownKeys(j, {"preset", "n_units", "gamma", "tau", "n_inputs", "n_trials", "n_conditions", "trial_len",
                        "bin_width", "dt", "rate_lo", "rate_hi", "behavior_noise", "seed"},
                    w);
  std::string preset = "desk";
  Text(j, "preset", preset, w);
  Require(preset == "desk" || preset == "full", ErrorCategory::kSchema, "data.preset must be 'desk' or 'full'");
  SynthRnnConfig c = preset == "full" ? SynthRnnConfig::Full() : SynthRnnConfig::Desk();
  Count(j, "n_units", c.n_units, w);
  Real(j, "gamma", c.gamma, w);
  Real(j, "tau", c.tau, w);
  Count(j, "n_inputs", c.n_inputs, w);
  Count(j, "n_trials", c.n_trials, w);
  Count(j, "n_conditions", c.n_conditions, w);
  Real(j, "trial_len", c.trial_len, w);
  Real(j, "bin_width", c.bin_width, w);
  Real(j, "dt", c.dt, w);
  Real(j, "rate_lo", c.rate_lo, w);
  Real(j, "rate_hi", c.rate_hi, w);
  Real(j, "behavior_noise", c.behavior_noise, w);
  Seed(j, "seed", c.seed, w);
  return c;
}

Json ToJson(const SynthRnnConfig& c) {
  return {{"n_units", c.n_units},     {"gamma", c.gamma},         {"tau", c.tau},
          {"n_inputs", c.n_inputs},   {"n_trials", c.n_trials},   {"n_conditions", c.n_conditions},
          {"trial_len", c.trial_len}, {"bin_width", c.bin_width}, {"dt", c.dt},
          {"rate_lo", c.rate_lo},     {"rate_hi", c.rate_hi},     {"behavior_noise", c.behavior_noise},
          {"seed", c.seed}};
}

void TrainFromJson(const Json& j, TrainConfig& c) {
  const std::string w = "train";
  RejectUnknownKeys(j, {"batch_size", "max_steps", "kl_ramp_steps", "eval_every", "cd", "cd_rescale", "sv",
                        "sv_frac", "grad_clip", "r2_per_neuron", "decode_folds", "seed"},
                    w);
  Count(j, "batch_size", c.batch_size, w);
  Count(j, "max_steps", c.max_steps, w);
  Count(j, "kl_ramp_steps", c.kl_ramp_steps, w);
  Count(j, "eval_every", c.eval_every, w);
  Flag(j, "cd", c.cd_enabled, w);
  Flag(j, "cd_rescale", c.cd_rescale, w);
  Flag(j, "sv", c.sv_enabled, w);
  Real(j, "sv_frac", c.sv_frac, w);
  Real(j, "grad_clip", c.grad_clip, w);
  Flag(j, "r2_per_neuron", c.r2_per_neuron, w);
  Count(j, "decode_folds", c.decode_folds, w);
  Seed(j, "seed", c.seed, w);
}

Json ToJson(const TrainConfig& c) {
  return {{"batch_size", c.batch_size}, {"max_steps", c.max_steps}, {"kl_ramp_steps", c.kl_ramp_steps},
          {"eval_every", c.eval_every}, {"cd", c.cd_enabled},       {"cd_rescale", c.cd_rescale},
          {"sv", c.sv_enabled},         {"sv_frac", c.sv_frac},       {"grad_clip", c.grad_clip}, {"r2_per_neuron", c.r2_per_neuron},
          {"decode_folds", c.decode_folds}, {"seed", c.seed}};
}

HpRange RangeFromJson(const Json& j, const std::string& where) {
  RejectUnknownKeys(j, {"lo", "hi", "scale"}, where);
  HpRange r;
  Require(j.contains("lo") && j.contains("hi"), ErrorCategory::kSchema, where + " needs lo and hi");
  Real(j, "lo", r.lo, where);
  Real(j, "hi", r.hi, where);
  std::string scale = "log";
  Text(j, "scale", scale, where);
  Require(scale == "log" || scale == "linear", ErrorCategory::kSchema, where + ".scale must be 'log' or 'linear'");
  r.log_scale = scale == "log";
  return r;
}

Json ToJson(const HpRange& r) { return {{"lo", r.lo}, {"hi", r.hi}, {"scale", r.log_scale ? "log" : "linear"}}; }

void SweepFromJson(const Json& j, SweepOptions& s) {
  const std::string w = "sweep";
  RejectUnknownKeys(j, {"n_models", "seed", "shared_seed", "ranges"}, w);
  Count(j, "n_models", s.n_models, w);
  Seed(j, "seed", s.seed, w);
  Flag(j, "shared_seed", s.shared_seed, w);
  if (j.contains("ranges")) {
    const Json& r = j.at("ranges");
    RejectUnknownKeys(r, {"l2_gen_scale", "l2_con_scale", "kl_ic_scale", "kl_co_scale", "dropout_prob"}, w + ".ranges");
    if (r.contains("l2_gen_scale")) s.ranges.l2_gen = RangeFromJson(r.at("l2_gen_scale"), w + ".ranges.l2_gen_scale");
    if (r.contains("l2_con_scale")) s.ranges.l2_con = RangeFromJson(r.at("l2_con_scale"), w + ".ranges.l2_con_scale");
    if (r.contains("kl_ic_scale")) s.ranges.kl_ic = RangeFromJson(r.at("kl_ic_scale"), w + ".ranges.kl_ic_scale");
    if (r.contains("kl_co_scale")) s.ranges.kl_co = RangeFromJson(r.at("kl_co_scale"), w + ".ranges.kl_co_scale");
    if (r.contains("dropout_prob")) s.ranges.dropout = RangeFromJson(r.at("dropout_prob"), w + ".ranges.dropout_prob");
  }
}

Json ToJson(const SweepOptions& s) {
  return {{"n_models", s.n_models},
          {"seed", s.seed},
          {"shared_seed", s.shared_seed},
          {"ranges",
           {{"l2_gen_scale", ToJson(s.ranges.l2_gen)},
            {"l2_con_scale", ToJson(s.ranges.l2_con)},
            {"kl_ic_scale", ToJson(s.ranges.kl_ic)},
            {"kl_co_scale", ToJson(s.ranges.kl_co)},
            {"dropout_prob", ToJson(s.ranges.dropout)}}}};
}

void PbtFromJson(const Json& j, PbtConfig& p, bool& keep_checkpoints) {
  const std::string w = "pbt";
  RejectUnknownKeys(j, {"population_size", "steps_per_generation", "n_generations", "exploit_frac", "perturb_low",
                        "perturb_high", "linear_step_frac", "resample_prob", "seed", "keep_checkpoints"},
                    w);
  Flag(j, "keep_checkpoints", keep_checkpoints, w);
  Count(j, "population_size", p.population_size, w);
  Count(j, "steps_per_generation", p.steps_per_generation, w);
  Count(j, "n_generations", p.n_generations, w);
  Real(j, "exploit_frac", p.exploit_frac, w);
  Real(j, "perturb_low", p.perturb_low, w);
  Real(j, "perturb_high", p.perturb_high, w);
  Real(j, "linear_step_frac", p.linear_step_frac, w);
  Real(j, "resample_prob", p.resample_prob, w);
  Seed(j, "seed", p.seed, w);
}

Json ToJson(const PbtConfig& p, bool keep_checkpoints) {
  return {{"keep_checkpoints", keep_checkpoints},{"population_size", p.population_size}, {"steps_per_generation", p.steps_per_generation},
          {"n_generations", p.n_generations},     {"exploit_frac", p.exploit_frac},
          {"perturb_low", p.perturb_low},         {"perturb_high", p.perturb_high},
          {"linear_step_frac", p.linear_step_frac}, {"resample_prob", p.resample_prob},
          {"seed", p.seed}};
}

void SpaceFromJson(const Json& j, HpSpace& space) {
  const std::string w = "hp_space";
  RejectUnknownKeys(j, {"l2_gen_scale", "l2_con_scale", "kl_ic_scale", "kl_co_scale", "dropout_prob", "keep_ratio",
                        "learning_rate"},
                    w);
  for (HpSpec& s : space.specs) {
    if (!j.contains(s.name)) continue;
    const Json& e = j.at(s.name);
    const std::string where = w + "." + s.name;
    RejectUnknownKeys(e, {"lo", "hi", "scale", "init"}, where);
    Real(e, "lo", s.lo, where);
    Real(e, "hi", s.hi, where);
    if (e.contains("scale")) {
      std::string scale;
      Text(e, "scale", scale, where);
      Require(scale == "log" || scale == "linear", ErrorCategory::kSchema, where + ".scale must be 'log' or 'linear'");
      s.scale = scale == "log" ? HpScale::kLog : HpScale::kLinear;
    }
    if (e.contains("init")) {
      if (e.at("init").is_null()) {
        s.init.reset();
      } else {
        double v = 0;
        Real(e, "init", v, where);
        s.init = v;
      }
    }
  }
}

Json ToJson(const HpSpace& space) {
  Json j = Json::object();
  for (const HpSpec& s : space.specs) {
    j[s.name] = {{"lo", s.lo}, {"hi", s.hi}, {"scale", s.scale == HpScale::kLog ? "log" : "linear"},
                 {"init", s.init ? Json(*s.init) : Json(nullptr)}};
  }
  return j;
}

void LinearFromJson(const Json& j, LinearDemoConfig& c) {
  const std::string w = "linear_demo";
  RejectUnknownKeys(j, {"d", "m", "n_train", "n_val", "seed", "cd", "keep_ratio", "steps", "learning_rate",
                        "random_init", "record_every"},
                    w);
  Count(j, "d", c.d, w);
  Count(j, "m", c.m, w);
  Count(j, "n_train", c.n_train, w);
  Count(j, "n_val", c.n_val, w);
  Seed(j, "seed", c.seed, w);
  Flag(j, "cd", c.train.cd_enabled, w);
  Real(j, "keep_ratio", c.train.keep_ratio, w);
  Count(j, "steps", c.train.steps, w);
  Real(j, "learning_rate", c.train.learning_rate, w);
  Flag(j, "random_init", c.train.random_init, w);
  Count(j, "record_every", c.train.record_every, w);
}

Json ToJson(const LinearDemoConfig& c) {
  return {{"d", c.d},
          {"m", c.m},
          {"n_train", c.n_train},
          {"n_val", c.n_val},
          {"seed", c.seed},
          {"cd", c.train.cd_enabled},
          {"keep_ratio", c.train.keep_ratio},
          {"steps", c.train.steps},
          {"learning_rate", c.train.learning_rate},
          {"random_init", c.train.random_init},
          {"record_every", c.train.record_every}};
}

void DecodeFromJson(const Json& j, DecodeConfig& c) {
  const std::string w = "decode";
  RejectUnknownKeys(j, {"k_folds", "seed", "features", "smooth_sigma", "checkpoint"}, w);
  Count(j, "k_folds", c.k_folds, w);
  Seed(j, "seed", c.seed, w);
  Text(j, "features", c.features, w);
  Real(j, "smooth_sigma", c.smooth_sigma, w);
  Text(j, "checkpoint", c.checkpoint, w);
}

Json ToJson(const DecodeConfig& c) {
  return {{"k_folds", c.k_folds},
          {"seed", c.seed},
          {"features", c.features},
          {"smooth_sigma", c.smooth_sigma},
          {"checkpoint", c.checkpoint}};
}

}  // namespace

Json ToJson(const HyperParams& h) {
  return {{"l2_gen_scale", h.l2_gen_scale}, {"l2_con_scale", h.l2_con_scale}, {"kl_ic_scale", h.kl_ic_scale},
          {"kl_co_scale", h.kl_co_scale},   {"dropout_prob", h.dropout_prob}, {"keep_ratio", h.keep_ratio},
          {"learning_rate", h.learning_rate}};
}

Json ToJson(const Architecture& a) {
  return {{"enc_dim", a.enc_dim},       {"gen_dim", a.gen_dim}, {"con_dim", a.con_dim},
          {"factor_dim", a.factor_dim}, {"z_dim", a.z_dim},     {"u_dim", a.u_dim},
          {"n_neurons", a.n_neurons},   {"n_bins", a.n_bins}};
}

HyperParams HyperParamsFromJson(const Json& j, const HyperParams& base) {
  const std::string w = "hps";
  RejectUnknownKeys(j, {"l2_gen_scale", "l2_con_scale", "kl_ic_scale", "kl_co_scale", "dropout_prob", "keep_ratio",
                        "learning_rate"},
                    w);
  HyperParams h = base;
  Real(j, "l2_gen_scale", h.l2_gen_scale, w);
  Real(j, "l2_con_scale", h.l2_con_scale, w);
  Real(j, "kl_ic_scale", h.kl_ic_scale, w);
  Real(j, "kl_co_scale", h.kl_co_scale, w);
  Real(j, "dropout_prob", h.dropout_prob, w);
  Real(j, "keep_ratio", h.keep_ratio, w);
  Real(j, "learning_rate", h.learning_rate, w);
  return h;
}

Architecture ArchitectureFromJson(const Json& j, const Architecture& base) {
  const std::string w = "arch";
  RejectUnknownKeys(j, {"enc_dim", "gen_dim", "con_dim", "factor_dim", "z_dim", "u_dim", "n_neurons", "n_bins"}, w);
  Architecture a = base;
  Count(j, "enc_dim", a.enc_dim, w);
  Count(j, "gen_dim", a.gen_dim, w);
  Count(j, "con_dim", a.con_dim, w);
  Count(j, "factor_dim", a.factor_dim, w);
  Count(j, "z_dim", a.z_dim, w);
  Count(j, "u_dim", a.u_dim, w);
  Count(j, "n_neurons", a.n_neurons, w);
  Count(j, "n_bins", a.n_bins, w);
  return a;
}

void ExperimentConfig::Validate() const {
  if (dataset.empty()) data.Validate();
  Require(valid_frac > 0 && valid_frac < 1, ErrorCategory::kInvalidArgument, "valid_frac must be in (0, 1)");
  Require(data_fraction > 0 && data_fraction <= 1, ErrorCategory::kInvalidArgument, "data_fraction must be in (0, 1]");
  Require(draws >= 1, ErrorCategory::kInvalidArgument, "draws must be >= 1");
  if (train.sv_enabled) {
    Require(train.sv_frac > 0 && train.sv_frac < 1, ErrorCategory::kInvalidArgument, "sv_frac must be in (0, 1)");
  }
  train.hps.Validate();
  Require(train.batch_size >= 1 && train.eval_every >= 1, ErrorCategory::kInvalidArgument,
          "train.batch_size and train.eval_every must be >= 1");
  Require(sweep.n_models >= 1, ErrorCategory::kInvalidArgument, "sweep.n_models must be >= 1");
  pbt.Validate();
  space.Validate();
  Require(decode.k_folds >= 2, ErrorCategory::kInvalidArgument, "decode.k_folds must be >= 2");
  Require(decode.features == "rates" || decode.features == "true_rates" || decode.features == "smoothed",
          ErrorCategory::kSchema, "decode.features must be rates, true_rates or smoothed");
}

ExperimentConfig ExperimentConfigFromJson(const Json& j) {
  RejectUnknownKeys(j, {"data", "dataset", "split", "arch", "hps", "train", "sweep", "pbt", "hp_space", "linear_demo",
                        "decode", "output", "data_fraction", "draws"},
                    "config");
  ExperimentConfig c;
  try {
    if (j.contains("data")) c.data = DataFromJson(j.at("data"));
    Text(j, "dataset", c.dataset, "config");
    if (j.contains("split")) {
      const Json& s = j.at("split");
      RejectUnknownKeys(s, {"valid_frac", "seed"}, "split");
      Real(s, "valid_frac", c.valid_frac, "split");
      Seed(s, "seed", c.split_seed, "split");
    }
    if (j.contains("arch")) c.train.arch = ArchitectureFromJson(j.at("arch"), c.train.arch);
    if (j.contains("hps")) c.train.hps = HyperParamsFromJson(j.at("hps"), c.train.hps);
    if (j.contains("train")) TrainFromJson(j.at("train"), c.train);
    if (j.contains("sweep")) SweepFromJson(j.at("sweep"), c.sweep);
    if (j.contains("pbt")) PbtFromJson(j.at("pbt"), c.pbt, c.pbt_keep_checkpoints);
    if (j.contains("hp_space")) SpaceFromJson(j.at("hp_space"), c.space);
    if (j.contains("linear_demo")) LinearFromJson(j.at("linear_demo"), c.linear);
    if (j.contains("decode")) DecodeFromJson(j.at("decode"), c.decode);
    Text(j, "output", c.output, "config");
    Real(j, "data_fraction", c.data_fraction, "config");
    Count(j, "draws", c.draws, "config");
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCategory::kSchema, std::string("config: ") + e.what());
  }
  c.Validate();
  return c;
}

ExperimentConfig LoadExperimentConfig(const std::filesystem::path& path) {
  const auto bytes = ReadFileBytes(path);
  Json j;
  try {
    j = Json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCategory::kSchema, path.string() + " is not valid JSON: " + e.what());
  }
  return ExperimentConfigFromJson(j);
}

Json ToJson(const ExperimentConfig& c) {
  Json j = {{"data", ToJson(c.data)},
            {"split", {{"valid_frac", c.valid_frac}, {"seed", c.split_seed}}},
            {"arch", ToJson(c.train.arch)},
            {"hps", ToJson(c.train.hps)},
            {"train", ToJson(c.train)},
            {"sweep", ToJson(c.sweep)},
            {"pbt", ToJson(c.pbt, c.pbt_keep_checkpoints)},
            {"hp_space", ToJson(c.space)},
            {"linear_demo", ToJson(c.linear)},
            {"decode", ToJson(c.decode)},
            {"data_fraction", c.data_fraction},
            {"draws", c.draws}};
  if (!c.dataset.empty()) j["dataset"] = c.dataset;
  if (!c.output.empty()) j["output"] = c.output;
  return j;
}

}  // namespace latentdyn
