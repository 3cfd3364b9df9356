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

#include "latentdyn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "latentdyn/config.hpp"
#include "latentdyn/decode.hpp"
#include "latentdyn/error.hpp"
#include "latentdyn/masking.hpp"
#include "latentdyn/metrics.hpp"
#include "latentdyn/parallel.hpp"
#include "latentdyn/rng.hpp"

namespace latentdyn {

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

Tensor ToReal(const SpikeTensor& s) {
  Tensor x(s.shape());
  for (std::size_t i = 0; i < s.size(); ++i) x[i] = static_cast<double>(s[i]);
  return x;
}

std::vector<std::size_t> DrawBatch(std::size_t n_trials, std::size_t batch, std::uint64_t seed) {
  std::vector<std::size_t> idx(n_trials);
  std::iota(idx.begin(), idx.end(), 0);
  if (batch >= n_trials) return idx;
  Rng rng(seed);
  for (std::size_t i = 0; i < batch; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n_trials - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(batch);
  std::sort(idx.begin(), idx.end());
  return idx;
}

double Clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

void CheckInputs(const TrainConfig& cfg, const TrainInputs& in) {
  const Shape want_tail{cfg.arch.n_bins, cfg.arch.n_neurons};
  for (const GroundTruthDataset* d : {&in.train, &in.valid}) {
    Require(d->spikes.rank() == 3 && d->spikes.dim(1) == want_tail[0] && d->spikes.dim(2) == want_tail[1],
            ErrorCategory::kShapeMismatch,
            "data " + ShapeString(d->spikes.shape()) + " does not match architecture bins/neurons");
  }
  Require(in.train.n_trials() >= 1 && in.valid.n_trials() >= 1, ErrorCategory::kInvalidArgument,
          "need at least one training and one validation trial");
  if (cfg.sv_enabled) {
    Require(!in.sv_held_out.empty(), ErrorCategory::kInvalidArgument, "sv enabled but inputs carry no holdout");
    RequireSameShape(in.sv_held_out.shape(), in.train.spikes.shape(), "sv holdout");
  }
}

}  // namespace

void TrainConfig::Validate() const {
  hps.Validate();
  arch.Validate();
  Require(batch_size >= 1, ErrorCategory::kInvalidArgument, "batch_size must be >= 1");
  Require(eval_every >= 1, ErrorCategory::kInvalidArgument, "eval_every must be >= 1");
  Require(grad_clip > 0, ErrorCategory::kInvalidArgument, "grad_clip must be > 0");
  if (sv_enabled) {
    Require(sv_frac > 0 && sv_frac < 1, ErrorCategory::kInvalidArgument, "sv_frac must be in (0, 1)");
  }
  Require(decode_folds == 0 || decode_folds >= 2, ErrorCategory::kInvalidArgument, "decode_folds must be 0 or >= 2");
}

TrainInputs PrepareInputs(const GroundTruthDataset& data, double valid_frac, double sv_frac,
                          std::uint64_t data_seed) {
  Require(valid_frac > 0 && valid_frac < 1, ErrorCategory::kInvalidArgument, "valid_frac must be in (0, 1)");
  auto [train, valid] = SplitTrials(data, 1.0 - valid_frac, data_seed);
  TrainInputs in;
  in.train = std::move(train);
  in.valid = std::move(valid);
  if (sv_frac > 0) {
    in.sv_held_out = MakeSpeckleHoldout(in.train.spikes.shape(), sv_frac, data_seed).held_out;
    in.sv_frac = sv_frac;
  }
  return in;
}

Checkpoint Checkpoint::Init(const TrainConfig& cfg) {
  cfg.Validate();
  Checkpoint c;
  c.model = LfadsModel(cfg.arch, StreamSeed(cfg.seed, "model_init"));
  for (const Tensor& p : c.model.params()) {
    c.adam.m.emplace_back(p.shape());
    c.adam.v.emplace_back(p.shape());
  }
  c.hps = cfg.hps;
  c.seed = cfg.seed;
  return c;
}

TensorContainer Checkpoint::ToContainer() const {
  TensorContainer c;
  const auto& names = LfadsModel::ParamNames();
  for (std::size_t i = 0; i < names.size(); ++i) {
    c.Put("param/" + names[i], model.params()[i]);
    c.Put("adam_m/" + names[i], adam.m[i]);
    c.Put("adam_v/" + names[i], adam.v[i]);
  }
  c.meta() = {{"kind", "lfads_checkpoint"},
              {"step", step},
              {"seed", seed},
              {"hps", ToJson(hps)},
              {"arch", ToJson(model.arch())}};
  return c;
}

Checkpoint Checkpoint::FromContainer(const TensorContainer& c) {
  const Json& meta = c.meta();
  Require(meta.value("kind", "") == "lfads_checkpoint", ErrorCategory::kSchema, "container is not a checkpoint");
  Checkpoint out;
  try {
    out.model = LfadsModel(ArchitectureFromJson(meta.at("arch")), 0);
    out.hps = HyperParamsFromJson(meta.at("hps"));
    out.step = meta.at("step").get<std::size_t>();
    out.seed = meta.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCategory::kSchema, std::string("bad checkpoint metadata: ") + e.what());
  }
  const auto& names = LfadsModel::ParamNames();
  for (std::size_t i = 0; i < names.size(); ++i) {
    Tensor& p = out.model.params()[i];
    const Tensor& stored = c.F64("param/" + names[i]);
    RequireSameShape(p.shape(), stored.shape(), ("checkpoint parameter " + names[i]).c_str());
    p = stored;
    out.adam.m.push_back(c.F64("adam_m/" + names[i]));
    out.adam.v.push_back(c.F64("adam_v/" + names[i]));
    RequireSameShape(p.shape(), out.adam.m.back().shape(), ("checkpoint adam_m " + names[i]).c_str());
    RequireSameShape(p.shape(), out.adam.v.back().shape(), ("checkpoint adam_v " + names[i]).c_str());
  }
  return out;
}

Tensor InferRates(const LfadsModel& model, const SpikeTensor& spikes, double bin_width) {
  Tensor r = model.RunForward(ToReal(spikes), {}).rates;
  for (double& v : r.data()) v /= bin_width;
  return r;
}

MetricRecord Evaluate(const Checkpoint& ckpt, const TrainConfig& cfg, const TrainInputs& in) {
  CheckInputs(cfg, in);
  MetricRecord rec;
  rec.step = ckpt.step;
  const ModelOutput out = ckpt.model.RunForward(ToReal(in.valid.spikes), {});
  rec.valid_loss = MaskedPoissonNll(out.rates, in.valid.spikes).mean();
  const double bw = in.valid.bin_width;
  if (in.valid.has_rates() || in.valid.has_behavior()) {
    Tensor rates = out.rates;
    for (double& v : rates.data()) v /= bw;
    if (in.valid.has_rates()) {
      rec.rate_r2 = cfg.r2_per_neuron ? R2PerColumn(rates, in.valid.true_rates)
                                      : R2(rates.data(), in.valid.true_rates.data());
    }
    if (in.valid.has_behavior() && cfg.decode_folds >= 2 && in.valid.n_trials() >= cfg.decode_folds) {
      rec.decode_r2 = FitOleCv(rates, in.valid.behavior, cfg.decode_folds, StreamSeed(cfg.seed, "decode")).MeanR2();
    }
  }
  if (cfg.sv_enabled) {
    const MaskTensor& held = in.sv_held_out;
    MaskTensor keep(held.shape());
    for (std::size_t i = 0; i < held.size(); ++i) keep[i] = held[i] ? 0 : 1;
    const Tensor x = ApplyInputMask(in.train.spikes, keep, 1.0 - in.sv_frac);
    const ModelOutput sv_out = ckpt.model.RunForward(x, {});
    rec.sv_loss = MaskedPoissonNll(sv_out.rates, in.train.spikes, held).mean();
  }
  return rec;
}

TrainResult ContinueTraining(Checkpoint ckpt, const TrainConfig& cfg, const TrainInputs& in, std::size_t n_steps) {
  cfg.Validate();
  CheckInputs(cfg, in);
  Require(ckpt.model.arch() == cfg.arch, ErrorCategory::kInvalidArgument, "checkpoint architecture differs from config");
  TrainResult res;
  ckpt.hps = cfg.hps;
  const HyperParams& h = cfg.hps;
  const std::uint64_t seed = ckpt.seed;
  const std::size_t n_train = in.train.n_trials();
  const std::size_t end = ckpt.step + n_steps;
  double recon_sum = 0;
  std::size_t recon_n = 0;
  std::vector<Tensor>& params = ckpt.model.params();

  try {
    while (ckpt.step < end) {
      const std::size_t step = ckpt.step;
      const std::vector<std::size_t> idx = DrawBatch(n_train, cfg.batch_size, StreamSeed(seed, "batch", step));
      const SpikeTensor counts = GatherTrials(in.train.spikes, idx);
      MaskTensor held;
      StepMaskOptions mo;
      mo.cd_enabled = cfg.cd_enabled;
      mo.keep_ratio = h.keep_ratio;
      mo.cd_rescale = cfg.cd_rescale;
      if (cfg.sv_enabled) {
        held = GatherTrials(in.sv_held_out, idx);
        mo.sv_held_out = &held;
        mo.sv_frac = in.sv_frac;
      }
      const StepMasks masks = ComposeStepMasks(counts.shape(), mo, StreamSeed(seed, "step_masks", step));
      Tensor x(counts.shape());
      for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = masks.input_keep[i] ? static_cast<double>(counts[i]) * masks.input_scale : 0.0;
      }
      const double ramp = cfg.kl_ramp_steps == 0 ? 1.0 : Clamp01(static_cast<double>(step) / static_cast<double>(cfg.kl_ramp_steps));
      const ForwardOptions fo{SampleMode::kPosteriorSample, StreamSeed(seed, "posterior_sample", step), h.dropout_prob,
                              StreamSeed(seed, "dropout", step)};
      LossAndGrad lg = ComputeLossAndGrad(ckpt.model, x, counts, masks.loss_include, h, ramp, fo);

      double norm_sq = 0;
      for (const Tensor& g : lg.grads)
        for (double v : g.data()) norm_sq += v * v;
      if (!std::isfinite(norm_sq)) throw DivergenceError("non-finite gradient at step " + std::to_string(step));
      const double norm = std::sqrt(norm_sq);
      const double clip = norm > cfg.grad_clip ? cfg.grad_clip / norm : 1.0;

      const double t = static_cast<double>(step + 1);
      const double c1 = 1.0 - std::pow(kBeta1, t);
      const double c2 = 1.0 - std::pow(kBeta2, t);
      for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor& w = params[p];
        Tensor& m = ckpt.adam.m[p];
        Tensor& v = ckpt.adam.v[p];
        const Tensor& g = lg.grads[p];
        for (std::size_t i = 0; i < w.size(); ++i) {
          const double gi = g[i] * clip;
          m[i] = kBeta1 * m[i] + (1 - kBeta1) * gi;
          v[i] = kBeta2 * v[i] + (1 - kBeta2) * gi * gi;
          w[i] -= h.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + kAdamEps);
        }
        if (!AllFinite(w.data())) throw DivergenceError("non-finite parameters after step " + std::to_string(step));
      }
      ckpt.step = step + 1;
      recon_sum += lg.loss.recon;
      ++recon_n;
      if (ckpt.step % cfg.eval_every == 0 || ckpt.step == end) {
        MetricRecord rec = Evaluate(ckpt, cfg, in);
        rec.train_loss = recon_sum / static_cast<double>(recon_n);
        res.log.push_back(rec);
        recon_sum = 0;
        recon_n = 0;
      }
    }
    if (n_steps == 0) res.log.push_back(Evaluate(ckpt, cfg, in));
  } catch (const Error& e) {
    if (e.category() != ErrorCategory::kDivergence && e.category() != ErrorCategory::kNonFinite) throw;
    res.failed = true;
    res.failure = e.what();
  }
  res.checkpoint = std::move(ckpt);
  return res;
}

TrainResult Train(const TrainConfig& cfg, const TrainInputs& in) {
  return ContinueTraining(Checkpoint::Init(cfg), cfg, in, cfg.max_steps);
}

CsvTable MetricsTable(const std::vector<MetricRecord>& log) {
  CsvTable t;
  t.header = {"step", "train_loss", "valid_loss", "sv_loss", "rate_r2", "decode_r2"};
  for (const MetricRecord& r : log) {
    t.rows.push_back({std::to_string(r.step), FormatNumber(r.train_loss), FormatNumber(r.valid_loss),
                      FormatNumber(r.sv_loss), FormatNumber(r.rate_r2), FormatNumber(r.decode_r2)});
  }
  return t;
}

HyperParams DrawHyperParams(const SweepRanges& ranges, const HyperParams& base, std::uint64_t seed) {
  Rng rng = MakeRng(seed, "sweep/hps");
  auto draw = [&](const HpRange& r) {
    Require(r.lo <= r.hi, ErrorCategory::kInvalidArgument, "sweep range has lo > hi");
    const double u = Uniform01(rng);
    if (r.log_scale) {
      Require(r.lo > 0, ErrorCategory::kInvalidArgument, "log-scale range needs lo > 0");
      return std::exp(std::log(r.lo) + u * (std::log(r.hi) - std::log(r.lo)));
    }
    return r.lo + u * (r.hi - r.lo);
  };
  HyperParams h = base;
  h.l2_gen_scale = draw(ranges.l2_gen);
  h.l2_con_scale = draw(ranges.l2_con);
  h.kl_ic_scale = draw(ranges.kl_ic);
  h.kl_co_scale = draw(ranges.kl_co);
  h.dropout_prob = draw(ranges.dropout);
  return h;
}

std::vector<SweepRow> RandomSweep(const TrainConfig& base, const TrainInputs& in, const SweepOptions& opts) {
  Require(opts.n_models >= 1, ErrorCategory::kInvalidArgument, "sweep needs n_models >= 1");
  base.Validate();
  CheckInputs(base, in);
  std::vector<SweepRow> rows(opts.n_models);
  ParallelFor(opts.n_models, opts.max_workers, [&](std::size_t i) {
    SweepRow& row = rows[i];
    row.model = i;
    row.seed = opts.shared_seed ? opts.seed : StreamSeed(opts.seed, "sweep/model", i);
    TrainConfig cfg = base;
    cfg.seed = row.seed;
    cfg.hps = DrawHyperParams(opts.ranges, base.hps, row.seed);
    cfg.eval_every = std::max<std::size_t>(1, cfg.max_steps);
    row.hps = cfg.hps;
    const TrainResult r = Train(cfg, in);
    row.failed = r.failed;
    if (!r.log.empty()) row.final = r.log.back();
  });
  return rows;
}

CsvTable SweepTable(const std::vector<SweepRow>& rows) {
  CsvTable t;
  t.header = {"model", "seed", "l2_gen_scale", "l2_con_scale", "kl_ic_scale", "kl_co_scale", "dropout_prob",
              "keep_ratio", "learning_rate", "failed", "train_loss", "valid_loss", "sv_loss", "rate_r2", "decode_r2"};
  for (const SweepRow& r : rows) {
    auto metric = [&](std::optional<double> v) { return r.failed ? std::string() : FormatNumber(v); };
    t.rows.push_back({std::to_string(r.model), std::to_string(r.seed), FormatNumber(r.hps.l2_gen_scale),
                      FormatNumber(r.hps.l2_con_scale), FormatNumber(r.hps.kl_ic_scale), FormatNumber(r.hps.kl_co_scale),
                      FormatNumber(r.hps.dropout_prob), FormatNumber(r.hps.keep_ratio),
                      FormatNumber(r.hps.learning_rate), r.failed ? "1" : "0", metric(r.final.train_loss),
                      metric(r.final.valid_loss), metric(r.final.sv_loss), metric(r.final.rate_r2),
                      metric(r.final.decode_r2)});
  }
  return t;
}

}  // namespace latentdyn
