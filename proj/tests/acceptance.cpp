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

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion.
// Usage: acceptance [--only 1,4,7]

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "latentdyn/container.hpp"
#include "latentdyn/dataset_io.hpp"
#include "latentdyn/datagen.hpp"
#include "latentdyn/decode.hpp"
#include "latentdyn/lfads.hpp"
#include "latentdyn/linear_ae.hpp"
#include "latentdyn/masking.hpp"
#include "latentdyn/metrics.hpp"
#include "latentdyn/pbt.hpp"
#include "latentdyn/rng.hpp"
#include "latentdyn/trainer.hpp"

using namespace latentdyn;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::size_t Workers(std::size_t cap) {
  return std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, cap);
}

// ---- 1 --------------------------------------------------------------------

Outcome GradientCheck() {
  Architecture a;
  a.enc_dim = a.gen_dim = a.con_dim = a.factor_dim = a.z_dim = 8;
  a.u_dim = 2;
  a.n_neurons = 5;
  a.n_bins = 10;
  LfadsModel m(a, 3);
  SpikeTensor c({2, a.n_bins, a.n_neurons});
  Rng rng(11);
  std::poisson_distribution<std::int64_t> pois(2.0);
  for (auto& v : c.data()) v = pois(rng);
  const MaskPair masks = MakeCdMasks(c.shape(), 0.7, 5);
  const Tensor x = ApplyInputMask(c, masks.input_keep, 0.7);
  HyperParams h;
  h.l2_gen_scale = 100;
  h.l2_con_scale = 300;
  h.kl_ic_scale = 1.5;
  h.kl_co_scale = 0.8;
  const ForwardOptions o{SampleMode::kPosteriorSample, 21, 0.1, 22};
  const LossAndGrad lg = ComputeLossAndGrad(m, x, c, masks.grad_keep, h, 0.6, o);

  // Every parameter coordinate. Fourth-order central stencil: with h = 1e-3
  // its roundoff is ~100x below the two-point rule at its optimal step,
  // which matters for the many coordinates with |grad| ~ 1e-8.
  const double h1 = 1e-3;
  auto loss_at = [&](Tensor& w, std::size_t i, double v) {
    const double orig = w[i];
    w[i] = v;
    const double l = TotalLoss(m, m.RunForward(x, o), c, masks.grad_keep, h, 0.6).total;
    w[i] = orig;
    return l;
  };
  double worst = 0;
  std::size_t n = 0;
  for (std::size_t p = 0; p < m.params().size(); ++p) {
    Tensor& w = m.params()[p];
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double v = w[i];
      const double fd = (8 * (loss_at(w, i, v + h1) - loss_at(w, i, v - h1)) -
                         (loss_at(w, i, v + 2 * h1) - loss_at(w, i, v - 2 * h1))) /
                        (12 * h1);
      const double an = lg.grads[p][i];
      worst = std::max(worst, std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-8}));
      ++n;
    }
  }
  return {worst < 1e-4, "max rel err " + Fmt("%.2e", worst) + " over " + std::to_string(n) + " coordinates"};
}

// ---- 2, 3 -----------------------------------------------------------------

LinearDemoDataset DemoLinearData() { return GenLinearDemo(5, 40, 1000, 1000, 0); }

// Noise-free floor of any rank-D linear map: orthogonal projection onto the
// readout's column space, applied to the noisy validation data.
double ProjectionFloor(const LinearDemoDataset& d) {
  using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const auto m = static_cast<Eigen::Index>(d.readout.dim(0));
  const auto dd = static_cast<Eigen::Index>(d.readout.dim(1));
  const auto n = static_cast<Eigen::Index>(d.valid.y.dim(0));
  const Eigen::Map<const Mat> w(d.readout.data().data(), m, dd);
  const Eigen::Map<const Mat> y(d.valid.y.data().data(), n, m);
  const Eigen::Map<const Mat> yt(d.valid.y_true.data().data(), n, m);
  const Mat p = w * (w.transpose() * w).inverse() * w.transpose();
  return (y * p - yt).rowwise().squaredNorm().mean();
}

struct LinearRun {
  LinearAeState state;
  double final_true = 0;
  double min_true = 0;
};

LinearRun RunLinear(const LinearDemoDataset& d, bool cd) {
  LinearAeOptions o;
  o.cd_enabled = cd;
  o.keep_ratio = 0.8;
  o.seed = 1;
  LinearRun r{TrainLinearAe(d, o)};
  r.final_true = r.state.curve.back().valid_true;
  r.min_true = INFINITY;
  for (const auto& p : r.state.curve) r.min_true = std::min(r.min_true, p.valid_true);
  return r;
}

Outcome LinearCollapse() {
  const LinearRun r = RunLinear(DemoLinearData(), false);
  const double diag = MeanAbsDiagMinusOne(r.state.u);
  const double ratio = r.final_true / r.min_true;
  return {diag < 0.1 && ratio >= 1.25,
          "mean|diag-1| " + Fmt("%.3g", diag) + ", final/min loss_true " + Fmt("%.3f", ratio)};
}

Outcome LinearRescue() {
  const LinearDemoDataset d = DemoLinearData();
  const double floor = ProjectionFloor(d);
  const double lib_floor = OracleTrueLoss(d);
  const LinearRun on = RunLinear(d, true);
  const LinearRun off = RunLinear(d, false);
  const double diag = std::max(MaxAbsDiag(on.state.u), on.state.max_abs_diag_seen);
  const bool ok = on.final_true <= 1.5 * floor && on.final_true <= 0.5 * off.final_true && diag < 0.05 &&
                  std::abs(lib_floor - floor) <= 1e-6 * floor;
  return {ok, "final/floor " + Fmt("%.3f", on.final_true / floor) + ", on/off " +
                  Fmt("%.3f", on.final_true / off.final_true) + ", max|diag| " + Fmt("%.3g", diag) +
                  ", floor " + Fmt("%.4f", floor) + " (library " + Fmt("%.4f", lib_floor) + ")"};
}

// ---- 4, 5, 6 --------------------------------------------------------------

TrainConfig DeskTrainConfig(std::size_t steps) {
  TrainConfig c;
  c.arch.enc_dim = c.arch.gen_dim = c.arch.con_dim = c.arch.z_dim = 16;
  c.arch.factor_dim = 10;
  c.arch.u_dim = 2;
  c.batch_size = 16;
  c.max_steps = steps;
  c.kl_ramp_steps = steps / 2;
  c.eval_every = steps;
  return c;
}

const GroundTruthDataset& DeskData() {
  static const GroundTruthDataset d = SimulateChaoticRnn(SynthRnnConfig::Desk());
  return d;
}

struct SweepStats {
  std::vector<double> metric, r2;
  std::vector<SweepRow> rows;
};

SweepStats DeskSweep(bool cd, bool sv) {
  TrainConfig cfg = DeskTrainConfig(600);
  const GroundTruthDataset& data = DeskData();
  cfg.arch.n_neurons = data.n_neurons();
  cfg.arch.n_bins = data.n_bins();
  cfg.cd_enabled = cd;
  cfg.sv_enabled = sv;
  cfg.sv_frac = 0.2;
  cfg.hps.keep_ratio = 0.7;
  const TrainInputs in = PrepareInputs(data, 0.2, sv ? 0.2 : 0.0, 1);
  SweepOptions so;
  so.n_models = 20;
  so.seed = 7;
  so.max_workers = Workers(4);
  SweepStats s;
  s.rows = RandomSweep(cfg, in, so);
  for (const SweepRow& r : s.rows) {
    if (r.failed || !r.final.rate_r2) continue;
    s.metric.push_back(sv ? r.final.sv_loss.value() : r.final.valid_loss);
    s.r2.push_back(*r.final.rate_r2);
  }
  return s;
}

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Outcome ValidationBlindness() {
  const SweepStats s = DeskSweep(false, false);
  if (s.r2.size() < 10) return {false, "only " + std::to_string(s.r2.size()) + " models finished"};
  const double med = Median(s.r2);
  std::vector<std::size_t> order(s.r2.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return s.metric[a] < s.metric[b]; });
  const std::size_t decile = (s.r2.size() + 9) / 10;
  bool found = false;
  std::string best;
  for (std::size_t k = 0; k < decile; ++k) {
    const double r2 = s.r2[order[k]];
    found = found || r2 < med;
    best += (k ? ", " : "") + Fmt("%.3f", r2);
  }
  return {found, "best-decile rate_r2 [" + best + "] vs median " + Fmt("%.3f", med) +
                     ", spearman(valid, r2) " + Fmt("%.3f", Spearman(s.metric, s.r2)) + ", " +
                     std::to_string(s.r2.size()) + " models"};
}

Outcome CdValidity() {
  const SweepStats s = DeskSweep(true, false);
  if (s.r2.size() < 3) return {false, "too few finished models"};
  const double rho = Spearman(s.metric, s.r2);
  return {rho <= -0.7 && s.r2.size() == 20,
          "spearman(valid, r2) " + Fmt("%.3f", rho) + ", " + std::to_string(s.r2.size()) + " models"};
}

Outcome SvValidity() {
  const SweepStats s = DeskSweep(false, true);
  if (s.r2.size() < 3) return {false, "too few finished models"};
  const double rho = Spearman(s.metric, s.r2);
  std::vector<double> valid;
  for (const SweepRow& r : s.rows) {
    if (!r.failed && r.final.rate_r2) valid.push_back(r.final.valid_loss);
  }
  return {rho <= -0.6 && s.r2.size() == 20,
          "spearman(sv, r2) " + Fmt("%.3f", rho) + " (valid: " + Fmt("%.3f", Spearman(valid, s.r2)) + "), " +
              std::to_string(s.r2.size()) + " models"};
}

// ---- 7 --------------------------------------------------------------------

Outcome PbtEfficacy() {
  constexpr std::size_t kPop = 16, kGens = 10, kStepsPerGen = 60;
  const GroundTruthDataset data = SubsampleTrials(DeskData(), 0.1, 1, 3).front();
  TrainConfig base = DeskTrainConfig(kGens * kStepsPerGen);
  base.arch.n_neurons = data.n_neurons();
  base.arch.n_bins = data.n_bins();
  base.cd_enabled = true;
  base.hps.keep_ratio = 0.5;
  base.hps.learning_rate = 0.01;
  const TrainInputs in = PrepareInputs(data, 0.2, 0.0, 1);

  PbtConfig pc;
  pc.population_size = kPop;
  pc.n_generations = kGens;
  pc.steps_per_generation = kStepsPerGen;
  pc.seed = 5;
  pc.max_workers = Workers(8);
  const PbtResult pbt = RunPbt(pc, HpSpace::Default(), base, in);
  const double pbt_r2 = pbt.best.rate_r2.value_or(-INFINITY);

  SweepOptions so;
  so.n_models = kPop;
  so.seed = 5;
  so.max_workers = Workers(8);
  std::vector<double> sweep_r2;
  for (const SweepRow& r : RandomSweep(base, in, so)) {
    sweep_r2.push_back(r.failed ? -INFINITY : r.final.rate_r2.value_or(-INFINITY));
  }
  const double sweep_med = Median(sweep_r2);

  // Table 1 initial values; log-uniform HPs at the geometric centre of their
  // range, dropout at the centre of its uniform range.
  TrainConfig fixed = base;
  fixed.hps = {500.0, 500.0, 0.5, 0.5, 0.35, 0.5, 0.01};
  fixed.seed = 5;
  const TrainResult bl = Train(fixed, in);
  const double bl_r2 = bl.failed ? -INFINITY : bl.log.back().rate_r2.value_or(-INFINITY);

  return {pbt_r2 >= sweep_med && pbt_r2 >= bl_r2,
          "pbt best rate_r2 " + Fmt("%.3f", pbt_r2) + ", sweep median " + Fmt("%.3f", sweep_med) + ", fixed " +
              Fmt("%.3f", bl_r2) + ", " + std::to_string(data.n_trials()) + " trials"};
}

// ---- 8 --------------------------------------------------------------------

Outcome DecoderSanity() {
  const GroundTruthDataset& d = DeskData();
  const DecodeResult real = FitOleCv(d.true_rates, d.behavior, 5, 0);
  Tensor shuffled = d.behavior;
  std::vector<std::size_t> perm(d.n_trials());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(17);
  std::shuffle(perm.begin(), perm.end(), rng);
  const std::size_t stride = d.behavior.size() / d.n_trials();
  for (std::size_t t = 0; t < d.n_trials(); ++t) {
    std::copy_n(d.behavior.data().begin() + static_cast<long>(perm[t] * stride), stride,
                shuffled.data().begin() + static_cast<long>(t * stride));
  }
  const DecodeResult shuf = FitOleCv(d.true_rates, shuffled, 5, 0);
  const double lo = *std::min_element(real.r2_per_dim.begin(), real.r2_per_dim.end());
  const double hi = *std::max_element(shuf.r2_per_dim.begin(), shuf.r2_per_dim.end());
  return {lo >= 0.9 && hi <= 0.05,
          "true-rate R2 min " + Fmt("%.3f", lo) + ", shuffled R2 max " + Fmt("%.3f", hi)};
}

// ---- 9 --------------------------------------------------------------------

Outcome Determinism() {
  SynthRnnConfig dc = SynthRnnConfig::Desk();
  dc.n_trials = 40;
  dc.n_conditions = 8;
  dc.trial_len = 0.3;
  auto bytes = [&] { return DatasetToContainer(SimulateChaoticRnn(dc)).Serialize(); };
  const bool data_same = bytes() == bytes();

  const GroundTruthDataset data = SimulateChaoticRnn(dc);
  TrainConfig c = DeskTrainConfig(40);
  c.arch.enc_dim = c.arch.gen_dim = c.arch.con_dim = c.arch.z_dim = 8;
  c.arch.factor_dim = 4;
  c.arch.n_neurons = data.n_neurons();
  c.arch.n_bins = data.n_bins();
  c.batch_size = 8;
  c.eval_every = 10;
  c.cd_enabled = true;
  c.sv_enabled = true;
  const TrainInputs in = PrepareInputs(data, 0.2, 0.2, 1);
  auto train_csv = [&] {
    const TrainResult r = Train(c, in);
    return MetricsTable(r.log).ToString() + std::string(1, '\0') +
           [](const auto& v) { return std::string(v.begin(), v.end()); }(r.checkpoint.ToContainer().Serialize());
  };
  const bool train_same = train_csv() == train_csv();

  SweepOptions so;
  so.n_models = 3;
  so.seed = 2;
  auto sweep_csv = [&](std::size_t workers) {
    so.max_workers = workers;
    return SweepTable(RandomSweep(c, in, so)).ToString();
  };
  const bool sweep_same = sweep_csv(1) == sweep_csv(3);

  PbtConfig pc;
  pc.population_size = 4;
  pc.n_generations = 2;
  pc.steps_per_generation = 10;
  auto pbt_csv = [&](std::size_t workers) {
    pc.max_workers = workers;
    return RunPbt(pc, HpSpace::Default(), c, in).history.ToString();
  };
  const bool pbt_same = pbt_csv(1) == pbt_csv(4);

  LinearAeOptions lo;
  lo.cd_enabled = true;
  lo.steps = 200;
  const LinearDemoDataset ld = GenLinearDemo(5, 40, 200, 200, 4);
  auto lin = [&] { return TrainLinearAe(ld, lo).u; };
  const bool lin_same = lin() == lin();

  auto yn = [](bool b) { return b ? "same" : "DIFFERENT"; };
  return {data_same && train_same && sweep_same && pbt_same && lin_same,
          std::string("dataset ") + yn(data_same) + ", train " + yn(train_same) + ", sweep " + yn(sweep_same) +
              ", pbt " + yn(pbt_same) + ", linear " + yn(lin_same)};
}

// ---- 10 -------------------------------------------------------------------

// Central (1 - alpha) acceptance interval of Binomial(n, p).
std::pair<std::size_t, std::size_t> BinomialInterval(std::size_t n, double p, double alpha) {
  std::vector<double> pmf(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    pmf[k] = std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
                      k * std::log(p) + (n - k) * std::log1p(-p));
  }
  std::size_t lo = 0, hi = n;
  double tail = 0;
  while (lo < n && tail + pmf[lo] <= alpha / 2) tail += pmf[lo++];
  tail = 0;
  while (hi > 0 && tail + pmf[hi] <= alpha / 2) tail += pmf[hi--];
  return {lo, hi};
}

Outcome MaskInvariants() {
  std::size_t shapes = 0, cd_bad = 0, sv_bad = 0, masks = 0;
  for (std::size_t a = 1; a <= 3; ++a) {
    for (std::size_t b = 1; b <= 4; ++b) {
      for (std::size_t c = 1; c <= 5; ++c) {
        ++shapes;
        const Shape s{a, b, c};
        const auto [lo, hi] = BinomialInterval(a * b * c, 0.2, 1e-3);
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
          for (double keep : {0.3, 0.7, 0.9}) {
            const MaskPair m = MakeCdMasks(s, keep, seed);
            for (std::size_t i = 0; i < m.input_keep.size(); ++i) {
              cd_bad += (m.input_keep[i] + m.grad_keep[i]) != 1;
            }
            ++masks;
          }
          const SpeckleHoldout h = MakeSpeckleHoldout(s, 0.2, seed);
          std::size_t k = 0;
          for (auto v : h.held_out.data()) k += v;
          sv_bad += k < lo || k > hi;
        }
      }
    }
  }
  return {cd_bad == 0 && sv_bad == 0, std::to_string(shapes) + " shapes, " + std::to_string(masks) +
                                          " CD pairs, non-complementary elements " + std::to_string(cd_bad) +
                                          ", SV outside 99.9% interval " + std::to_string(sv_bad) + "/" +
                                          std::to_string(shapes * 100)};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> fn;
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string tok;
      while (std::getline(ss, tok, ',')) only.insert(std::stoi(tok));
    } else {
      std::fprintf(stderr, "usage: acceptance [--only 1,2,...]\n");
      return 2;
    }
  }
  const std::vector<Criterion> all = {
      {1, "gradient check", 10, GradientCheck},
      {2, "linear AE identity collapse", 30, LinearCollapse},
      {3, "linear AE coordinated dropout rescue", 30, LinearRescue},
      {4, "standard validation blind to overfitting", 3600, ValidationBlindness},
      {5, "coordinated dropout restores validation", 3600, CdValidity},
      {6, "sample validation tracks rate R2", 3600, SvValidity},
      {7, "PBT efficacy", 3 * 3600, PbtEfficacy},
      {8, "decoder sanity", 10, DecoderSanity},
      {9, "determinism", 600, Determinism},
      {10, "mask invariants", 60, MaskInvariants},
  };
  int failed = 0;
  for (const Criterion& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("criterion %2d %s: %s (%s; %.1fs of %.0fs%s)\n", c.id, c.name, pass ? "PASS" : "FAIL",
                o.detail.c_str(), secs, c.budget_s, in_time ? "" : ", over time budget");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
