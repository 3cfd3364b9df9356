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

#include <cmath>
#include <random>

#include "doctest.h"
#include "latentdyn/datagen.hpp"
#include "latentdyn/lfads.hpp"
#include "latentdyn/masking.hpp"
#include "latentdyn/rng.hpp"

using namespace latentdyn;

namespace {

Architecture Tiny(std::size_t u_dim = 2) {
  Architecture a;
  a.enc_dim = a.gen_dim = a.con_dim = 8;
  a.factor_dim = 4;
  a.z_dim = 6;
  a.u_dim = u_dim;
  a.n_neurons = 5;
  a.n_bins = 10;
  return a;
}

SpikeTensor RandomCounts(const Architecture& a, std::size_t batch, std::uint64_t seed) {
  SpikeTensor s({batch, a.n_bins, a.n_neurons});
  Rng rng(seed);
  std::poisson_distribution<std::int64_t> p(1.5);
  for (auto& v : s.data()) v = p(rng);
  return s;
}

Tensor AsInput(const SpikeTensor& s) {
  Tensor x(s.shape());
  for (std::size_t i = 0; i < s.size(); ++i) x[i] = static_cast<double>(s[i]);
  return x;
}

}  // namespace

TEST_CASE("zero weights give constant rates exp(bias)") {
  const Architecture a = Tiny();
  LfadsModel m(a, 1);
  for (Tensor& p : m.params()) std::fill(p.data().begin(), p.data().end(), 0.0);
  Tensor& rate_b = m.params().back();
  for (std::size_t j = 0; j < rate_b.size(); ++j) rate_b[j] = 0.1 * static_cast<double>(j);
  const ModelOutput out = m.RunForward(AsInput(RandomCounts(a, 3, 2)), {});
  for (std::size_t b = 0; b < 3; ++b)
    for (std::size_t t = 0; t < a.n_bins; ++t)
      for (std::size_t j = 0; j < a.n_neurons; ++j)
        CHECK(out.rates.at(b, t, j) == doctest::Approx(std::exp(0.1 * j)).epsilon(1e-14));
}

TEST_CASE("posterior mean mode is deterministic and sampling is seeded") {
  const Architecture a = Tiny();
  const LfadsModel m(a, 3);
  const Tensor x = AsInput(RandomCounts(a, 2, 4));
  CHECK(m.RunForward(x, {}).rates == m.RunForward(x, {}).rates);
  ForwardOptions s{SampleMode::kPosteriorSample, 7, 0.0, 0};
  CHECK(m.RunForward(x, s).rates == m.RunForward(x, s).rates);
  ForwardOptions s2 = s;
  s2.sample_seed = 8;
  CHECK_FALSE(m.RunForward(x, s).rates == m.RunForward(x, s2).rates);
}

TEST_CASE("output shapes and positive finite rates") {
  const Architecture a = Tiny();
  const LfadsModel m(a, 5);
  const ModelOutput out = m.RunForward(AsInput(RandomCounts(a, 4, 6)), {SampleMode::kPosteriorSample, 1, 0.3, 2});
  CHECK(out.rates.shape() == Shape{4, 10, 5});
  CHECK(out.factors.shape() == Shape{4, 10, 4});
  CHECK(out.posterior.z_mean.shape() == Shape{4, 6});
  CHECK(out.posterior.u_mean.shape() == Shape{4, 10, 2});
  for (double r : out.rates.data()) CHECK((r > 0 && std::isfinite(r)));
}

TEST_CASE("autonomous model with u_dim 0") {
  const Architecture a = Tiny(0);
  const LfadsModel m(a, 5);
  const SpikeTensor c = RandomCounts(a, 2, 1);
  const ModelOutput out = m.RunForward(AsInput(c), {});
  CHECK(out.posterior.u_mean.size() == 0);
  const LossBreakdown l = TotalLoss(m, out, c, {}, HyperParams{}, 1.0);
  CHECK(l.kl_co == 0.0);
  const LossAndGrad lg = ComputeLossAndGrad(m, AsInput(c), c, {}, HyperParams{}, 1.0, {});
  CHECK(lg.loss.total == doctest::Approx(l.total).epsilon(1e-12));
}

TEST_CASE("gaussian kl closed form") {
  const std::vector<double> zero(4, 0.0);
  CHECK(KlGaussian(zero, zero, 1.0) == 0.0);
  // Unit mean, unit variance: 0.5 * mu^2 per dimension.
  const std::vector<double> one(4, 1.0);
  CHECK(KlGaussian(one, zero, 1.0) == doctest::Approx(2.0));
}

TEST_CASE("gaussian kl matches a monte carlo estimate") {
  const std::vector<double> mean{0.3, -1.2};
  const std::vector<double> logvar{-0.5, 0.4};
  const double prior_var = 2.0;
  Rng rng(11);
  std::normal_distribution<double> n(0.0, 1.0);
  const std::size_t draws = 1000000;
  double sum = 0, sum_sq = 0;
  for (std::size_t i = 0; i < draws; ++i) {
    double lr = 0;
    for (std::size_t d = 0; d < 2; ++d) {
      const double sd = std::exp(0.5 * logvar[d]);
      const double x = mean[d] + sd * n(rng);
      const double lq = -0.5 * std::log(2 * M_PI) - 0.5 * logvar[d] - 0.5 * std::pow((x - mean[d]) / sd, 2);
      const double lp = -0.5 * std::log(2 * M_PI * prior_var) - 0.5 * x * x / prior_var;
      lr += lq - lp;
    }
    sum += lr;
    sum_sq += lr * lr;
  }
  const double mc = sum / draws;
  const double se = std::sqrt((sum_sq / draws - mc * mc) / draws);
  CHECK(std::abs(KlGaussian(mean, logvar, prior_var) - mc) < 3 * se);
}

TEST_CASE("loss is linear in each penalty scale and reduces to recon at zero") {
  const Architecture a = Tiny();
  const LfadsModel m(a, 9);
  const SpikeTensor c = RandomCounts(a, 3, 2);
  const ModelOutput out = m.RunForward(AsInput(c), {});
  HyperParams zero;
  zero.l2_gen_scale = zero.l2_con_scale = zero.kl_ic_scale = zero.kl_co_scale = 0;
  const LossBreakdown l0 = TotalLoss(m, out, c, {}, zero, 1.0);
  CHECK(l0.total == doctest::Approx(l0.recon).epsilon(1e-15));
  HyperParams h = zero;
  h.kl_ic_scale = 1.0;
  const double k1 = TotalLoss(m, out, c, {}, h, 1.0).total - l0.total;
  h.kl_ic_scale = 3.0;
  const double k3 = TotalLoss(m, out, c, {}, h, 1.0).total - l0.total;
  CHECK(k1 > 0);
  CHECK(k3 == doctest::Approx(3 * k1).epsilon(1e-10));
  h = zero;
  h.l2_gen_scale = 10;
  const double g1 = TotalLoss(m, out, c, {}, h, 1.0).l2;
  h.l2_gen_scale = 20;
  CHECK(TotalLoss(m, out, c, {}, h, 1.0).l2 == doctest::Approx(2 * g1).epsilon(1e-12));
  // kl ramp scales both kl terms.
  h = HyperParams{};
  const LossBreakdown full = TotalLoss(m, out, c, {}, h, 1.0);
  const LossBreakdown half = TotalLoss(m, out, c, {}, h, 0.5);
  CHECK(half.kl_ic == doctest::Approx(0.5 * full.kl_ic));
  CHECK(half.kl_co == doctest::Approx(0.5 * full.kl_co));
}

TEST_CASE("tape loss matches the direct loss") {
  const Architecture a = Tiny();
  const LfadsModel m(a, 2);
  const SpikeTensor c = RandomCounts(a, 3, 8);
  const MaskTensor inc = MakeCdMasks(c.shape(), 0.6, 5).grad_keep;
  const ForwardOptions o{SampleMode::kPosteriorSample, 4, 0.0, 0};
  const LossAndGrad lg = ComputeLossAndGrad(m, AsInput(c), c, inc, HyperParams{}, 0.7, o);
  const LossBreakdown d = TotalLoss(m, m.RunForward(AsInput(c), o), c, inc, HyperParams{}, 0.7);
  CHECK(lg.loss.recon == doctest::Approx(d.recon).epsilon(1e-12));
  CHECK(lg.loss.kl_ic == doctest::Approx(d.kl_ic).epsilon(1e-12));
  CHECK(lg.loss.kl_co == doctest::Approx(d.kl_co).epsilon(1e-12));
  CHECK(lg.loss.l2 == doctest::Approx(d.l2).epsilon(1e-12));
  CHECK(lg.loss.n_included == d.n_included);
}

TEST_CASE("end to end gradient matches finite differences") {
  const Architecture a = Tiny();
  LfadsModel m(a, 21);
  const SpikeTensor c = RandomCounts(a, 2, 3);
  const Tensor x = AsInput(c);
  const MaskTensor inc = MakeCdMasks(c.shape(), 0.7, 9).grad_keep;
  HyperParams h;
  h.l2_gen_scale = h.l2_con_scale = 50;
  h.kl_ic_scale = h.kl_co_scale = 2;
  const ForwardOptions o{SampleMode::kPosteriorSample, 13, 0.2, 17};
  const LossAndGrad lg = ComputeLossAndGrad(m, x, c, inc, h, 1.0, o);

  Rng rng(5);
  const double step = 1e-5;
  double worst = 0;
  std::size_t probes = 0;
  for (std::size_t p = 0; p < m.params().size(); ++p) {
    Tensor& w = m.params()[p];
    if (w.empty()) continue;
    for (int k = 0; k < 2; ++k) {
      const std::size_t i = rng() % w.size();
      const double orig = w[i];
      w[i] = orig + step;
      const double up = ComputeLossAndGrad(m, x, c, inc, h, 1.0, o).loss.total;
      w[i] = orig - step;
      const double dn = ComputeLossAndGrad(m, x, c, inc, h, 1.0, o).loss.total;
      w[i] = orig;
      const double fd = (up - dn) / (2 * step);
      const double an = lg.grads[p][i];
      worst = std::max(worst, std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-8}));
      ++probes;
    }
  }
  CHECK(probes >= 50);
  CHECK(worst < 1e-4);
}

TEST_CASE("coordinated dropout blocks gradient through input-visible elements") {
  const Architecture a = Tiny();
  const LfadsModel m(a, 4);
  const SpikeTensor c = RandomCounts(a, 2, 10);
  const MaskPair masks = MakeCdMasks(c.shape(), 0.7, 3);
  const Tensor x = ApplyInputMask(c, masks.input_keep, 0.7);

  Tape tape;
  const ForwardGraph fwd = m.BuildForward(tape, x, {});
  const LossGraph lg = m.BuildLoss(tape, fwd, c, masks.grad_keep, HyperParams{}, 1.0);
  tape.Backward(lg.total);
  const Tensor g = FromTimeMajor(tape.Grad(fwd.log_rates), 2);
  std::size_t zero_on_visible = 0, visible = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (masks.input_keep[i]) {
      ++visible;
      zero_on_visible += g[i] == 0.0;
    } else {
      CHECK(g[i] != 0.0);
    }
  }
  CHECK(zero_on_visible == visible);

  // Changing a target count that the model sees as input, without changing
  // the input, leaves the loss unchanged.
  SpikeTensor c2 = c;
  std::size_t j = 0;
  while (!masks.input_keep[j]) ++j;
  c2[j] += 5;
  const double l1 = ComputeLossAndGrad(m, x, c, masks.grad_keep, HyperParams{}, 1.0, {}).loss.total;
  const double l2 = ComputeLossAndGrad(m, x, c2, masks.grad_keep, HyperParams{}, 1.0, {}).loss.total;
  CHECK(l1 == l2);
}

TEST_CASE("initialization is seeded and architecture is validated") {
  const Architecture a = Tiny();
  CHECK(LfadsModel(a, 1).params() == LfadsModel(a, 1).params());
  CHECK_FALSE(LfadsModel(a, 1).params() == LfadsModel(a, 2).params());
  CHECK(LfadsModel(a, 1).params().size() == LfadsModel::ParamNames().size());
  Architecture bad = a;
  bad.factor_dim = 20;
  CHECK_THROWS_AS(LfadsModel(bad, 0), Error);
  const LfadsModel m(a, 0);
  CHECK_THROWS_AS(m.RunForward(Tensor({2, 9, 5}), {}), Error);
}
