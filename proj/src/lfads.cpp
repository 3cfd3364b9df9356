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

#include "latentdyn/lfads.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "latentdyn/rng.hpp"

namespace latentdyn {

namespace {

enum Param : std::size_t {
  kIcFwdWih, kIcFwdBih, kIcFwdWhh, kIcFwdBhh,
  kIcBwdWih, kIcBwdBih, kIcBwdWhh, kIcBwdBhh,
  kCiFwdWih, kCiFwdBih, kCiFwdWhh, kCiFwdBhh,
  kCiBwdWih, kCiBwdBih, kCiBwdWhh, kCiBwdBhh,
  kIcPostW, kIcPostB,
  kG0W, kG0B,
  kConWci, kConWf, kConBih, kConWhh, kConBhh,
  kUPostW, kUPostB,
  kGenWih, kGenBih, kGenWhh, kGenBhh,
  kFacW, kFacB,
  kRateW, kRateB,
  kNumParams,
};

void FillNormal(Tensor& t, Rng& rng, double sd) {
  std::normal_distribution<double> n(0.0, sd);
  for (double& x : t.data()) x = n(rng);
}

Tensor AffineInit(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  Tensor w({fan_in, fan_out});
  if (fan_in > 0) FillNormal(w, rng, 1.0 / std::sqrt(static_cast<double>(fan_in)));
  return w;
}

// Three orthogonal [hid, hid] blocks side by side.
Tensor RecurrentInit(std::size_t hid, Rng& rng) {
  Tensor w({hid, 3 * hid});
  for (std::size_t block = 0; block < 3; ++block) {
    Eigen::MatrixXd g(hid, hid);
    std::normal_distribution<double> n(0.0, 1.0);
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = n(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
      if (r(j, j) < 0) q.col(j) *= -1.0;
    }
    for (std::size_t i = 0; i < hid; ++i) {
      for (std::size_t j = 0; j < hid; ++j) w.at(i, block * hid + j) = q(i, j);
    }
  }
  return w;
}

std::size_t CountIncluded(const MaskTensor& include, std::size_t total) {
  if (include.empty()) return total;
  std::size_t n = 0;
  for (auto v : include.data()) n += v != 0;
  return n;
}

template <typename T, typename U>
BasicTensor<U> ToTimeMajorAs(const BasicTensor<T>& x) {
  const std::size_t b = x.dim(0), t = x.dim(1), n = x.dim(2);
  BasicTensor<U> out({t * b, n});
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t s = 0; s < t; ++s)
      for (std::size_t j = 0; j < n; ++j) out[(s * b + i) * n + j] = static_cast<U>(x.at(i, s, j));
  return out;
}

}  // namespace

void Architecture::Validate() const {
  Require(enc_dim >= 1 && gen_dim >= 1 && con_dim >= 1 && factor_dim >= 1 && z_dim >= 1 &&
              n_neurons >= 1 && n_bins >= 1,
          ErrorCategory::kInvalidArgument, "architecture sizes must be >= 1");
  Require(factor_dim <= gen_dim, ErrorCategory::kInvalidArgument, "factor_dim must be <= gen_dim");
}

void HyperParams::Validate() const {
  Require(l2_gen_scale >= 0 && l2_con_scale >= 0 && kl_ic_scale >= 0 && kl_co_scale >= 0,
          ErrorCategory::kInvalidArgument, "penalty scales must be >= 0");
  Require(dropout_prob >= 0 && dropout_prob < 1, ErrorCategory::kInvalidArgument,
          "dropout_prob must be in [0, 1)");
  Require(keep_ratio > 0 && keep_ratio < 1, ErrorCategory::kInvalidArgument,
          "keep_ratio must be in (0, 1)");
  Require(learning_rate > 0, ErrorCategory::kInvalidArgument, "learning_rate must be > 0");
}

double KlGaussian(std::span<const double> mean, std::span<const double> logvar, double prior_var) {
  Require(mean.size() == logvar.size(), ErrorCategory::kShapeMismatch, "kl mean/logvar length");
  Require(prior_var > 0, ErrorCategory::kInvalidArgument, "prior variance must be positive");
  const double log_pv = std::log(prior_var);
  double kl = 0;
  for (std::size_t i = 0; i < mean.size(); ++i) {
    kl += 0.5 * (std::exp(logvar[i]) / prior_var + mean[i] * mean[i] / prior_var - 1.0 -
                 logvar[i] + log_pv);
  }
  return kl;
}

Tensor ToTimeMajor(const Tensor& x) { return ToTimeMajorAs<double, double>(x); }

Tensor FromTimeMajor(const Tensor& x, std::size_t batch) {
  const std::size_t t = x.dim(0) / batch, n = x.dim(1);
  Tensor out({batch, t, n});
  for (std::size_t s = 0; s < t; ++s)
    for (std::size_t i = 0; i < batch; ++i)
      for (std::size_t j = 0; j < n; ++j) out.at(i, s, j) = x[(s * batch + i) * n + j];
  return out;
}

const std::vector<std::string>& LfadsModel::ParamNames() {
  static const std::vector<std::string> names = {
      "ic_enc_fwd.w_ih", "ic_enc_fwd.b_ih", "ic_enc_fwd.w_hh", "ic_enc_fwd.b_hh",
      "ic_enc_bwd.w_ih", "ic_enc_bwd.b_ih", "ic_enc_bwd.w_hh", "ic_enc_bwd.b_hh",
      "ci_enc_fwd.w_ih", "ci_enc_fwd.b_ih", "ci_enc_fwd.w_hh", "ci_enc_fwd.b_hh",
      "ci_enc_bwd.w_ih", "ci_enc_bwd.b_ih", "ci_enc_bwd.w_hh", "ci_enc_bwd.b_hh",
      "ic_post.w", "ic_post.b",
      "g0.w", "g0.b",
      "con.w_ci", "con.w_f", "con.b_ih", "con.w_hh", "con.b_hh",
      "u_post.w", "u_post.b",
      "gen.w_ih", "gen.b_ih", "gen.w_hh", "gen.b_hh",
      "factors.w", "factors.b",
      "rates.w", "rates.b",
  };
  return names;
}

LfadsModel::LfadsModel(const Architecture& arch, std::uint64_t init_seed) : arch_(arch) {
  arch_.Validate();
  const std::size_t e = arch.enc_dim, g = arch.gen_dim, c = arch.con_dim, f = arch.factor_dim,
                    z = arch.z_dim, u = arch.u_dim, n = arch.n_neurons;
  Rng rng = MakeRng(init_seed, "lfads/init");
  params_.resize(kNumParams);
  auto gru = [&](std::size_t base, std::size_t in, std::size_t hid) {
    params_[base] = AffineInit(in, 3 * hid, rng);
    params_[base + 1] = Tensor({3 * hid});
    params_[base + 2] = RecurrentInit(hid, rng);
    params_[base + 3] = Tensor({3 * hid});
  };
  gru(kIcFwdWih, n, e);
  gru(kIcBwdWih, n, e);
  gru(kCiFwdWih, n, e);
  gru(kCiBwdWih, n, e);
  params_[kIcPostW] = AffineInit(2 * e, 2 * z, rng);
  params_[kIcPostB] = Tensor({2 * z});
  params_[kG0W] = AffineInit(z, g, rng);
  params_[kG0B] = Tensor({g});
  // The controller sees [encoding(t); f(t-1)]; its input weights are kept as
  // two blocks so the encoding projection can be computed for all steps at once.
  {
    const Tensor w = AffineInit(2 * e + f, 3 * c, rng);
    params_[kConWci] = Tensor({2 * e, 3 * c},
                              std::vector<double>(w.data().begin(), w.data().begin() + 2 * e * 3 * c));
    params_[kConWf] = Tensor({f, 3 * c},
                             std::vector<double>(w.data().begin() + 2 * e * 3 * c, w.data().end()));
  }
  params_[kConBih] = Tensor({3 * c});
  params_[kConWhh] = RecurrentInit(c, rng);
  params_[kConBhh] = Tensor({3 * c});
  params_[kUPostW] = AffineInit(c, 2 * u, rng);
  params_[kUPostB] = Tensor({2 * u});
  params_[kGenWih] = AffineInit(u, 3 * g, rng);
  params_[kGenBih] = Tensor({3 * g});
  params_[kGenWhh] = RecurrentInit(g, rng);
  params_[kGenBhh] = Tensor({3 * g});
  params_[kFacW] = AffineInit(g, f, rng);
  params_[kFacB] = Tensor({f});
  params_[kRateW] = AffineInit(f, n, rng);
  params_[kRateB] = Tensor({n});
}

std::size_t LfadsModel::NumParameters() const {
  std::size_t n = 0;
  for (const Tensor& p : params_) n += p.size();
  return n;
}

ForwardGraph LfadsModel::BuildForward(Tape& t, const Tensor& x, const ForwardOptions& o) const {
  const Architecture& a = arch_;
  Require(x.rank() == 3 && x.dim(1) == a.n_bins && x.dim(2) == a.n_neurons,
          ErrorCategory::kShapeMismatch,
          "model input " + ShapeString(x.shape()) + " does not match architecture");
  Require(params_.size() == kNumParams, ErrorCategory::kState, "model has no parameters");
  const std::size_t batch = x.dim(0), bins = a.n_bins;

  ForwardGraph g;
  g.batch = batch;
  for (const Tensor& p : params_) g.params.push_back(t.Input(p));
  auto P = [&](Param i) { return g.params[i]; };

  Rng drop_rng = MakeRng(o.dropout_seed, "lfads/dropout");
  Rng sample_rng = MakeRng(o.sample_seed, "lfads/posterior");
  auto dropout = [&](NodeId v) {
    if (o.dropout_prob <= 0) return v;
    const Tensor& val = t.Value(v);
    Tensor mask(val.shape());
    const double keep = 1.0 - o.dropout_prob;
    for (double& m : mask.data()) m = Uniform01(drop_rng) < keep ? 1.0 / keep : 0.0;
    return t.Mul(v, t.Constant(std::move(mask)));
  };
  auto sample = [&](NodeId mean, NodeId logvar) {
    if (o.mode == SampleMode::kPosteriorMean) return mean;
    Tensor eps(t.Value(mean).shape());
    std::normal_distribution<double> n(0.0, 1.0);
    for (double& v : eps.data()) v = n(sample_rng);
    const NodeId sd = t.Exp(t.Scale(logvar, 0.5));
    return t.Add(mean, t.Mul(sd, t.Constant(std::move(eps))));
  };
  auto affine = [&](NodeId in, Param w, Param b) {
    return t.AddRowVector(t.MatMul(in, P(w)), P(b));
  };
  auto encode = [&](NodeId input, Param base, std::size_t hid, bool reverse) {
    const NodeId proj = affine(input, base, static_cast<Param>(base + 1));
    NodeId h = t.Constant(Tensor({batch, hid}));
    std::vector<NodeId> states(bins);
    for (std::size_t k = 0; k < bins; ++k) {
      const std::size_t s = reverse ? bins - 1 - k : k;
      h = t.GruCell(t.SliceRows(proj, s * batch, batch), h, P(static_cast<Param>(base + 2)),
                    P(static_cast<Param>(base + 3)));
      states[s] = h;
    }
    return states;
  };

  const NodeId xin = dropout(t.Constant(ToTimeMajor(x)));

  // Initial-condition posterior Q(z | x) from the final encoder states.
  {
    const auto fwd = encode(xin, kIcFwdWih, a.enc_dim, false);
    const auto bwd = encode(xin, kIcBwdWih, a.enc_dim, true);
    const NodeId ends[] = {fwd[bins - 1], bwd[0]};
    const NodeId post = affine(dropout(t.ConcatCols(ends)), kIcPostW, kIcPostB);
    g.z_mean = t.SliceCols(post, 0, a.z_dim);
    g.z_logvar = t.Clamp(t.SliceCols(post, a.z_dim, a.z_dim), kLogvarMin, kLogvarMax);
    g.z = sample(g.z_mean, g.z_logvar);
  }

  NodeId gen_h = affine(g.z, kG0W, kG0B);
  NodeId f_prev = affine(gen_h, kFacW, kFacB);

  NodeId ci_proj{};
  NodeId con_h{};
  if (a.u_dim > 0) {
    const auto fwd = encode(xin, kCiFwdWih, a.enc_dim, false);
    const auto bwd = encode(xin, kCiBwdWih, a.enc_dim, true);
    const NodeId both[] = {t.ConcatRows(fwd), t.ConcatRows(bwd)};
    ci_proj = affine(dropout(t.ConcatCols(both)), kConWci, kConBih);
    con_h = t.Constant(Tensor({batch, a.con_dim}));
  }
  const NodeId no_input = t.Constant(Tensor({batch, 3 * a.gen_dim}));

  std::vector<NodeId> factors(bins);
  for (std::size_t s = 0; s < bins; ++s) {
    NodeId gen_in;
    if (a.u_dim > 0) {
      const NodeId cx = t.Add(t.SliceRows(ci_proj, s * batch, batch), t.MatMul(f_prev, P(kConWf)));
      con_h = t.GruCell(cx, con_h, P(kConWhh), P(kConBhh));
      const NodeId up = affine(con_h, kUPostW, kUPostB);
      const NodeId um = t.SliceCols(up, 0, a.u_dim);
      const NodeId ulv = t.Clamp(t.SliceCols(up, a.u_dim, a.u_dim), kLogvarMin, kLogvarMax);
      const NodeId uu = sample(um, ulv);
      g.u_mean.push_back(um);
      g.u_logvar.push_back(ulv);
      g.u.push_back(uu);
      gen_in = affine(uu, kGenWih, kGenBih);
    } else {
      gen_in = t.AddRowVector(no_input, P(kGenBih));
    }
    gen_h = t.GruCell(gen_in, gen_h, P(kGenWhh), P(kGenBhh));
    factors[s] = affine(dropout(gen_h), kFacW, kFacB);
    f_prev = factors[s];
  }
  g.factors = t.ConcatRows(factors);
  g.log_rates = affine(g.factors, kRateW, kRateB);
  return g;
}

LossGraph LfadsModel::BuildLoss(Tape& t, const ForwardGraph& fwd, const SpikeTensor& counts,
                                const MaskTensor& include, const HyperParams& hps,
                                double kl_ramp) const {
  const Architecture& a = arch_;
  const std::size_t batch = fwd.batch;
  Require(counts.rank() == 3 && counts.dim(0) == batch && counts.dim(1) == a.n_bins &&
              counts.dim(2) == a.n_neurons,
          ErrorCategory::kShapeMismatch, "counts " + ShapeString(counts.shape()) + " do not match");
  if (!include.empty()) RequireSameShape(counts.shape(), include.shape(), "loss include mask");

  const Tensor counts_tm = ToTimeMajorAs<std::int64_t, double>(counts);
  const MaskTensor include_tm = include.empty() ? MaskTensor{} : ToTimeMajorAs<std::uint8_t, std::uint8_t>(include);

  LossGraph l;
  l.n_included = CountIncluded(include, counts.size());
  const NodeId nll = t.PoissonNll(fwd.log_rates, counts_tm, include_tm);
  l.recon = t.Scale(nll, l.n_included ? 1.0 / static_cast<double>(l.n_included) : 0.0);

  // Penalties are per trial and are divided by the elements per trial so
  // they keep their usual relative weight against a per-element recon.
  const double per_element = 1.0 / static_cast<double>(a.n_bins * a.n_neurons);
  const double per_trial = per_element / static_cast<double>(batch);
  l.kl_ic = t.Scale(t.KlDiagGaussian(fwd.z_mean, fwd.z_logvar, 1.0),
                    hps.kl_ic_scale * kl_ramp * per_trial);
  if (a.u_dim > 0) {
    l.kl_co = t.Scale(t.KlDiagGaussian(t.ConcatRows(fwd.u_mean), t.ConcatRows(fwd.u_logvar), 1.0),
                      hps.kl_co_scale * kl_ramp * per_trial);
  } else {
    l.kl_co = t.Constant(Tensor({1}));
  }
  const double gen_n = static_cast<double>(params_[kGenWhh].size());
  l.l2 = t.Scale(t.SumSquares(fwd.params[kGenWhh]), hps.l2_gen_scale * 0.5 / gen_n * per_element);
  if (a.u_dim > 0) {
    const double con_n = static_cast<double>(params_[kConWhh].size());
    l.l2 = t.Add(l.l2, t.Scale(t.SumSquares(fwd.params[kConWhh]),
                               hps.l2_con_scale * 0.5 / con_n * per_element));
  }
  l.total = t.Add(t.Add(l.recon, l.kl_ic), t.Add(l.kl_co, l.l2));
  return l;
}

ModelOutput LfadsModel::RunForward(const Tensor& x, const ForwardOptions& opts) const {
  Tape tape;
  const ForwardGraph g = BuildForward(tape, x, opts);
  const std::size_t batch = g.batch, bins = arch_.n_bins, u = arch_.u_dim;
  ModelOutput out;
  Tensor rates_tm = tape.Value(g.log_rates);
  for (double& v : rates_tm.data()) v = std::exp(v);
  out.rates = FromTimeMajor(rates_tm, batch);
  out.factors = FromTimeMajor(tape.Value(g.factors), batch);
  out.posterior.z_mean = tape.Value(g.z_mean);
  out.posterior.z_logvar = tape.Value(g.z_logvar);
  out.z = tape.Value(g.z);
  out.posterior.u_mean = Tensor({batch, bins, u});
  out.posterior.u_logvar = Tensor({batch, bins, u});
  out.u = Tensor({batch, bins, u});
  for (std::size_t s = 0; s < g.u_mean.size(); ++s) {
    const Tensor& m = tape.Value(g.u_mean[s]);
    const Tensor& lv = tape.Value(g.u_logvar[s]);
    const Tensor& uu = tape.Value(g.u[s]);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t j = 0; j < u; ++j) {
        out.posterior.u_mean.at(b, s, j) = m.at(b, j);
        out.posterior.u_logvar.at(b, s, j) = lv.at(b, j);
        out.u.at(b, s, j) = uu.at(b, j);
      }
    }
  }
  return out;
}

LossBreakdown TotalLoss(const LfadsModel& model, const ModelOutput& out, const SpikeTensor& counts,
                        const MaskTensor& include, const HyperParams& hps, double kl_ramp) {
  const Architecture& a = model.arch();
  RequireSameShape(out.rates.shape(), counts.shape(), "total_loss counts");
  if (!include.empty()) RequireSameShape(counts.shape(), include.shape(), "total_loss mask");
  const std::size_t batch = counts.dim(0);
  LossBreakdown l;
  constexpr double kFloor = Tape::kRateFloor;
  double nll = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (!include.empty() && !include[i]) continue;
    const double lambda = std::max(out.rates[i], kFloor);
    const double k = static_cast<double>(counts[i]);
    nll += lambda - k * std::log(lambda) + std::lgamma(k + 1.0);
    ++l.n_included;
  }
  l.recon = l.n_included ? nll / static_cast<double>(l.n_included) : 0.0;
  const double per_element = 1.0 / static_cast<double>(a.n_bins * a.n_neurons);
  const double per_trial = per_element / static_cast<double>(batch);
  l.kl_ic = hps.kl_ic_scale * kl_ramp * per_trial *
            KlGaussian(out.posterior.z_mean.data(), out.posterior.z_logvar.data(), 1.0);
  l.kl_co = a.u_dim == 0 ? 0.0
                         : hps.kl_co_scale * kl_ramp * per_trial *
                               KlGaussian(out.posterior.u_mean.data(), out.posterior.u_logvar.data(), 1.0);
  auto sq = [](const Tensor& w) {
    double s = 0;
    for (double v : w.data()) s += v * v;
    return s / static_cast<double>(w.size());
  };
  l.l2 = hps.l2_gen_scale * 0.5 * sq(model.params()[kGenWhh]) * per_element;
  if (a.u_dim > 0) l.l2 += hps.l2_con_scale * 0.5 * sq(model.params()[kConWhh]) * per_element;
  l.total = l.recon + l.kl_ic + l.kl_co + l.l2;
  return l;
}

LossAndGrad ComputeLossAndGrad(const LfadsModel& model, const Tensor& x, const SpikeTensor& counts,
                               const MaskTensor& include, const HyperParams& hps, double kl_ramp,
                               const ForwardOptions& opts) {
  Tape tape;
  const ForwardGraph fwd = model.BuildForward(tape, x, opts);
  const LossGraph lg = model.BuildLoss(tape, fwd, counts, include, hps, kl_ramp);
  LossAndGrad out;
  out.loss.recon = tape.Value(lg.recon)[0];
  out.loss.kl_ic = tape.Value(lg.kl_ic)[0];
  out.loss.kl_co = tape.Value(lg.kl_co)[0];
  out.loss.l2 = tape.Value(lg.l2)[0];
  out.loss.total = tape.Value(lg.total)[0];
  out.loss.n_included = lg.n_included;
  tape.Backward(lg.total);
  out.grads.reserve(fwd.params.size());
  for (NodeId p : fwd.params) out.grads.push_back(tape.Grad(p));
  return out;
}

}  // namespace latentdyn
