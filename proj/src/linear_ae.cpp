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

#include "latentdyn/linear_ae.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "latentdyn/error.hpp"
#include "latentdyn/masking.hpp"
#include "latentdyn/rng.hpp"

namespace latentdyn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMat> View(const Tensor& t) {
  return {t.data().data(), static_cast<Eigen::Index>(t.dim(0)), static_cast<Eigen::Index>(t.dim(1))};
}

}  // namespace

double LinearAeLoss(const Tensor& u, const Tensor& x, const Tensor& target) {
  RequireSameShape(x.shape(), target.shape(), "linear ae loss");
  const RowMat diff = View(x) * View(u).transpose() - View(target);
  return diff.squaredNorm() / static_cast<double>(x.dim(0));
}

double MeanAbsDiagMinusOne(const Tensor& u) {
  double s = 0;
  for (std::size_t i = 0; i < u.dim(0); ++i) s += std::abs(u.at(i, i) - 1.0);
  return s / static_cast<double>(u.dim(0));
}

double MaxAbsDiag(const Tensor& u) {
  double m = 0;
  for (std::size_t i = 0; i < u.dim(0); ++i) m = std::max(m, std::abs(u.at(i, i)));
  return m;
}

double OracleTrueLoss(const LinearDemoDataset& data) {
  const std::size_t d = data.readout.dim(1);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(View(data.train.y_true)), Eigen::ComputeThinV);
  const Eigen::MatrixXd v = svd.matrixV().leftCols(static_cast<Eigen::Index>(d));
  const RowMat proj = v * v.transpose();
  const RowMat diff = View(data.valid.y) * proj - View(data.valid.y_true);
  return diff.squaredNorm() / static_cast<double>(data.valid.y.dim(0));
}

LinearAeState TrainLinearAe(const LinearDemoDataset& data, const LinearAeOptions& opts) {
  Require(opts.steps >= 1, ErrorCategory::kInvalidArgument, "steps must be >= 1");
  Require(opts.learning_rate > 0, ErrorCategory::kInvalidArgument, "learning_rate must be > 0");
  Require(opts.record_every >= 1, ErrorCategory::kInvalidArgument, "record_every must be >= 1");
  if (opts.cd_enabled) {
    Require(opts.keep_ratio > 0 && opts.keep_ratio < 1, ErrorCategory::kInvalidArgument,
            "keep_ratio must be in (0, 1)");
  }
  const Tensor& y = data.train.y;
  const std::size_t n = y.dim(0), m = y.dim(1);
  LinearAeState st;
  st.u = Tensor({m, m});
  if (opts.random_init) {
    Rng rng = MakeRng(opts.seed, "linear_ae/init");
    std::normal_distribution<double> nd(0.0, 1.0 / std::sqrt(static_cast<double>(m)));
    for (double& v : st.u.data()) v = nd(rng);
  }
  Eigen::Map<RowMat> u(st.u.data().data(), static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  const auto yv = View(y);

  auto record = [&](std::size_t step) {
    st.curve.push_back({step, LinearAeLoss(st.u, y, y), LinearAeLoss(st.u, data.valid.y, data.valid.y),
                        LinearAeLoss(st.u, data.valid.y, data.valid.y_true)});
  };
  record(0);
  st.max_abs_diag_seen = MaxAbsDiag(st.u);

  RowMat x(n, m), resid(n, m);
  const double scale = 2.0 / static_cast<double>(n);
  for (std::size_t step = 1; step <= opts.steps; ++step) {
    if (opts.cd_enabled) {
      const MaskPair masks = MakeCdMasks({n, m}, opts.keep_ratio, StreamSeed(opts.seed, "linear_ae/cd", step));
      for (std::size_t i = 0; i < n * m; ++i) {
        x.data()[i] = masks.input_keep[i] ? y[i] / opts.keep_ratio : 0.0;
      }
      resid.noalias() = x * u.transpose();
      resid -= yv;
      for (std::size_t i = 0; i < n * m; ++i) {
        if (!masks.grad_keep[i]) resid.data()[i] = 0.0;
      }
      u.noalias() -= opts.learning_rate * scale * (resid.transpose() * x);
    } else {
      resid.noalias() = yv * u.transpose();
      resid -= yv;
      u.noalias() -= opts.learning_rate * scale * (resid.transpose() * yv);
    }
    if (!u.allFinite()) throw DivergenceError("linear autoencoder diverged at step " + std::to_string(step));
    st.step = step;
    st.max_abs_diag_seen = std::max(st.max_abs_diag_seen, MaxAbsDiag(st.u));
    if (step % opts.record_every == 0 || step == opts.steps) record(step);
  }
  return st;
}

}  // namespace latentdyn
