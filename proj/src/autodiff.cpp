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

#include "latentdyn/autodiff.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "latentdyn/rng.hpp"

namespace latentdyn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

std::size_t Rows(const Tensor& t) { return t.rank() == 2 ? t.dim(0) : 1; }
std::size_t Cols(const Tensor& t) { return t.rank() == 2 ? t.dim(1) : t.size(); }

ConstMapMat AsMat(const Tensor& t) {
  return ConstMapMat(t.data().data(), static_cast<Eigen::Index>(Rows(t)),
                     static_cast<Eigen::Index>(Cols(t)));
}
MapMat AsMat(Tensor& t) {
  return MapMat(t.data().data(), static_cast<Eigen::Index>(Rows(t)),
                static_cast<Eigen::Index>(Cols(t)));
}

double Sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void CheckFinite(const Tensor& t, const char* op) {
  Require(AllFinite(t.data()), ErrorCategory::kNonFinite,
          std::string("non-finite value produced by ") + op);
}

template <typename F>
Tensor MapUnary(const Tensor& a, F f) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

}  // namespace

NodeId Tape::Push(Node node) {
  Require(!consumed_, ErrorCategory::kState, "tape already consumed");
  nodes_.push_back(std::move(node));
  return NodeId{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

const Tape::Node& Tape::At(NodeId id) const {
  Require(id.index < nodes_.size(), ErrorCategory::kInvalidArgument, "unknown node id");
  return nodes_[id.index];
}

const Tensor& Tape::Value(NodeId id) const { return At(id).value; }

Tensor& Tape::GradBuffer(std::uint32_t index) {
  Node& n = nodes_[index];
  if (n.grad.shape() != n.value.shape()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

const Tensor& Tape::Grad(NodeId id) {
  At(id);
  return GradBuffer(id.index);
}

NodeId Tape::Input(Tensor value) {
  CheckFinite(value, "input");
  Node n;
  n.requires_grad = true;
  n.value = std::move(value);
  return Push(std::move(n));
}

NodeId Tape::Constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  return Push(std::move(n));
}

NodeId Tape::MatMul(NodeId a, NodeId b) {
  const Tensor& av = At(a).value;
  const Tensor& bv = At(b).value;
  Require(av.rank() == 2 && bv.rank() == 2 && av.dim(1) == bv.dim(0),
          ErrorCategory::kShapeMismatch,
          "matmul " + ShapeString(av.shape()) + " x " + ShapeString(bv.shape()));
  Node n;
  n.op = Op::kMatMul;
  n.inputs = {a.index, b.index};
  n.requires_grad = At(a).requires_grad || At(b).requires_grad;
  n.value = Tensor({av.dim(0), bv.dim(1)});
  AsMat(n.value).noalias() = AsMat(av) * AsMat(bv);
  CheckFinite(n.value, "matmul");
  return Push(std::move(n));
}

NodeId Tape::Add(NodeId a, NodeId b) {
  const Tensor& av = At(a).value;
  const Tensor& bv = At(b).value;
  RequireSameShape(av.shape(), bv.shape(), "add");
  Node n;
  n.op = Op::kAdd;
  n.inputs = {a.index, b.index};
  n.requires_grad = At(a).requires_grad || At(b).requires_grad;
  n.value = av;
  for (std::size_t i = 0; i < bv.size(); ++i) n.value[i] += bv[i];
  CheckFinite(n.value, "add");
  return Push(std::move(n));
}

NodeId Tape::Sub(NodeId a, NodeId b) {
  const Tensor& av = At(a).value;
  const Tensor& bv = At(b).value;
  RequireSameShape(av.shape(), bv.shape(), "sub");
  Node n;
  n.op = Op::kSub;
  n.inputs = {a.index, b.index};
  n.requires_grad = At(a).requires_grad || At(b).requires_grad;
  n.value = av;
  for (std::size_t i = 0; i < bv.size(); ++i) n.value[i] -= bv[i];
  CheckFinite(n.value, "sub");
  return Push(std::move(n));
}

NodeId Tape::Mul(NodeId a, NodeId b) {
  const Tensor& av = At(a).value;
  const Tensor& bv = At(b).value;
  RequireSameShape(av.shape(), bv.shape(), "mul");
  Node n;
  n.op = Op::kMul;
  n.inputs = {a.index, b.index};
  n.requires_grad = At(a).requires_grad || At(b).requires_grad;
  n.value = av;
  for (std::size_t i = 0; i < bv.size(); ++i) n.value[i] *= bv[i];
  CheckFinite(n.value, "mul");
  return Push(std::move(n));
}

NodeId Tape::AddRowVector(NodeId a, NodeId bias) {
  const Tensor& av = At(a).value;
  const Tensor& bv = At(bias).value;
  Require(bv.size() == Cols(av), ErrorCategory::kShapeMismatch,
          "bias " + ShapeString(bv.shape()) + " for " + ShapeString(av.shape()));
  Node n;
  n.op = Op::kAddRowVector;
  n.inputs = {a.index, bias.index};
  n.requires_grad = At(a).requires_grad || At(bias).requires_grad;
  n.value = av;
  AsMat(n.value).rowwise() += AsMat(bv).row(0);
  CheckFinite(n.value, "add_row_vector");
  return Push(std::move(n));
}

NodeId Tape::Scale(NodeId a, double s) {
  Node n;
  n.op = Op::kScale;
  n.inputs = {a.index};
  n.requires_grad = At(a).requires_grad;
  n.scalar = s;
  n.value = MapUnary(At(a).value, [s](double x) { return s * x; });
  CheckFinite(n.value, "scale");
  return Push(std::move(n));
}

NodeId Tape::Square(NodeId a) {
  Node n;
  n.op = Op::kSquare;
  n.inputs = {a.index};
  n.requires_grad = At(a).requires_grad;
  n.value = MapUnary(At(a).value, [](double x) { return x * x; });
  CheckFinite(n.value, "square");
  return Push(std::move(n));
}

NodeId Tape::Exp(NodeId a) {
  Node n;
  n.op = Op::kExp;
  n.inputs = {a.index};
  n.requires_grad = At(a).requires_grad;
  n.value = MapUnary(At(a).value, [](double x) { return std::exp(x); });
  CheckFinite(n.value, "exp");
  return Push(std::move(n));
}

NodeId Tape::Tanh(NodeId a) {
  Node n;
  n.op = Op::kTanh;
  n.inputs = {a.index};
  n.requires_grad = At(a).requires_grad;
  n.value = MapUnary(At(a).value, [](double x) { return std::tanh(x); });
  return Push(std::move(n));
}

NodeId Tape::Sigmoid(NodeId a) {
  Node n;
  n.op = Op::kSigmoid;
  n.inputs = {a.index};
  n.requires_grad = At(a).requires_grad;
  n.value = MapUnary(At(a).value, [](double x) { return latentdyn::Sigmoid(x); });
  return Push(std::move(n));
}

NodeId Tape::Softplus(NodeId a) {
  Node n;
  n.op = Op::kSoftplus;
  n.inputs = {a.index};
  n.requires_grad = At(a).requires_grad;
  n.value = MapUnary(At(a).value, [](double x) {
    return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
  });
  return Push(std::move(n));
}

NodeId Tape::Clamp(NodeId a, double lo, double hi) {
  Require(lo <= hi, ErrorCategory::kInvalidArgument, "clamp bounds reversed");
  Node n;
  n.op = Op::kClamp;
  n.inputs = {a.index};
  n.requires_grad = At(a).requires_grad;
  n.scalar = lo;
  n.scalar2 = hi;
  n.value = MapUnary(At(a).value, [lo, hi](double x) { return std::clamp(x, lo, hi); });
  return Push(std::move(n));
}

NodeId Tape::SliceCols(NodeId a, std::size_t start, std::size_t count) {
  const Tensor& av = At(a).value;
  Require(av.rank() == 2 && start + count <= av.dim(1), ErrorCategory::kShapeMismatch,
          "slice_cols out of range for " + ShapeString(av.shape()));
  Node n;
  n.op = Op::kSliceCols;
  n.inputs = {a.index};
  n.requires_grad = At(a).requires_grad;
  n.offset = start;
  n.value = Tensor({av.dim(0), count});
  AsMat(n.value) = AsMat(av).middleCols(static_cast<Eigen::Index>(start),
                                        static_cast<Eigen::Index>(count));
  return Push(std::move(n));
}

NodeId Tape::SliceRows(NodeId a, std::size_t start, std::size_t count) {
  const Tensor& av = At(a).value;
  Require(av.rank() == 2 && start + count <= av.dim(0), ErrorCategory::kShapeMismatch,
          "slice_rows out of range for " + ShapeString(av.shape()));
  Node n;
  n.op = Op::kSliceRows;
  n.inputs = {a.index};
  n.requires_grad = At(a).requires_grad;
  n.offset = start;
  const std::size_t c = av.dim(1);
  n.value = Tensor({count, c},
                   std::vector<double>(av.data().begin() + start * c,
                                       av.data().begin() + (start + count) * c));
  return Push(std::move(n));
}

NodeId Tape::ConcatCols(std::span<const NodeId> parts) {
  Require(!parts.empty(), ErrorCategory::kInvalidArgument, "concat of nothing");
  const std::size_t rows = At(parts[0]).value.dim(0);
  std::size_t cols = 0;
  Node n;
  n.op = Op::kConcatCols;
  for (NodeId p : parts) {
    const Tensor& v = At(p).value;
    Require(v.rank() == 2 && v.dim(0) == rows, ErrorCategory::kShapeMismatch,
            "concat_cols row mismatch");
    cols += v.dim(1);
    n.inputs.push_back(p.index);
    n.requires_grad = n.requires_grad || At(p).requires_grad;
  }
  n.value = Tensor({rows, cols});
  auto out = AsMat(n.value);
  Eigen::Index c0 = 0;
  for (NodeId p : parts) {
    const Tensor& v = At(p).value;
    out.middleCols(c0, static_cast<Eigen::Index>(v.dim(1))) = AsMat(v);
    c0 += static_cast<Eigen::Index>(v.dim(1));
  }
  return Push(std::move(n));
}

NodeId Tape::ConcatRows(std::span<const NodeId> parts) {
  Require(!parts.empty(), ErrorCategory::kInvalidArgument, "concat of nothing");
  const std::size_t cols = At(parts[0]).value.dim(1);
  std::size_t rows = 0;
  Node n;
  n.op = Op::kConcatRows;
  for (NodeId p : parts) {
    const Tensor& v = At(p).value;
    Require(v.rank() == 2 && v.dim(1) == cols, ErrorCategory::kShapeMismatch,
            "concat_rows column mismatch");
    rows += v.dim(0);
    n.inputs.push_back(p.index);
    n.requires_grad = n.requires_grad || At(p).requires_grad;
  }
  std::vector<double> data;
  data.reserve(rows * cols);
  for (NodeId p : parts) {
    const auto d = At(p).value.data();
    data.insert(data.end(), d.begin(), d.end());
  }
  n.value = Tensor({rows, cols}, std::move(data));
  return Push(std::move(n));
}

NodeId Tape::Sum(NodeId a) {
  Node n;
  n.op = Op::kSum;
  n.inputs = {a.index};
  n.requires_grad = At(a).requires_grad;
  double s = 0;
  for (double x : At(a).value.data()) s += x;
  n.value = Tensor({1}, {s});
  return Push(std::move(n));
}

NodeId Tape::SumSquares(NodeId a) {
  Node n;
  n.op = Op::kSumSquares;
  n.inputs = {a.index};
  n.requires_grad = At(a).requires_grad;
  double s = 0;
  for (double x : At(a).value.data()) s += x * x;
  n.value = Tensor({1}, {s});
  CheckFinite(n.value, "sum_squares");
  return Push(std::move(n));
}

NodeId Tape::GruCell(NodeId x_proj, NodeId h, NodeId w_hh, NodeId b_hh) {
  const Tensor& xv = At(x_proj).value;
  const Tensor& hv = At(h).value;
  const Tensor& wv = At(w_hh).value;
  const Tensor& bv = At(b_hh).value;
  Require(hv.rank() == 2, ErrorCategory::kShapeMismatch, "gru state must be rank 2");
  const std::size_t batch = hv.dim(0);
  const std::size_t hid = hv.dim(1);
  Require(xv.rank() == 2 && xv.dim(0) == batch && xv.dim(1) == 3 * hid &&
              wv.rank() == 2 && wv.dim(0) == hid && wv.dim(1) == 3 * hid &&
              bv.size() == 3 * hid,
          ErrorCategory::kShapeMismatch,
          "gru_cell shapes x" + ShapeString(xv.shape()) + " h" + ShapeString(hv.shape()) +
              " w" + ShapeString(wv.shape()) + " b" + ShapeString(bv.shape()));

  Tensor a({batch, 3 * hid});
  AsMat(a).noalias() = AsMat(hv) * AsMat(wv);
  AsMat(a).rowwise() += AsMat(bv).row(0);

  Tensor r({batch, hid}), z({batch, hid}), cand({batch, hid}), out({batch, hid});
  for (std::size_t b = 0; b < batch; ++b) {
    const double* xr = &xv.data()[b * 3 * hid];
    const double* ar = &a.data()[b * 3 * hid];
    for (std::size_t j = 0; j < hid; ++j) {
      const double rj = latentdyn::Sigmoid(xr[j] + ar[j]);
      const double zj = latentdyn::Sigmoid(xr[hid + j] + ar[hid + j]);
      const double nj = std::tanh(xr[2 * hid + j] + rj * ar[2 * hid + j]);
      r.at(b, j) = rj;
      z.at(b, j) = zj;
      cand.at(b, j) = nj;
      out.at(b, j) = (1.0 - zj) * nj + zj * hv.at(b, j);
    }
  }
  CheckFinite(out, "gru_cell");

  Node n;
  n.op = Op::kGruCell;
  n.inputs = {x_proj.index, h.index, w_hh.index, b_hh.index};
  n.requires_grad = At(x_proj).requires_grad || At(h).requires_grad ||
                    At(w_hh).requires_grad || At(b_hh).requires_grad;
  n.value = std::move(out);
  n.cache = {std::move(a), std::move(r), std::move(z), std::move(cand)};
  return Push(std::move(n));
}

NodeId Tape::PoissonNll(NodeId log_rates, const Tensor& counts, const MaskTensor& include) {
  const Tensor& lv = At(log_rates).value;
  RequireSameShape(lv.shape(), counts.shape(), "poisson_nll counts");
  if (!include.empty()) RequireSameShape(lv.shape(), include.shape(), "poisson_nll mask");
  const double log_floor = std::log(kRateFloor);
  // cache[0] holds d(nll)/d(log_rate) per element.
  Tensor dl(lv.shape());
  double total = 0;
  for (std::size_t i = 0; i < lv.size(); ++i) {
    if (!include.empty() && !include[i]) continue;
    const double k = counts[i];
    if (lv[i] < log_floor) {
      total += kRateFloor - k * log_floor + std::lgamma(k + 1.0);
    } else {
      const double rate = std::exp(lv[i]);
      total += rate - k * lv[i] + std::lgamma(k + 1.0);
      dl[i] = rate - k;
    }
  }
  Node n;
  n.op = Op::kPoissonNll;
  n.inputs = {log_rates.index};
  n.requires_grad = At(log_rates).requires_grad;
  n.value = Tensor({1}, {total});
  CheckFinite(n.value, "poisson_nll");
  n.cache = {std::move(dl)};
  return Push(std::move(n));
}

NodeId Tape::KlDiagGaussian(NodeId mean, NodeId logvar, double prior_var) {
  const Tensor& mv = At(mean).value;
  const Tensor& lv = At(logvar).value;
  RequireSameShape(mv.shape(), lv.shape(), "kl mean/logvar");
  Require(prior_var > 0, ErrorCategory::kInvalidArgument, "prior variance must be positive");
  const double log_pv = std::log(prior_var);
  double total = 0;
  for (std::size_t i = 0; i < mv.size(); ++i) {
    total += 0.5 * (std::exp(lv[i]) / prior_var + mv[i] * mv[i] / prior_var - 1.0 -
                    lv[i] + log_pv);
  }
  Node n;
  n.op = Op::kKlDiagGaussian;
  n.inputs = {mean.index, logvar.index};
  n.requires_grad = At(mean).requires_grad || At(logvar).requires_grad;
  n.scalar = prior_var;
  n.value = Tensor({1}, {total});
  CheckFinite(n.value, "kl_diag_gaussian");
  return Push(std::move(n));
}

NodeId Tape::MaskGrad(NodeId a, const MaskTensor& mask) {
  RequireSameShape(At(a).value.shape(), mask.shape(), "mask_grad");
  Node n;
  n.op = Op::kMaskGrad;
  n.inputs = {a.index};
  n.requires_grad = At(a).requires_grad;
  n.value = At(a).value;
  n.mask = mask;
  return Push(std::move(n));
}

void Tape::Backward(NodeId scalar_output) {
  Require(At(scalar_output).value.size() == 1, ErrorCategory::kShapeMismatch,
          "implicit seed requires a scalar output");
  Backward(scalar_output, Tensor(At(scalar_output).value.shape(), 1.0));
}

void Tape::Backward(NodeId output, const Tensor& seed) {
  const NodeId outs[] = {output};
  const Tensor seeds[] = {seed};
  Backward(outs, seeds);
}

void Tape::Backward(std::span<const NodeId> outputs, std::span<const Tensor> seeds) {
  Require(!consumed_, ErrorCategory::kState, "tape already consumed");
  Require(outputs.size() == seeds.size(), ErrorCategory::kInvalidArgument,
          "one seed per output required");
  consumed_ = true;
  std::uint32_t last = 0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const Node& n = At(outputs[i]);
    RequireSameShape(n.value.shape(), seeds[i].shape(), "backward seed");
    Tensor& g = GradBuffer(outputs[i].index);
    for (std::size_t k = 0; k < g.size(); ++k) g[k] += seeds[i][k];
    last = std::max(last, outputs[i].index);
  }
  for (std::uint32_t i = last + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.op == Op::kLeaf || !n.requires_grad) continue;
    if (n.grad.shape() != n.value.shape()) continue;  // never reached
    BackwardNode(i);
  }
}

void Tape::BackwardNode(std::uint32_t index) {
  // Copy out what we need: GradBuffer may reallocate other nodes' grads but
  // nodes_ itself is not resized during the backward pass.
  Node& n = nodes_[index];
  const Tensor& g = n.grad;
  auto wants = [this](std::uint32_t i) { return nodes_[i].requires_grad; };

  switch (n.op) {
    case Op::kLeaf:
      break;
    case Op::kMatMul: {
      const std::uint32_t a = n.inputs[0], b = n.inputs[1];
      if (wants(a)) AsMat(GradBuffer(a)).noalias() += AsMat(g) * AsMat(nodes_[b].value).transpose();
      if (wants(b)) AsMat(GradBuffer(b)).noalias() += AsMat(nodes_[a].value).transpose() * AsMat(g);
      break;
    }
    case Op::kAdd:
    case Op::kSub: {
      const double sign_b = n.op == Op::kAdd ? 1.0 : -1.0;
      if (wants(n.inputs[0])) {
        Tensor& ga = GradBuffer(n.inputs[0]);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (wants(n.inputs[1])) {
        Tensor& gb = GradBuffer(n.inputs[1]);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += sign_b * g[i];
      }
      break;
    }
    case Op::kMul: {
      const std::uint32_t a = n.inputs[0], b = n.inputs[1];
      if (wants(a)) {
        Tensor& ga = GradBuffer(a);
        const Tensor& bv = nodes_[b].value;
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
      }
      if (wants(b)) {
        Tensor& gb = GradBuffer(b);
        const Tensor& av = nodes_[a].value;
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
      }
      break;
    }
    case Op::kAddRowVector: {
      const std::uint32_t a = n.inputs[0], b = n.inputs[1];
      if (wants(a)) {
        Tensor& ga = GradBuffer(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (wants(b)) {
        Tensor& gb = GradBuffer(b);
        AsMat(gb).row(0) += AsMat(g).colwise().sum();
      }
      break;
    }
    case Op::kScale: {
      Tensor& ga = GradBuffer(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += n.scalar * g[i];
      break;
    }
    case Op::kSquare: {
      Tensor& ga = GradBuffer(n.inputs[0]);
      const Tensor& av = nodes_[n.inputs[0]].value;
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += 2.0 * av[i] * g[i];
      break;
    }
    case Op::kExp: {
      Tensor& ga = GradBuffer(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += n.value[i] * g[i];
      break;
    }
    case Op::kTanh: {
      Tensor& ga = GradBuffer(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += (1.0 - n.value[i] * n.value[i]) * g[i];
      break;
    }
    case Op::kSigmoid: {
      Tensor& ga = GradBuffer(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += n.value[i] * (1.0 - n.value[i]) * g[i];
      break;
    }
    case Op::kSoftplus: {
      Tensor& ga = GradBuffer(n.inputs[0]);
      const Tensor& av = nodes_[n.inputs[0]].value;
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += latentdyn::Sigmoid(av[i]) * g[i];
      break;
    }
    case Op::kClamp: {
      Tensor& ga = GradBuffer(n.inputs[0]);
      const Tensor& av = nodes_[n.inputs[0]].value;
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (av[i] >= n.scalar && av[i] <= n.scalar2) ga[i] += g[i];
      }
      break;
    }
    case Op::kSliceCols: {
      Tensor& ga = GradBuffer(n.inputs[0]);
      AsMat(ga).middleCols(static_cast<Eigen::Index>(n.offset),
                           static_cast<Eigen::Index>(n.value.dim(1))) += AsMat(g);
      break;
    }
    case Op::kSliceRows: {
      Tensor& ga = GradBuffer(n.inputs[0]);
      const std::size_t base = n.offset * n.value.dim(1);
      for (std::size_t i = 0; i < g.size(); ++i) ga[base + i] += g[i];
      break;
    }
    case Op::kConcatCols: {
      Eigen::Index c0 = 0;
      for (std::uint32_t in : n.inputs) {
        const auto w = static_cast<Eigen::Index>(nodes_[in].value.dim(1));
        if (wants(in)) AsMat(GradBuffer(in)) += AsMat(g).middleCols(c0, w);
        c0 += w;
      }
      break;
    }
    case Op::kConcatRows: {
      std::size_t off = 0;
      for (std::uint32_t in : n.inputs) {
        const std::size_t len = nodes_[in].value.size();
        if (wants(in)) {
          Tensor& gi = GradBuffer(in);
          for (std::size_t i = 0; i < len; ++i) gi[i] += g[off + i];
        }
        off += len;
      }
      break;
    }
    case Op::kSum: {
      Tensor& ga = GradBuffer(n.inputs[0]);
      for (double& x : ga.data()) x += g[0];
      break;
    }
    case Op::kSumSquares: {
      Tensor& ga = GradBuffer(n.inputs[0]);
      const Tensor& av = nodes_[n.inputs[0]].value;
      for (std::size_t i = 0; i < av.size(); ++i) ga[i] += 2.0 * av[i] * g[0];
      break;
    }
    case Op::kGruCell: {
      const std::uint32_t xi = n.inputs[0], hi = n.inputs[1], wi = n.inputs[2], bi = n.inputs[3];
      const Tensor& hv = nodes_[hi].value;
      const Tensor& a = n.cache[0];
      const Tensor& r = n.cache[1];
      const Tensor& z = n.cache[2];
      const Tensor& cand = n.cache[3];
      const std::size_t batch = hv.dim(0), hid = hv.dim(1);
      Tensor dx({batch, 3 * hid});  // grad w.r.t. pre-activations = grad w.r.t. x_proj
      Tensor da({batch, 3 * hid});  // grad w.r.t. h W + b
      Tensor dh_direct({batch, hid});
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t j = 0; j < hid; ++j) {
          const double gj = g.at(b, j);
          const double zj = z.at(b, j), rj = r.at(b, j), nj = cand.at(b, j);
          const double an = a.at(b, 2 * hid + j);
          const double dz = gj * (hv.at(b, j) - nj);
          const double dpre_n = gj * (1.0 - zj) * (1.0 - nj * nj);
          const double dpre_r = dpre_n * an * rj * (1.0 - rj);
          const double dpre_z = dz * zj * (1.0 - zj);
          dx.at(b, j) = dpre_r;
          dx.at(b, hid + j) = dpre_z;
          dx.at(b, 2 * hid + j) = dpre_n;
          da.at(b, j) = dpre_r;
          da.at(b, hid + j) = dpre_z;
          da.at(b, 2 * hid + j) = dpre_n * rj;
          dh_direct.at(b, j) = gj * zj;
        }
      }
      if (wants(xi)) {
        Tensor& gx = GradBuffer(xi);
        for (std::size_t i = 0; i < dx.size(); ++i) gx[i] += dx[i];
      }
      if (wants(hi)) {
        Tensor& gh = GradBuffer(hi);
        AsMat(gh) += AsMat(dh_direct);
        AsMat(gh).noalias() += AsMat(da) * AsMat(nodes_[wi].value).transpose();
      }
      if (wants(wi)) AsMat(GradBuffer(wi)).noalias() += AsMat(hv).transpose() * AsMat(da);
      if (wants(bi)) AsMat(GradBuffer(bi)).row(0) += AsMat(da).colwise().sum();
      break;
    }
    case Op::kPoissonNll: {
      Tensor& ga = GradBuffer(n.inputs[0]);
      const Tensor& dl = n.cache[0];
      for (std::size_t i = 0; i < dl.size(); ++i) ga[i] += g[0] * dl[i];
      break;
    }
    case Op::kKlDiagGaussian: {
      const std::uint32_t mi = n.inputs[0], li = n.inputs[1];
      const double pv = n.scalar;
      if (wants(mi)) {
        Tensor& gm = GradBuffer(mi);
        const Tensor& mv = nodes_[mi].value;
        for (std::size_t i = 0; i < mv.size(); ++i) gm[i] += g[0] * mv[i] / pv;
      }
      if (wants(li)) {
        Tensor& gl = GradBuffer(li);
        const Tensor& lv = nodes_[li].value;
        for (std::size_t i = 0; i < lv.size(); ++i) gl[i] += g[0] * 0.5 * (std::exp(lv[i]) / pv - 1.0);
      }
      break;
    }
    case Op::kMaskGrad: {
      Tensor& ga = GradBuffer(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (n.mask[i]) ga[i] += g[i];
      }
      break;
    }
  }
}

double EvaluateGraph(const GraphFn& graph, std::span<const Tensor> inputs) {
  Tape tape;
  std::vector<NodeId> ids;
  ids.reserve(inputs.size());
  for (const Tensor& t : inputs) ids.push_back(tape.Input(t));
  const NodeId out = graph(tape, ids);
  const Tensor& v = tape.Value(out);
  Require(v.size() == 1, ErrorCategory::kShapeMismatch, "graph output must be scalar");
  return v[0];
}

std::vector<Tensor> GraphGradients(const GraphFn& graph, std::span<const Tensor> inputs) {
  Tape tape;
  std::vector<NodeId> ids;
  ids.reserve(inputs.size());
  for (const Tensor& t : inputs) ids.push_back(tape.Input(t));
  const NodeId out = graph(tape, ids);
  tape.Backward(out);
  std::vector<Tensor> grads;
  grads.reserve(ids.size());
  for (NodeId id : ids) grads.push_back(tape.Grad(id));
  return grads;
}

double GradCheck(const GraphFn& graph, std::span<const Tensor> inputs,
                 std::size_t n_probes, double fd_step, std::uint64_t seed) {
  Require(n_probes >= 1, ErrorCategory::kInvalidArgument, "n_probes must be >= 1");
  Require(fd_step > 0, ErrorCategory::kInvalidArgument, "fd_step must be positive");
  const std::vector<Tensor> grads = GraphGradients(graph, inputs);

  std::size_t total = 0;
  for (const Tensor& t : inputs) total += t.size();
  Require(total > 0, ErrorCategory::kInvalidArgument, "graph has no input coordinates");

  std::vector<Tensor> probe(inputs.begin(), inputs.end());
  Rng rng = MakeRng(seed, "grad_check");
  double worst = 0.0;
  for (std::size_t p = 0; p < n_probes; ++p) {
    std::size_t flat = static_cast<std::size_t>(Uniform01(rng) * static_cast<double>(total));
    std::size_t which = 0;
    while (flat >= probe[which].size()) flat -= probe[which++].size();
    const double orig = probe[which][flat];
    probe[which][flat] = orig + fd_step;
    const double up = EvaluateGraph(graph, probe);
    probe[which][flat] = orig - fd_step;
    const double down = EvaluateGraph(graph, probe);
    probe[which][flat] = orig;
    const double fd = (up - down) / (2.0 * fd_step);
    const double an = grads[which][flat];
    const double denom = std::max({std::abs(an), std::abs(fd), 1e-8});
    worst = std::max(worst, std::abs(an - fd) / denom);
  }
  return worst;
}

}  // namespace latentdyn
