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
#include <functional>
#include <span>
#include <vector>

#include "latentdyn/tensor.hpp"

namespace latentdyn {

struct NodeId {
  std::uint32_t index = 0;
  friend bool operator==(NodeId, NodeId) = default;
};

// Records primitive ops on rank-1/rank-2 tensors in execution order and
// replays them in reverse to accumulate gradients. Single use: Backward may
// be called once. Rank-1 tensors act as row vectors where broadcasting is
// needed (biases); scalar results have shape [1].
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  NodeId Input(Tensor value);     // differentiable leaf
  NodeId Constant(Tensor value);  // leaf without gradient

  NodeId MatMul(NodeId a, NodeId b);
  NodeId Add(NodeId a, NodeId b);
  NodeId Sub(NodeId a, NodeId b);
  NodeId Mul(NodeId a, NodeId b);
  NodeId AddRowVector(NodeId a, NodeId bias);
  NodeId Scale(NodeId a, double s);
  NodeId Square(NodeId a);
  NodeId Exp(NodeId a);
  NodeId Tanh(NodeId a);
  NodeId Sigmoid(NodeId a);
  NodeId Softplus(NodeId a);
  NodeId Clamp(NodeId a, double lo, double hi);
  NodeId SliceCols(NodeId a, std::size_t start, std::size_t count);
  NodeId SliceRows(NodeId a, std::size_t start, std::size_t count);
  NodeId ConcatCols(std::span<const NodeId> parts);
  NodeId ConcatRows(std::span<const NodeId> parts);
  NodeId Sum(NodeId a);
  NodeId SumSquares(NodeId a);

  // h' = (1 - z) * n + z * h with
  //   r = sigmoid(xr + (h W + b)r), z = sigmoid(xz + (h W + b)z),
  //   n = tanh(xn + r * (h W + b)n).
  // x_proj is the precomputed input projection [batch, 3*hidden] laid out
  // as [r | z | n]; w_hh is [hidden, 3*hidden], b_hh is [3*hidden].
  NodeId GruCell(NodeId x_proj, NodeId h, NodeId w_hh, NodeId b_hh);

  // Sum over included elements of exp(l) - k*l + log(k!), where l are
  // log-rates. Rates are floored at kRateFloor (no gradient below the
  // floor). An empty include mask means every element is included.
  NodeId PoissonNll(NodeId log_rates, const Tensor& counts, const MaskTensor& include = {});

  // Sum over elements of KL(N(mean, exp(logvar)) || N(0, prior_var)).
  NodeId KlDiagGaussian(NodeId mean, NodeId logvar, double prior_var);

  // Identity forward; backward multiplies the incoming gradient by mask.
  NodeId MaskGrad(NodeId a, const MaskTensor& mask);

  const Tensor& Value(NodeId id) const;
  // Gradient of the seeded outputs w.r.t. id; zeros if id is unreachable.
  const Tensor& Grad(NodeId id);

  void Backward(NodeId output, const Tensor& seed);
  void Backward(NodeId scalar_output);  // seed 1
  void Backward(std::span<const NodeId> outputs, std::span<const Tensor> seeds);

  std::size_t size() const { return nodes_.size(); }

  static constexpr double kRateFloor = 1e-10;

 private:
  enum class Op : std::uint8_t {
    kLeaf, kMatMul, kAdd, kSub, kMul, kAddRowVector, kScale, kSquare, kExp,
    kTanh, kSigmoid, kSoftplus, kClamp, kSliceCols, kSliceRows, kConcatCols,
    kConcatRows, kSum, kSumSquares, kGruCell, kPoissonNll, kKlDiagGaussian,
    kMaskGrad,
  };

  struct Node {
    Op op = Op::kLeaf;
    bool requires_grad = false;
    std::vector<std::uint32_t> inputs;
    Tensor value;
    Tensor grad;
    std::vector<Tensor> cache;
    MaskTensor mask;
    double scalar = 0.0;
    double scalar2 = 0.0;
    std::size_t offset = 0;
  };

  NodeId Push(Node node);
  const Node& At(NodeId id) const;
  Tensor& GradBuffer(std::uint32_t index);
  void BackwardNode(std::uint32_t index);

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

// A scalar-valued computation over leaf inputs, recorded on a fresh tape.
using GraphFn = std::function<NodeId(Tape&, std::span<const NodeId>)>;

double EvaluateGraph(const GraphFn& graph, std::span<const Tensor> inputs);

// Analytic gradients of a scalar graph w.r.t. each input.
std::vector<Tensor> GraphGradients(const GraphFn& graph, std::span<const Tensor> inputs);

// Max over n_probes random input coordinates of
// |analytic - central FD| / max(|analytic|, |FD|, 1e-8).
double GradCheck(const GraphFn& graph, std::span<const Tensor> inputs,
                 std::size_t n_probes, double fd_step, std::uint64_t seed = 0);

}  // namespace latentdyn
