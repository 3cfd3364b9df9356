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
#include "latentdyn/autodiff.hpp"
#include "latentdyn/rng.hpp"

using namespace latentdyn;

namespace {

Tensor RandomTensor(Shape shape, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Tensor t(std::move(shape));
  for (double& x : t.data()) x = n(rng);
  return t;
}

}  // namespace

TEST_CASE("square forward and backward") {
  Tape tape;
  const NodeId x = tape.Input(Tensor({1}, {3.0}));
  const NodeId y = tape.Square(x);
  CHECK(tape.Value(y)[0] == 9.0);
  tape.Backward(y);
  CHECK(tape.Grad(x)[0] == 6.0);
}

TEST_CASE("matmul with identity returns the operand") {
  Rng rng(1);
  const Tensor a = RandomTensor({3, 3}, rng);
  Tensor eye({3, 3});
  for (std::size_t i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
  Tape tape;
  const NodeId out = tape.MatMul(tape.Constant(eye), tape.Input(a));
  CHECK(tape.Value(out) == a);
}

TEST_CASE("gru cell with zero weights halves the state") {
  Tape tape;
  const Tensor h({2, 3}, {1, -2, 3, 0.5, 4, -6});
  const NodeId out = tape.GruCell(tape.Constant(Tensor({2, 9})), tape.Input(h),
                                  tape.Constant(Tensor({3, 9})), tape.Constant(Tensor({9})));
  for (std::size_t i = 0; i < h.size(); ++i) CHECK(tape.Value(out)[i] == doctest::Approx(0.5 * h[i]));
}

TEST_CASE("all-zero gradient mask at the loss blocks every parameter gradient") {
  Rng rng(2);
  Tape tape;
  const NodeId w = tape.Input(RandomTensor({4, 3}, rng));
  const NodeId x = tape.Constant(RandomTensor({5, 4}, rng));
  const NodeId logits = tape.MatMul(x, w);
  const NodeId masked = tape.MaskGrad(logits, MaskTensor({5, 3}, 0));
  const NodeId loss = tape.Sum(tape.Square(masked));
  tape.Backward(loss);
  for (double g : tape.Grad(w).data()) CHECK(g == 0.0);
}

TEST_CASE("grad_check on a linear map is exact") {
  Rng rng(3);
  const Tensor c = RandomTensor({3, 2}, rng);
  GraphFn graph = [&c](Tape& t, std::span<const NodeId> in) {
    return t.Sum(t.MatMul(in[0], t.Constant(c)));
  };
  const Tensor inputs[] = {RandomTensor({4, 3}, rng)};
  CHECK(GradCheck(graph, inputs, 12, 1e-5) < 1e-8);
}

TEST_CASE("grad_check on a softplus chain") {
  Rng rng(4);
  GraphFn graph = [](Tape& t, std::span<const NodeId> in) {
    NodeId h = t.Softplus(in[0]);
    h = t.Softplus(t.Scale(h, -1.5));
    h = t.Softplus(t.Mul(h, in[0]));
    return t.Sum(h);
  };
  const Tensor inputs[] = {RandomTensor({3, 4}, rng)};
  CHECK(GradCheck(graph, inputs, 12, 1e-5) < 1e-5);
}

TEST_CASE("grad_check on a 10-step GRU unroll") {
  Rng rng(5);
  const std::size_t batch = 3, in_dim = 4, hid = 5;
  std::vector<Tensor> inputs = {
      RandomTensor({10 * batch, in_dim}, rng),        // input sequence, time-major
      RandomTensor({in_dim, 3 * hid}, rng, 0.5),      // w_ih
      RandomTensor({3 * hid}, rng, 0.1),              // b_ih
      RandomTensor({hid, 3 * hid}, rng, 0.5),         // w_hh
      RandomTensor({3 * hid}, rng, 0.1),              // b_hh
      RandomTensor({batch, hid}, rng, 0.5),           // h0
  };
  GraphFn graph = [&](Tape& t, std::span<const NodeId> in) {
    const NodeId proj = t.AddRowVector(t.MatMul(in[0], in[1]), in[2]);
    NodeId h = in[5];
    NodeId acc = t.Sum(t.Square(h));
    for (std::size_t s = 0; s < 10; ++s) {
      h = t.GruCell(t.SliceRows(proj, s * batch, batch), h, in[3], in[4]);
      acc = t.Add(acc, t.Sum(t.Tanh(h)));
    }
    return acc;
  };
  CHECK(GradCheck(graph, inputs, 80, 1e-5, 7) < 1e-4);
}

TEST_CASE("every primitive matches central finite differences") {
  Rng rng(6);
  const Tensor counts({3, 4}, {0, 1, 2, 0, 3, 1, 0, 0, 5, 2, 1, 0});
  MaskTensor include({3, 4}, 1);
  include[2] = 0;
  include[7] = 0;
  const Tensor ones_row({4}, {1, 2, 3, 4});

  std::vector<std::pair<const char*, GraphFn>> cases = {
      {"add", [](Tape& t, std::span<const NodeId> in) { return t.Sum(t.Square(t.Add(in[0], in[1]))); }},
      {"sub", [](Tape& t, std::span<const NodeId> in) { return t.Sum(t.Square(t.Sub(in[0], in[1]))); }},
      {"mul", [](Tape& t, std::span<const NodeId> in) { return t.Sum(t.Mul(in[0], in[1])); }},
      {"matmul", [](Tape& t, std::span<const NodeId> in) {
         return t.SumSquares(t.MatMul(in[0], t.SliceRows(t.ConcatRows(std::vector{in[1], in[1]}), 0, 4)));
       }},
      {"bias", [](Tape& t, std::span<const NodeId> in) {
         return t.SumSquares(t.AddRowVector(in[0], t.SliceRows(in[1], 0, 1)));
       }},
      {"exp", [](Tape& t, std::span<const NodeId> in) { return t.Sum(t.Exp(in[0])); }},
      {"tanh", [](Tape& t, std::span<const NodeId> in) { return t.SumSquares(t.Tanh(in[0])); }},
      {"sigmoid", [](Tape& t, std::span<const NodeId> in) { return t.SumSquares(t.Sigmoid(in[0])); }},
      {"clamp", [](Tape& t, std::span<const NodeId> in) { return t.SumSquares(t.Clamp(in[0], -0.5, 0.5)); }},
      {"slice_concat_cols", [](Tape& t, std::span<const NodeId> in) {
         const NodeId parts[] = {t.SliceCols(in[0], 1, 2), in[1]};
         return t.SumSquares(t.Tanh(t.ConcatCols(parts)));
       }},
      {"poisson", [&](Tape& t, std::span<const NodeId> in) { return t.PoissonNll(in[0], counts, include); }},
      {"kl", [](Tape& t, std::span<const NodeId> in) { return t.KlDiagGaussian(in[0], in[1], 0.7); }},
  };
  for (auto& [name, graph] : cases) {
    CAPTURE(name);
    const Tensor inputs[] = {RandomTensor({3, 4}, rng), RandomTensor({3, 4}, rng)};
    CHECK(GradCheck(graph, inputs, 24, 1e-5, 11) < 1e-4);
  }
  (void)ones_row;
}

TEST_CASE("backward is linear in the seed") {
  Rng rng(8);
  const Tensor x = RandomTensor({2, 3}, rng);
  const Tensor w = RandomTensor({3, 3}, rng);
  const Tensor seed = RandomTensor({2, 3}, rng);
  auto grad_for = [&](double a) {
    Tape t;
    const NodeId xi = t.Input(x);
    const NodeId out = t.Tanh(t.MatMul(xi, t.Constant(w)));
    Tensor s = seed;
    for (double& v : s.data()) v *= a;
    t.Backward(out, s);
    return t.Grad(xi);
  };
  const Tensor g1 = grad_for(1.0);
  const Tensor g3 = grad_for(-3.0);
  for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g3[i] == doctest::Approx(-3.0 * g1[i]).epsilon(1e-12));
}

TEST_CASE("masking the gradient equals excluding elements from a separable loss") {
  Rng rng(9);
  const Tensor x = RandomTensor({4, 5}, rng, 0.5);
  Tensor counts({4, 5});
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] = static_cast<double>(i % 3);
  MaskTensor keep({4, 5});
  for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = (i * 7 % 5) < 3;

  Tape a;
  const NodeId xa = a.Input(x);
  a.Backward(a.PoissonNll(a.MaskGrad(a.Tanh(xa), keep), counts));
  Tape b;
  const NodeId xb = b.Input(x);
  b.Backward(b.PoissonNll(b.Tanh(xb), counts, keep));
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(a.Grad(xa)[i] == doctest::Approx(b.Grad(xb)[i]));
}

TEST_CASE("tape errors") {
  Tape tape;
  const NodeId a = tape.Input(Tensor({2, 3}));
  const NodeId b = tape.Input(Tensor({2, 3}));
  CHECK_THROWS_AS(tape.MatMul(a, b), Error);
  CHECK_THROWS_AS(tape.Add(a, tape.Input(Tensor({3, 2}))), Error);
  CHECK_THROWS_AS(tape.Exp(tape.Input(Tensor({1}, {1000.0}))), Error);
  const NodeId s = tape.Sum(a);
  tape.Backward(s);
  CHECK_THROWS_AS(tape.Backward(s), Error);
}
