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

#include "doctest.h"
#include "latentdyn/linear_ae.hpp"

using namespace latentdyn;

TEST_CASE("linear ae loss of identity and zero maps") {
  const LinearDemoDataset d = GenLinearDemo(2, 6, 50, 10, 1);
  Tensor eye({6, 6});
  for (std::size_t i = 0; i < 6; ++i) eye.at(i, i) = 1.0;
  CHECK(LinearAeLoss(eye, d.train.y, d.train.y) == 0.0);
  double sq = 0;
  for (double v : d.train.y.data()) sq += v * v;
  CHECK(LinearAeLoss(Tensor({6, 6}), d.train.y, d.train.y) == doctest::Approx(sq / 50).epsilon(1e-14));
}

TEST_CASE("one gradient step from zero matches the closed form") {
  const LinearDemoDataset d = GenLinearDemo(2, 5, 30, 5, 2);
  LinearAeOptions o;
  o.steps = 1;
  o.learning_rate = 0.003;
  const LinearAeState s = TrainLinearAe(d, o);
  // U1 = lr * (2/n) * Y^T Y
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      double g = 0;
      for (std::size_t k = 0; k < 30; ++k) g += d.train.y.at(k, i) * d.train.y.at(k, j);
      CHECK(s.u.at(i, j) == doctest::Approx(0.003 * 2.0 / 30 * g).epsilon(1e-12));
    }
  }
  CHECK(s.curve.front().step == 0);
  CHECK(s.curve.back().step == 1);
}

TEST_CASE("oracle floor is zero without noise") {
  LinearDemoDataset d = GenLinearDemo(3, 10, 100, 40, 3);
  d.valid.y = d.valid.y_true;
  CHECK(OracleTrueLoss(d) < 1e-20);
}

TEST_CASE("oracle floor with a full-rank readout is zero on noise-free data") {
  LinearDemoDataset d = GenLinearDemo(3, 4, 100, 40, 3);
  d.readout = Tensor({4, 4});  // D = M
  d.train.y_true = d.train.y;
  d.valid.y_true = d.valid.y;
  CHECK(OracleTrueLoss(d) < 1e-20);
}

TEST_CASE("oracle floor is near D times the noise variance") {
  const LinearDemoDataset d = GenLinearDemo(5, 40, 1000, 1000, 0);
  CHECK(OracleTrueLoss(d) == doctest::Approx(5.0).epsilon(0.05));
}

TEST_CASE("coordinated dropout never moves the diagonal from zero") {
  const LinearDemoDataset d = GenLinearDemo(2, 8, 200, 50, 4);
  LinearAeOptions o;
  o.cd_enabled = true;
  o.steps = 300;
  const LinearAeState s = TrainLinearAe(d, o);
  CHECK(s.max_abs_diag_seen == 0.0);
  double off = 0;
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j)
      if (i != j) off += s.u.at(i, j) * s.u.at(i, j);
  CHECK(off > 0.1);
}

TEST_CASE("without dropout the map collapses toward identity and overfits") {
  const LinearDemoDataset d = GenLinearDemo(2, 8, 200, 200, 5);
  LinearAeOptions o;
  o.steps = 3000;
  const LinearAeState s = TrainLinearAe(d, o);
  CHECK(MeanAbsDiagMinusOne(s.u) < 0.1);
  CHECK(s.curve.back().train_recon < 0.05);
  double best = s.curve.front().valid_true;
  for (const auto& p : s.curve) best = std::min(best, p.valid_true);
  CHECK(s.curve.back().valid_true > 1.25 * best);
}

TEST_CASE("with dropout loss_true settles after burn-in") {
  const LinearDemoDataset d = GenLinearDemo(2, 8, 200, 200, 6);
  LinearAeOptions o;
  o.cd_enabled = true;
  o.steps = 2000;
  const LinearAeState s = TrainLinearAe(d, o);
  double best = s.curve.front().valid_true;
  for (const auto& p : s.curve) best = std::min(best, p.valid_true);
  // Late-training drift stays small compared with the cd-off overfit.
  CHECK(s.curve.back().valid_true < 1.15 * best);
  for (std::size_t i = 1; i < s.curve.size(); ++i) CHECK(s.curve[i].step > s.curve[i - 1].step);
}

TEST_CASE("linear ae option validation and seeding") {
  const LinearDemoDataset d = GenLinearDemo(2, 6, 50, 10, 7);
  LinearAeOptions o;
  o.steps = 0;
  CHECK_THROWS_AS(TrainLinearAe(d, o), Error);
  o.steps = 5;
  o.cd_enabled = true;
  o.keep_ratio = 1.0;
  CHECK_THROWS_AS(TrainLinearAe(d, o), Error);
  o.keep_ratio = 0.8;
  CHECK(TrainLinearAe(d, o).u == TrainLinearAe(d, o).u);
  LinearAeOptions o2 = o;
  o2.seed = 1;
  CHECK_FALSE(TrainLinearAe(d, o).u == TrainLinearAe(d, o2).u);
  o.cd_enabled = false;
  o.learning_rate = 10.0;
  o.steps = 200;
  CHECK_THROWS_AS(TrainLinearAe(d, o), DivergenceError);
}
