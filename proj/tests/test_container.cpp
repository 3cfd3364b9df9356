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

#include <cstring>
#include <filesystem>

#include "doctest.h"
#include "latentdyn/container.hpp"
#include "latentdyn/csv.hpp"
#include "latentdyn/dataset_io.hpp"
#include "latentdyn/error.hpp"

using namespace latentdyn;

namespace {

TensorContainer Sample() {
  TensorContainer c;
  c.Put("w", Tensor({2, 3}, std::vector<double>{1.5, -2, 0.1, 1e-300, 3, 7}));
  c.Put("spikes", SpikeTensor({2, 2, 1}, std::vector<std::int64_t>{0, 4, -1, 9}));
  c.Put("mask", MaskTensor({3}, std::vector<std::uint8_t>{1, 0, 1}));
  c.Put("empty", Tensor({0, 4}));
  c.meta()["step"] = 12;
  c.meta()["lr"] = 0.1;
  return c;
}

}  // namespace

TEST_CASE("container round trip is byte exact") {
  const TensorContainer c = Sample();
  const auto bytes = c.Serialize();
  const TensorContainer back = TensorContainer::Parse(bytes);
  CHECK(back == c);
  CHECK(back.Serialize() == bytes);
  CHECK(back.F64("w")[3] == 1e-300);
  CHECK(back.meta()["lr"].get<double>() == 0.1);
}

TEST_CASE("container layout: magic, version, aligned payloads") {
  const auto bytes = Sample().Serialize();
  CHECK(std::memcmp(bytes.data(), "LDTN", 4) == 0);
  std::uint16_t version = 0;
  std::memcpy(&version, bytes.data() + 4, 2);
  CHECK(version == 1);
  std::uint64_t hlen = 0;
  std::memcpy(&hlen, bytes.data() + 6, 8);
  const auto header = nlohmann::json::parse(bytes.begin() + 14, bytes.begin() + 14 + static_cast<long>(hlen));
  const std::size_t data_start = (14 + hlen + 63) / 64 * 64;
  CHECK(bytes.size() % 64 == 0);
  for (const auto& [name, h] : header["tensors"].items()) CHECK(h["offset"].get<std::size_t>() % 64 == 0);
  // First f64 of "w" read straight from the file.
  double w0 = 0;
  std::memcpy(&w0, bytes.data() + data_start + header["tensors"]["w"]["offset"].get<std::size_t>(), 8);
  CHECK(w0 == 1.5);
  CHECK(header["tensors"]["spikes"]["dtype"] == "i64");
  CHECK(header["tensors"]["mask"]["dtype"] == "u8");
}

TEST_CASE("container rejects corrupt input") {
  auto bytes = Sample().Serialize();
  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(TensorContainer::Parse(bad), Error);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 64);
  CHECK_THROWS_AS(TensorContainer::Parse(truncated), Error);
  auto version = bytes;
  version[4] = 9;
  CHECK_THROWS_AS(TensorContainer::Parse(version), Error);
  try {
    TensorContainer::Parse(bad);
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::kSchema);
  }
}

TEST_CASE("container typed access and file io") {
  const TensorContainer c = Sample();
  CHECK_THROWS_AS(c.I64("w"), Error);
  CHECK_THROWS_AS(c.F64("nope"), Error);
  const auto dir = std::filesystem::temp_directory_path() / "latentdyn_container_test";
  std::filesystem::remove_all(dir);
  c.Save(dir / "sub" / "c.ldt");
  CHECK(TensorContainer::Load(dir / "sub" / "c.ldt") == c);
  CHECK_THROWS_AS(TensorContainer::Load(dir / "missing.ldt"), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("csv number formatting round trips") {
  CHECK(FormatNumber(0.1) == "0.1");
  CHECK(FormatNumber(1e-300) == "1e-300");
  CHECK(FormatNumber(std::optional<double>{}).empty());
  CHECK(FormatNumber(INFINITY) == "inf");
  const double v = 0.1 + 0.2;
  CsvTable t{{"a"}, {{FormatNumber(v)}}};
  CHECK(*CsvTable::Parse(t.ToString()).Number(0, "a") == v);
}

TEST_CASE("csv quoting and parsing") {
  CHECK(CsvQuote("plain") == "plain");
  CHECK(CsvQuote("a,b") == "\"a,b\"");
  CHECK(CsvQuote("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CsvTable t{{"name", "x"}, {{"a,b", "1"}, {"line\nbreak", ""}}};
  const CsvTable back = CsvTable::Parse(t.ToString());
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
  CHECK_FALSE(back.Number(1, "x").has_value());
  CHECK_THROWS_AS(back.Column("y"), Error);
  CHECK_THROWS_AS(CsvTable::Parse("a,b\n1\n"), Error);
  CHECK_THROWS_AS(CsvTable::Parse("a\nfoo\n").Number(0, "a"), Error);
}

TEST_CASE("dataset survives the container") {
  SynthRnnConfig cfg = SynthRnnConfig::Desk();
  cfg.n_trials = 6;
  cfg.n_conditions = 3;
  cfg.trial_len = 0.05;
  const GroundTruthDataset d = SimulateChaoticRnn(cfg);
  const auto bytes = DatasetToContainer(d).Serialize();
  const GroundTruthDataset back = DatasetFromContainer(TensorContainer::Parse(bytes));
  CHECK(back.spikes == d.spikes);
  CHECK(back.true_rates == d.true_rates);
  CHECK(back.behavior == d.behavior);
  CHECK(back.condition_ids == d.condition_ids);
  CHECK(back.bin_width == d.bin_width);
  CHECK(DatasetToContainer(back).Serialize() == bytes);

  TensorContainer bad = DatasetToContainer(d);
  bad.meta()["kind"] = "lfads_checkpoint";
  CHECK_THROWS_AS(DatasetFromContainer(bad), Error);
  TensorContainer neg = DatasetToContainer(d);
  SpikeTensor s = d.spikes;
  s[0] = -1;
  neg.Put("spikes", s);
  CHECK_THROWS_AS(DatasetFromContainer(neg), Error);
}
