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

#include "latentdyn/dataset_io.hpp"

#include "latentdyn/error.hpp"

namespace latentdyn {

TensorContainer DatasetToContainer(const GroundTruthDataset& data) {
  TensorContainer c;
  c.Put("spikes", data.spikes);
  if (data.has_rates()) c.Put("true_rates", data.true_rates);
  if (!data.condition_ids.empty()) {
    c.Put("condition_ids", SpikeTensor({data.condition_ids.size()}, data.condition_ids));
  }
  if (data.has_behavior()) c.Put("behavior", data.behavior);
  c.meta()["kind"] = "dataset";
  c.meta()["bin_width"] = data.bin_width;
  return c;
}

GroundTruthDataset DatasetFromContainer(const TensorContainer& c) {
  const auto& meta = c.meta();
  Require(meta.value("kind", "") == "dataset", ErrorCategory::kSchema, "container is not a dataset");
  Require(meta.contains("bin_width") && meta["bin_width"].is_number(), ErrorCategory::kSchema,
          "dataset meta lacks bin_width");
  GroundTruthDataset d;
  d.bin_width = meta["bin_width"].get<double>();
  Require(d.bin_width > 0, ErrorCategory::kSchema, "dataset bin_width must be positive");
  d.spikes = c.I64("spikes");
  Require(d.spikes.rank() == 3, ErrorCategory::kSchema, "spikes must be [trial, bin, neuron]");
  for (std::int64_t v : d.spikes.data()) Require(v >= 0, ErrorCategory::kSchema, "spike counts must be >= 0");
  if (c.Has("true_rates")) {
    d.true_rates = c.F64("true_rates");
    RequireSameShape(d.true_rates.shape(), d.spikes.shape(), "true_rates");
  }
  if (c.Has("condition_ids")) {
    const auto& ids = c.I64("condition_ids").data();
    Require(ids.size() == d.n_trials(), ErrorCategory::kSchema, "condition_ids needs one entry per trial");
    d.condition_ids.assign(ids.begin(), ids.end());
  }
  if (c.Has("behavior")) {
    d.behavior = c.F64("behavior");
    Require(d.behavior.rank() == 3 && d.behavior.dim(0) == d.n_trials() && d.behavior.dim(1) == d.n_bins(),
            ErrorCategory::kSchema, "behavior must be [trial, bin, k]");
  }
  return d;
}

void SaveDataset(const GroundTruthDataset& data, const std::filesystem::path& path) {
  DatasetToContainer(data).Save(path);
}

GroundTruthDataset LoadDataset(const std::filesystem::path& path) {
  return DatasetFromContainer(TensorContainer::Load(path));
}

}  // namespace latentdyn
