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

#include <filesystem>

#include "latentdyn/container.hpp"
#include "latentdyn/datagen.hpp"

namespace latentdyn {

// Tensors "spikes", "true_rates", "condition_ids", "behavior" (the latter
// three only when present) and meta {kind: "dataset", bin_width}.
TensorContainer DatasetToContainer(const GroundTruthDataset& data);
GroundTruthDataset DatasetFromContainer(const TensorContainer& c);

void SaveDataset(const GroundTruthDataset& data, const std::filesystem::path& path);
GroundTruthDataset LoadDataset(const std::filesystem::path& path);

}  // namespace latentdyn
