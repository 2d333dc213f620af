// Copyright 2026 The seglab Authors. All Rights Reserved.
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
#include <filesystem>

#include <json.hpp>

#include "seglab/dataset.hpp"

namespace seglab {

/// A dataset plus the JSON description it was loaded from. The description
/// is stored in checkpoints so evaluation can reload the same data.
///
///   {"kind": "manifest", "manifest": "...", "palette": "..."}
///   {"kind": "synthetic", "seed": 1, "n": 20, "height": 72, "width": 88, "num_classes": 6}
struct LoadedData {
  ClassTaxonomy taxonomy;
  DatasetSplits splits;
  nlohmann::json source;
};

nlohmann::json manifest_source(const std::filesystem::path& manifest, const std::filesystem::path& palette);
nlohmann::json synthetic_source(std::uint64_t seed, int n, Size2 dims, int num_classes);

LoadedData load_data_source(const nlohmann::json& source);

}  // namespace seglab
