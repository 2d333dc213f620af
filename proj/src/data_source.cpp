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

#include "seglab/data_source.hpp"

namespace seglab {

nlohmann::json manifest_source(const std::filesystem::path& manifest, const std::filesystem::path& palette) {
  return {{"kind", "manifest"},
          {"manifest", std::filesystem::absolute(manifest).string()},
          {"palette", std::filesystem::absolute(palette).string()}};
}

nlohmann::json synthetic_source(std::uint64_t seed, int n, Size2 dims, int num_classes) {
  return {{"kind", "synthetic"}, {"seed", seed},         {"n", n},
          {"height", dims.height}, {"width", dims.width}, {"num_classes", num_classes}};
}

LoadedData load_data_source(const nlohmann::json& source) {
  LoadedData d;
  d.source = source;
  try {
    const auto kind = source.at("kind").get<std::string>();
    if (kind == "manifest") {
      d.taxonomy = load_palette(source.at("palette").get<std::string>());
      d.splits = load_dataset(source.at("manifest").get<std::string>(), d.taxonomy);
    } else if (kind == "synthetic") {
      const auto seed = source.at("seed").get<std::uint64_t>();
      const int nc = source.at("num_classes").get<int>();
      d.taxonomy = synthetic_taxonomy(nc);
      d.splits = split_samples(make_synthetic_fixture(seed, source.at("n").get<int>(),
                                                      {source.at("height").get<int>(), source.at("width").get<int>()}, nc),
                               seed);
    } else {
      throw ConfigError("unknown dataset kind '" + kind + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad dataset description: ") + e.what());
  }
  return d;
}

}  // namespace seglab
