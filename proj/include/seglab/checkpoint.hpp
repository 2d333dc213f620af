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

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <torch/torch.h>

#include "seglab/config.hpp"
#include "seglab/metrics.hpp"
#include "seglab/models.hpp"

namespace seglab {

/// Everything besides tensors that a checkpoint carries.
struct CheckpointMeta {
  HypothesisConfig config;
  Json dataset;  // dataset source description, for standalone evaluation
  long iteration = 0;
  std::string rng_state;
  ValidationHistory history;
  std::vector<std::pair<long, double>> train_loss;
  double best_miou = 0.0;
  long best_iteration = -1;
  std::vector<double> class_weights;
};

Json to_json(const CheckpointMeta& m);
CheckpointMeta checkpoint_meta_from_json(const Json& j);

/// Writes model parameters/buffers, optional optimizer state and the metadata
/// into one archive (written to a temporary name, then renamed).
void save_checkpoint(const std::filesystem::path& path, const Model& model, torch::optim::Optimizer* optimizer,
                     const CheckpointMeta& meta);

CheckpointMeta read_checkpoint_meta(const std::filesystem::path& path);

struct LoadedCheckpoint {
  CheckpointMeta meta;
  Model model;
};

/// Rebuilds the model from the stored ArchSpec and loads its parameters.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);
void load_optimizer_state(const std::filesystem::path& path, torch::optim::Optimizer& optimizer);

}  // namespace seglab
