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

#include <cstddef>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "seglab/checkpoint.hpp"
#include "seglab/config.hpp"
#include "seglab/dataset.hpp"
#include "seglab/metrics.hpp"

namespace seglab {

struct StageSwitch {
  long iteration = 0;
  std::size_t from_stage = 0, to_stage = 0;
  /// Parameter fingerprints right before and right after the loss swap.
  std::string hash_before, hash_after;
};

struct RunRecord {
  ValidationHistory history;
  std::vector<std::pair<long, double>> train_loss;
  std::vector<StageSwitch> stage_switches;
  std::filesystem::path run_dir, last_checkpoint, best_checkpoint;
  double best_miou = -std::numeric_limits<double>::infinity();
  long best_iteration = -1;
  long iterations_done = 0;
  bool finished = false;  // false when stopped early via TrainOptions::stop_after
  double wall_seconds = 0.0;
  std::vector<double> class_weights;
};

struct StepInfo {
  long iteration = 0;  // 1-based count of completed updates
  std::size_t stage = 0;
  double loss = 0.0;
  double lr = 0.0;
};

struct TrainOptions {
  /// Run directory; empty keeps everything in memory (no checkpoints).
  std::filesystem::path run_dir;
  /// Stops once this many updates are done (checkpointing first); -1 runs to the end.
  long stop_after = -1;
  /// Recorded in checkpoints and config.resolved.
  Json dataset_source = Json::object();
  std::function<void(const StepInfo&)> on_step;
};

/// Trains `cfg` on `data.train`, validating on `data.val` (or `data.train`
/// when there is no validation split). Batches and augmentation draws are
/// pure functions of (seed, iteration), so a resumed run replays exactly.
RunRecord train(const HypothesisConfig& cfg, const DatasetSplits& data, const TrainOptions& opts = {});

/// Continues a run from `checkpoint`. Throws IncompatibleCheckpoint when the
/// stored ArchSpec differs from `expected` or does not fit the dataset.
RunRecord resume(const std::filesystem::path& checkpoint, const DatasetSplits& data, const TrainOptions& opts = {},
                 const std::optional<ArchSpec>& expected = std::nullopt);

/// Indices of the samples used at `iteration`: consecutive slices of
/// per-epoch permutations of [0, n).
std::vector<std::size_t> batch_indices(std::uint64_t seed, long iteration, int batch_size, std::size_t n);

}  // namespace seglab
