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
#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "seglab/config.hpp"
#include "seglab/dataset.hpp"
#include "seglab/metrics.hpp"
#include "seglab/models.hpp"

namespace seglab {

/// One forward pass of an ensemble: input resolution and mirroring.
struct EnsembleMember {
  Size2 size;
  bool flip = false;
  friend bool operator==(const EnsembleMember&, const EnsembleMember&) = default;
};

/// Members for an image of `image_size`. Configured resolutions are relative
/// to `cfg.native`, so an image at native size is passed through unscaled.
std::vector<EnsembleMember> ensemble_members(const EnsembleConfig& cfg, Size2 image_size);

/// Per-pixel argmax of (C, H, W) scores; ties go to the lowest class id.
LabelMap argmax_labels(const torch::Tensor& scores);
/// Per-pixel majority over label maps; ties go to the lowest class id.
LabelMap hard_vote(const std::vector<LabelMap>& votes, int num_classes);

/// Logits of one member mapped back to the image frame, (C, H, W).
torch::Tensor member_logits(const LogitFn& fn, const Image& image, const EnsembleMember& m);

LabelMap predict(const LogitFn& fn, const Image& image);
LabelMap predict_members(const LogitFn& fn, const Image& image, const std::vector<EnsembleMember>& members,
                         VoteMode mode);
LabelMap predict_flipped(const LogitFn& fn, const Image& image, VoteMode mode = VoteMode::hard);
LabelMap predict_multiscale_flipped(const LogitFn& fn, const Image& image, const EnsembleConfig& cfg);
/// Dispatches on `cfg.strategy`.
LabelMap predict_ensemble(const LogitFn& fn, const Image& image, const EnsembleConfig& cfg);

/// Confusion matrix of `cfg` predictions over `samples`.
ConfusionMatrix evaluate_samples(const LogitFn& fn, const std::vector<Sample>& samples, int num_classes,
                                 const EnsembleConfig& cfg);

struct CheckpointEvalRow {
  EnsembleStrategy strategy = EnsembleStrategy::single;
  double last = 0.0;
  double best = 0.0;
};

/// Scores each strategy on the last and the best checkpoint of a run.
std::vector<CheckpointEvalRow> evaluate_checkpoints(const std::filesystem::path& last_checkpoint,
                                                    const std::filesystem::path& best_checkpoint,
                                                    const std::vector<Sample>& samples,
                                                    const std::vector<EnsembleStrategy>& strategies,
                                                    const EnsembleConfig& base);

/// `strategy,last,best` rows.
std::string checkpoint_eval_csv(const std::vector<CheckpointEvalRow>& rows);

}  // namespace seglab
