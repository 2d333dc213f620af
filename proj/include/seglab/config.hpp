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
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "seglab/arch.hpp"
#include "seglab/augmentation.hpp"

namespace seglab {

using Json = nlohmann::json;

enum class LossKind { ce, wce, soft_miou, soft_dice };
std::string to_string(LossKind k);
LossKind parse_loss_kind(const std::string& s);

struct LossTerm {
  LossKind kind = LossKind::ce;
  double weight = 1.0;
  friend bool operator==(const LossTerm&, const LossTerm&) = default;
};

struct LossConfig {
  std::vector<LossTerm> terms{LossTerm{}};
  /// Per-class WCE weights; when absent they are derived from the training split.
  std::optional<std::vector<double>> class_weights;
  double epsilon = 1e-6;

  bool uses(LossKind k) const;
  void validate() const;
  friend bool operator==(const LossConfig&, const LossConfig&) = default;
};

enum class OptimizerKind { adam, sgd };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double lr = 1e-4;
  double momentum = 0.9;
  double weight_decay = 0.0;
  long warmup_iters = 0;
  double poly_power = 0.9;
  friend bool operator==(const OptimizerConfig&, const OptimizerConfig&) = default;
};

struct StageConfig {
  LossConfig loss;
  long iterations = 0;
  friend bool operator==(const StageConfig&, const StageConfig&) = default;
};

struct TrainConfig {
  OptimizerConfig optimizer;
  int batch_size = 8;
  long max_iterations = 14000;
  std::vector<StageConfig> stages;
  long val_every = 2000;
  long checkpoint_every = 2000;
  std::uint64_t seed = 0;
  /// Window of the smoothed validation score.
  int smoothing_window = 10;
  bool miou_exclude_background = false;

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

enum class EnsembleStrategy { single, flipped, multiscale_flipped };
enum class VoteMode { hard, soft };
std::string to_string(EnsembleStrategy s);
std::string to_string(VoteMode v);
EnsembleStrategy parse_strategy(const std::string& s);
VoteMode parse_vote_mode(const std::string& s);

struct EnsembleConfig {
  EnsembleStrategy strategy = EnsembleStrategy::single;
  /// Extra member resolutions (H, W); the native one is always included.
  std::vector<Size2> scales;
  Size2 native{288, 352};
  VoteMode vote_mode = VoteMode::hard;

  void validate() const;
  friend bool operator==(const EnsembleConfig&, const EnsembleConfig&) = default;
};

/// One fully-resolved trainable configuration.
struct HypothesisConfig {
  ArchSpec arch;
  AugmentConfig augment;
  TrainConfig train;
  EnsembleConfig ensemble;

  void validate() const;
};

Json to_json(const ArchSpec& a);
Json to_json(const AugmentConfig& a);
Json to_json(const LossConfig& l);
Json to_json(const TrainConfig& t);
Json to_json(const EnsembleConfig& e);
Json to_json(const HypothesisConfig& h);

/// Strict readers: every field must be present, unknown keys are rejected.
ArchSpec arch_from_json(const Json& j);
AugmentConfig augment_from_json(const Json& j);
LossConfig loss_from_json(const Json& j);
TrainConfig train_from_json(const Json& j);
EnsembleConfig ensemble_from_json(const Json& j);
HypothesisConfig hypothesis_from_json(const Json& j);

/// Deep merge of `patch` over `base`: objects merge recursively, anything
/// else replaces. Keys absent from `base` are rejected with their path.
Json merge_patch_strict(const Json& base, const Json& patch, const std::string& path = "");
HypothesisConfig resolve(const HypothesisConfig& base, const Json& patch);

/// Fingerprint of the canonical JSON form.
std::string config_hash(const HypothesisConfig& h);

}  // namespace seglab
