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

#include <vector>

#include <torch/torch.h>

#include "seglab/config.hpp"
#include "seglab/dataset.hpp"

namespace seglab {

// Shapes: logits and probs are (N, C, H, W); labels are (N, H, W) int64.

/// Mean over pixels of -log softmax(logits)[true class].
torch::Tensor ce_loss(const torch::Tensor& logits, const torch::Tensor& labels);

/// Per-pixel CE scaled by the true class weight, normalized by the summed weights.
torch::Tensor wce_loss(const torch::Tensor& logits, const torch::Tensor& labels, const torch::Tensor& class_weights);

/// 1 - mean_c (I_c + eps) / (P_c + Y_c - I_c + eps) over classes that have
/// ground-truth or predicted mass; sums run over the whole batch.
torch::Tensor soft_miou_loss(const torch::Tensor& probs, const torch::Tensor& labels, double epsilon = 1e-6);

/// 1 - mean_c (2 I_c + eps) / (P_c + Y_c + eps), same class selection.
torch::Tensor soft_dice_loss(const torch::Tensor& probs, const torch::Tensor& labels, double epsilon = 1e-6);

/// Weighted sum of the configured terms. WCE uses `cfg.class_weights` when set,
/// else `fallback_weights`.
torch::Tensor compound_loss(const LossConfig& cfg, const torch::Tensor& logits, const torch::Tensor& labels,
                            const torch::Tensor& fallback_weights = {});

/// Inverse pixel frequency normalized to mean 1. Classes without pixels get
/// the largest present weight.
std::vector<double> inverse_frequency_weights(const std::vector<Sample>& samples, int num_classes);

}  // namespace seglab
