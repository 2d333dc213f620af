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
#include <functional>
#include <vector>

#include <torch/torch.h>

#include "seglab/image.hpp"
#include "seglab/metrics.hpp"
#include "seglab/models.hpp"

namespace seglab {

struct InputOptimizationConfig {
  Size2 size{224, 224};
  int steps = 200;
  /// Largest per-pixel change per step, in [0, 1] image units.
  double step_size = 0.01;
  /// Ascend the mean softmax probability instead of the mean logit.
  bool use_probability = false;
  std::uint64_t seed = 0;
  /// Called with the input before the first step and after every step.
  std::function<void(int step, const torch::Tensor& input)> on_step;
};

struct InputTrace {
  torch::Tensor input;  // (1, 3, H, W) in [0, 1]
  Image image;
  /// Objective before the first step and after every step.
  std::vector<double> objective;
  bool aborted = false;  // a non-finite objective or gradient stopped the ascent
};

/// Gradient ascent on the input image to maximise the mean response of
/// `target_class` over all pixels. Parameters are left untouched.
InputTrace optimize_input(const Model& model, int target_class, const InputOptimizationConfig& cfg = {});

/// Converts a (1, 3, H, W) or (3, H, W) tensor in [0, 1] to 8-bit RGB.
Image unit_tensor_to_image(const torch::Tensor& x);

}  // namespace seglab
