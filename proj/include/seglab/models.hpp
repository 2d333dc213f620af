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

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "seglab/arch.hpp"
#include "seglab/image.hpp"

namespace seglab {

namespace detail {
struct SegNetImpl;
}

/// Spatial dims of every encoder tap, measured by running the network.
struct FeatureProbe {
  Size2 input;
  Size2 padded_input;
  Size2 stem_conv;   // after the 7x7 conv
  Size2 stem_out;    // after the optional max-pool
  std::array<Size2, 4> blocks;
  Size2 low_level;   // DeepLabV3+ decoder tap (equals stem_out)
  Size2 high_level;  // encoder output
  Size2 logits;
};

/// A segmentation network bound to its ArchSpec. Copies share parameters.
class Model {
 public:
  Model() = default;
  explicit Model(std::shared_ptr<detail::SegNetImpl> net);

  const ArchSpec& spec() const;
  const StridePlan& plan() const;

  /// Normalized (N, 3, H, W) float input to (N, C, H, W) logits. Inputs whose
  /// sides are not multiples of 32 are edge-padded and the logits cropped back.
  torch::Tensor forward(const torch::Tensor& x) const;

  torch::nn::Module& module() const;
  std::vector<torch::Tensor> parameters() const;
  /// Number of scalars in parameters whose qualified name starts with `prefix`.
  std::int64_t parameter_count(const std::string& prefix = "") const;
  /// Fingerprint of every parameter and buffer.
  std::string parameter_hash() const;

  void train(bool on = true) const;
  bool is_training() const;

  FeatureProbe probe(Size2 input) const;
  /// Dilation of each residual unit's 3x3 conv, read from the built layers.
  std::array<std::vector<int>, 4> measured_unit_dilations() const;

  void save_encoder(const std::string& path) const;
  void load_encoder(const std::string& path) const;

 private:
  std::shared_ptr<detail::SegNetImpl> net_;
};

/// Builds the network for `spec` with parameters initialised from `seed`.
Model build_model(const ArchSpec& spec, std::uint64_t seed = 0);

inline constexpr std::array<float, 3> kImageMean = {0.485f, 0.456f, 0.406f};
inline constexpr std::array<float, 3> kImageStd = {0.229f, 0.224f, 0.225f};

/// (N, 3, H, W) float in [0, 1].
torch::Tensor images_to_unit_tensor(const std::vector<const Image*>& images);
/// Channel-wise mean/std normalization of a [0, 1] tensor.
torch::Tensor normalize_unit_range(const torch::Tensor& x01);
torch::Tensor images_to_tensor(const std::vector<const Image*>& images);
/// (N, H, W) int64.
torch::Tensor labels_to_tensor(const std::vector<const LabelMap*>& labels);

/// Maps a normalized (N, 3, H, W) batch to logits.
using LogitFn = std::function<torch::Tensor(const torch::Tensor&)>;

/// Eval-mode, no-grad inference closure over a model.
LogitFn inference_fn(const Model& model);

}  // namespace seglab
