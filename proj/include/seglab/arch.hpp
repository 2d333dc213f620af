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
#include <string>
#include <vector>

#include "seglab/errors.hpp"

namespace seglab {

enum class Family { unet, deeplabv3plus };
enum class Upsampling { bilinear, transposed_conv };

std::string to_string(Family f);
std::string to_string(Upsampling u);
Family parse_family(const std::string& s);
Upsampling parse_upsampling(const std::string& s);

enum class BlockKind { basic, bottleneck };

/// Residual encoder layout: unit type and units per block (blocks 1..4).
struct EncoderInfo {
  std::string name;
  BlockKind kind = BlockKind::basic;
  std::array<int, 4> units{};
};

/// Registered encoders (resnet34/50/101 built in). Unknown names throw InvalidSpec.
const EncoderInfo& encoder_info(const std::string& name);
void register_encoder(const EncoderInfo& info);
std::vector<std::string> registered_encoders();

struct ArchSpec {
  Family family = Family::unet;
  std::string encoder = "resnet34";
  int output_stride = 16;  // honored by deeplabv3plus only
  bool max_pool_in_stem = true;
  bool hlfe = false;
  Upsampling decoder_upsampling = Upsampling::bilinear;
  int num_classes = 12;
  /// Channel multiplier for every layer; 1.0 is the standard network.
  double width_multiplier = 1.0;
  /// Optional encoder weights file; empty means random initialisation.
  std::string encoder_weights;

  /// Throws InvalidSpec when the combination cannot be built.
  void validate() const;
  friend bool operator==(const ArchSpec&, const ArchSpec&) = default;
};

/// Symbolic stride/dilation bookkeeping for an ArchSpec.
struct StridePlan {
  int stem_conv_stride = 2;
  int stem_pool_stride = 4;                // cumulative after the (optional) max-pool
  std::array<int, 4> block_strides{};      // cumulative after each block
  std::array<int, 4> block_first_unit_stride{};
  std::array<std::vector<int>, 4> unit_dilations;  // per unit, per block
  int low_level_stride = 4;
  int high_level_stride = 32;

  /// (stem conv, stem pool, block1..block4) cumulative strides.
  std::vector<int> stage_strides() const;
};

StridePlan stride_plan(const ArchSpec& spec);

/// Per-unit dilations for blocks 3 and 4 under the hybrid local feature
/// extractor: [1,3,5,5,3,1] and [1,3,1] times each block's atrous rate.
std::array<std::vector<int>, 2> hlfe_schedule(const ArchSpec& spec);

inline constexpr std::array<int, 6> kHlfeBlock3 = {1, 3, 5, 5, 3, 1};
inline constexpr std::array<int, 3> kHlfeBlock4 = {1, 3, 1};

/// ASPP atrous rates: (6, 12, 18) at OS 16, scaled by 16 / OS.
std::array<int, 3> aspp_rates(int output_stride);

/// Channel count after applying the width multiplier (never below 8).
int scaled_width(int channels, double multiplier);

}  // namespace seglab
