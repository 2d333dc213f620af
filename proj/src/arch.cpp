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

#include "seglab/arch.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace seglab {
namespace {

std::map<std::string, EncoderInfo>& registry() {
  static std::map<std::string, EncoderInfo> r = {
      {"resnet34", {"resnet34", BlockKind::basic, {3, 4, 6, 3}}},
      {"resnet50", {"resnet50", BlockKind::bottleneck, {3, 4, 6, 3}}},
      {"resnet101", {"resnet101", BlockKind::bottleneck, {3, 4, 23, 3}}},
  };
  return r;
}

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

std::string to_string(Family f) { return f == Family::unet ? "unet" : "deeplabv3plus"; }
std::string to_string(Upsampling u) { return u == Upsampling::bilinear ? "bilinear" : "transposed_conv"; }

Family parse_family(const std::string& s) {
  if (s == "unet") return Family::unet;
  if (s == "deeplabv3plus") return Family::deeplabv3plus;
  throw InvalidSpec("unknown architecture family '" + s + "' (expected unet or deeplabv3plus)");
}

Upsampling parse_upsampling(const std::string& s) {
  if (s == "bilinear") return Upsampling::bilinear;
  if (s == "transposed_conv") return Upsampling::transposed_conv;
  throw InvalidSpec("unknown decoder upsampling '" + s + "' (expected bilinear or transposed_conv)");
}

const EncoderInfo& encoder_info(const std::string& name) {
  std::lock_guard lock(registry_mutex());
  auto it = registry().find(name);
  if (it == registry().end()) throw InvalidSpec("encoder '" + name + "' is not registered");
  return it->second;
}

void register_encoder(const EncoderInfo& info) {
  std::lock_guard lock(registry_mutex());
  registry()[info.name] = info;
}

std::vector<std::string> registered_encoders() {
  std::lock_guard lock(registry_mutex());
  std::vector<std::string> names;
  for (const auto& [k, v] : registry()) names.push_back(k);
  return names;
}

void ArchSpec::validate() const {
  const auto& enc = encoder_info(encoder);
  if (num_classes < 2 || num_classes > 255) throw InvalidSpec("num_classes must be in [2, 255]");
  if (!(width_multiplier > 0)) throw InvalidSpec("width_multiplier must be positive");
  if (family == Family::deeplabv3plus) {
    if (output_stride != 4 && output_stride != 8 && output_stride != 16 && output_stride != 32)
      throw InvalidSpec("output_stride must be one of 4, 8, 16, 32");
  }
  if (hlfe) {
    if (family != Family::deeplabv3plus) throw InvalidSpec("hlfe applies to deeplabv3plus only");
    if (output_stride != 4 && output_stride != 8)
      throw InvalidSpec("hlfe requires output_stride 4 or 8 (OS " + std::to_string(output_stride) +
                        " leaves no atrous blocks to reschedule)");
    if (enc.units[2] != static_cast<int>(kHlfeBlock3.size()) || enc.units[3] != static_cast<int>(kHlfeBlock4.size()))
      throw InvalidSpec("hlfe needs 6 units in block 3 and 3 in block 4; encoder '" + encoder + "' has " +
                        std::to_string(enc.units[2]) + " and " + std::to_string(enc.units[3]));
  }
}

std::vector<int> StridePlan::stage_strides() const {
  return {stem_conv_stride, stem_pool_stride, block_strides[0], block_strides[1], block_strides[2], block_strides[3]};
}

StridePlan stride_plan(const ArchSpec& spec) {
  spec.validate();
  const auto& enc = encoder_info(spec.encoder);
  StridePlan p;
  p.stem_conv_stride = 2;
  int cur = 2;
  if (spec.max_pool_in_stem) cur *= 2;
  p.stem_pool_stride = cur;
  p.low_level_stride = cur;

  std::array<int, 4> nominal = {1, 2, 2, 2};
  // U-Net keeps the vanilla encoder; DeepLabV3+ targets the output stride.
  const int vanilla = cur * 8;
  const int target = spec.family == Family::unet ? vanilla : spec.output_stride;
  // Without the stem pool, OS 32 needs one more stride-2 stage; block 1 takes it.
  if (!spec.max_pool_in_stem && target > vanilla) nominal[0] = 2;

  int dilation = 1;
  std::array<int, 4> block_dilation{};
  for (int b = 0; b < 4; ++b) {
    if (cur * nominal[b] <= target) {
      cur *= nominal[b];
      p.block_first_unit_stride[b] = nominal[b];
    } else {
      p.block_first_unit_stride[b] = 1;
      dilation *= nominal[b];
    }
    block_dilation[b] = dilation;
    p.block_strides[b] = cur;
    p.unit_dilations[b].assign(enc.units[b], dilation);
  }
  if (cur != target)
    throw InvalidSpec("cannot reach output stride " + std::to_string(target) + " with this stem");
  p.high_level_stride = cur;

  if (spec.hlfe) {
    for (int u = 0; u < enc.units[2]; ++u) p.unit_dilations[2][u] = block_dilation[2] * kHlfeBlock3[u];
    for (int u = 0; u < enc.units[3]; ++u) p.unit_dilations[3][u] = block_dilation[3] * kHlfeBlock4[u];
  }
  return p;
}

std::array<std::vector<int>, 2> hlfe_schedule(const ArchSpec& spec) {
  ArchSpec on = spec;
  on.hlfe = true;
  const auto plan = stride_plan(on);
  return {plan.unit_dilations[2], plan.unit_dilations[3]};
}

std::array<int, 3> aspp_rates(int output_stride) {
  std::array<int, 3> r = {6, 12, 18};
  for (auto& v : r) v = std::max(1, v * 16 / output_stride);
  return r;
}

int scaled_width(int channels, double multiplier) {
  return std::max(8, static_cast<int>(std::lround(channels * multiplier)));
}

}  // namespace seglab
