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

#include <optional>
#include <string>
#include <vector>

#include "seglab/image.hpp"
#include "seglab/rng.hpp"

namespace seglab {

struct ColorConfig {
  double grayscale_prob = 0.1;
  /// Symmetric strength for brightness, contrast and saturation; hue uses half.
  double jitter_strength = 0.27;
};

struct GeomRtkConfig {
  bool enabled = false;
  /// Max corner displacement as a fraction of the corresponding edge.
  double perspective_magnitude = 0.1;
  double hflip_prob = 0.5;
};

/// Augmentation op names accepted in AugmentConfig::pipeline.
inline constexpr const char* kAugmentOps[] = {"crop", "resize", "color", "geom_rtk", "hflip", "cutmix"};

struct AugmentConfig {
  Size2 crop_size{224, 224};
  double resize_low = 0.78;
  double resize_high = 2.0;
  ColorConfig color;
  GeomRtkConfig geom_rtk;
  double cutmix_prob = 0.0;
  double hflip_prob = 0.5;
  /// Ops applied in this exact order.
  std::vector<std::string> pipeline;

  void validate() const;
};

struct Box {
  int top = 0, left = 0, height = 0, width = 0;
  int area() const { return height * width; }
  bool contains(int y, int x) const { return y >= top && y < top + height && x >= left && x < left + width; }
};

/// Reflect-101 padding so both edges are at least `min_size`; the original
/// content sits at the returned offset.
Sample pad_reflect(const Sample& s, Size2 min_size, int* offset_y = nullptr, int* offset_x = nullptr);

Sample crop_at(const Sample& s, const Box& window);
Sample random_crop(const Sample& s, Size2 size, Rng& rng, Box* window = nullptr);

/// Image bilinear (half-pixel centers), label nearest neighbour.
Sample resize_to(const Sample& s, Size2 size);
Sample resize_by(const Sample& s, double scale);
Sample random_resize(const Sample& s, double low, double high, Rng& rng, double* drawn_scale = nullptr);

Sample color_augment(const Sample& s, const ColorConfig& cfg, Rng& rng);

/// Projective warp mapping output pixel (x, y) to source coordinates. Row-major 3x3.
struct Homography {
  double m[9] = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  bool is_identity() const;
};

/// Homography sending the four `dst` corners onto the `src` corners
/// (corners ordered TL, TR, BR, BL as (x, y) pairs).
Homography homography_from_corners(const double src[8], const double dst[8]);
/// Warps image (bilinear) and label (nearest) with replicate borders.
Sample warp_perspective(const Sample& s, const Homography& h);
Sample geom_rtk(const Sample& s, const GeomRtkConfig& cfg, Rng& rng);

Sample random_hflip(const Sample& s, double prob, Rng& rng);

struct CutmixOutcome {
  Sample sample;
  bool applied = false;
  double lambda = 1.0;
  Box box;  // region taken from the partner, when applied
};

/// Box of area ~(1 - lambda) * H * W with the frame's aspect, placed
/// uniformly so it lies inside the frame.
Box cutmix_box(Size2 frame, double lambda, Rng& rng);
CutmixOutcome cutmix_with_lambda(const Sample& a, const Sample& b, double lambda, Rng& rng);
CutmixOutcome cutmix_detailed(const Sample& a, const Sample& b, double prob, Rng& rng);
Sample cutmix(const Sample& a, const Sample& b, double prob, Rng& rng);

/// Runs the per-sample part of the pipeline on one sample (cutmix is skipped).
Sample augment_sample(const Sample& s, const AugmentConfig& cfg, Rng& rng);

/// Runs the full pipeline on a batch. Sample i draws from its own stream
/// `rngs[i]`; cutmix pairs sample i with sample n-1-i of the same batch.
std::vector<Sample> augment_batch(const std::vector<Sample>& batch, const AugmentConfig& cfg,
                                  std::vector<Rng>& rngs);

}  // namespace seglab
