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

#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "seglab/augmentation.hpp"
#include "seglab/dataset.hpp"

using namespace seglab;

namespace {

// Every pixel carries its own coordinates so provenance can be read back.
Sample coordinate_sample(int h, int w, std::uint8_t tag, std::uint8_t cls) {
  Sample s{Image(h, w), LabelMap(h, w, cls), "s"};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) s.image.set(y, x, {static_cast<std::uint8_t>(y), static_cast<std::uint8_t>(x), tag});
  return s;
}

std::set<int> label_set(const LabelMap& m) { return {m.data.begin(), m.data.end()}; }

}  // namespace

TEST(Crop, WindowStaysInsideAndCopiesContent) {
  const auto s = coordinate_sample(40, 50, 0, 1);
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    Box win;
    const auto c = random_crop(s, {16, 20}, rng, &win);
    ASSERT_EQ(c.image.height, 16);
    ASSERT_EQ(c.label.width, 20);
    EXPECT_GE(win.top, 0);
    EXPECT_LE(win.top + 16, 40);
    EXPECT_LE(win.left + 20, 50);
    EXPECT_EQ(c.image.pixel(0, 0), s.image.pixel(win.top, win.left));
    EXPECT_EQ(c.image.pixel(15, 19), s.image.pixel(win.top + 15, win.left + 19));
  }
}

TEST(Crop, SmallInputIsReflectPaddedFirst) {
  const auto s = coordinate_sample(10, 12, 0, 2);
  Rng rng(2);
  const auto c = random_crop(s, {16, 16}, rng);
  EXPECT_EQ(c.image.height, 16);
  EXPECT_EQ(c.image.width, 16);
  EXPECT_EQ(label_set(c.label), (std::set<int>{2}));
}

TEST(Crop, ReflectPaddingMirrorsWithoutRepeatingTheEdge) {
  Sample s{Image(1, 3), LabelMap(1, 3), "r"};
  for (int x = 0; x < 3; ++x) s.image.set(0, x, {static_cast<std::uint8_t>(x + 1), 0, 0});
  int oy = -1, ox = -1;
  const auto p = pad_reflect(s, {1, 5}, &oy, &ox);
  ASSERT_EQ(p.image.width, 5);
  EXPECT_EQ(ox, 1);
  // reflect-101 of [1 2 3] with one pixel each side: [2 1 2 3 2]
  const int want[] = {2, 1, 2, 3, 2};
  for (int x = 0; x < 5; ++x) EXPECT_EQ(p.image.at(0, x, 0), want[x]);
}

TEST(Resize, LabelsStayOnTheLabelSet) {
  auto s = make_synthetic_fixture(3, 1, {48, 64}, 5)[0];
  Rng rng(4);
  for (int i = 0; i < 20; ++i) {
    double scale = 0;
    const auto r = random_resize(s, 0.78, 2.0, rng, &scale);
    EXPECT_GE(scale, 0.78);
    EXPECT_LE(scale, 2.0);
    EXPECT_EQ(r.image.height, static_cast<int>(std::lround(48 * scale)));
    for (auto v : label_set(r.label)) EXPECT_TRUE(label_set(s.label).count(v));
  }
}

TEST(Resize, SameSizeIsIdentity) {
  const auto s = make_synthetic_fixture(3, 1, {32, 40}, 3)[0];
  const auto r = resize_to(s, {32, 40});
  EXPECT_EQ(r.image, s.image);
  EXPECT_EQ(r.label, s.label);
}

TEST(Color, ZeroStrengthAndNoGrayscaleIsIdentity) {
  const auto s = make_synthetic_fixture(6, 1, {32, 32}, 3)[0];
  Rng rng(0);
  const auto c = color_augment(s, {0.0, 0.0}, rng);
  EXPECT_EQ(c.image, s.image);
}

TEST(Color, LabelsUntouchedAndGrayscaleEqualizesChannels) {
  const auto s = make_synthetic_fixture(6, 1, {32, 32}, 3)[0];
  Rng rng(0);
  const auto c = color_augment(s, {1.0, 0.0}, rng);
  EXPECT_EQ(c.label, s.label);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) {
      EXPECT_EQ(c.image.at(y, x, 0), c.image.at(y, x, 1));
      EXPECT_EQ(c.image.at(y, x, 1), c.image.at(y, x, 2));
    }
}

TEST(Geometry, HomographyFromIdenticalCornersIsIdentity) {
  const double c[8] = {0, 0, 9, 0, 9, 7, 0, 7};
  EXPECT_TRUE(homography_from_corners(c, c).is_identity());
}

TEST(Geometry, HomographyMapsCornersOntoCorners) {
  const double src[8] = {1, 2, 30, 0, 33, 25, -2, 27};
  const double dst[8] = {0, 0, 31, 0, 31, 23, 0, 23};
  const auto h = homography_from_corners(src, dst);
  for (int k = 0; k < 4; ++k) {
    const double x = dst[2 * k], y = dst[2 * k + 1];
    const double w = h.m[6] * x + h.m[7] * y + h.m[8];
    EXPECT_NEAR((h.m[0] * x + h.m[1] * y + h.m[2]) / w, src[2 * k], 1e-9);
    EXPECT_NEAR((h.m[3] * x + h.m[4] * y + h.m[5]) / w, src[2 * k + 1], 1e-9);
  }
}

TEST(Geometry, GeomRtkNeverInventsLabels) {
  const auto s = make_synthetic_fixture(8, 1, {48, 56}, 6)[0];
  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    const auto g = geom_rtk(s, {true, 0.15, 0.5}, rng);
    EXPECT_EQ(g.image.height, 48);
    for (auto v : label_set(g.label)) EXPECT_TRUE(label_set(s.label).count(v));
  }
}

TEST(Geometry, ZeroMagnitudeNoFlipIsIdentity) {
  const auto s = make_synthetic_fixture(8, 1, {48, 56}, 6)[0];
  Rng rng(5);
  const auto g = geom_rtk(s, {true, 0.0, 0.0}, rng);
  EXPECT_EQ(g.image, s.image);
  EXPECT_EQ(g.label, s.label);
}

TEST(Flip, AlwaysFlipMirrorsColumns) {
  const auto s = coordinate_sample(4, 7, 0, 1);
  Rng rng(1);
  const auto f = random_hflip(s, 1.0, rng);
  EXPECT_EQ(f.image.pixel(2, 0), s.image.pixel(2, 6));
  EXPECT_EQ(hflip(f.image), s.image);
}

TEST(Cutmix, ProbabilityZeroIsBitExactIdentity) {
  const auto a = coordinate_sample(20, 30, 0, 1), b = coordinate_sample(20, 30, 255, 2);
  Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    const auto out = cutmix_detailed(a, b, 0.0, rng);
    EXPECT_FALSE(out.applied);
    EXPECT_EQ(out.sample.image, a.image);
    EXPECT_EQ(out.sample.label, a.label);
  }
}

TEST(Cutmix, ForeignRegionIsTheReportedBox) {
  const auto a = coordinate_sample(20, 30, 0, 1), b = coordinate_sample(20, 30, 255, 2);
  Rng rng(9);
  for (int i = 0; i < 100; ++i) {
    const auto out = cutmix_detailed(a, b, 1.0, rng);
    ASSERT_TRUE(out.applied);
    for (int y = 0; y < 20; ++y)
      for (int x = 0; x < 30; ++x) {
        const bool foreign = out.sample.image.at(y, x, 2) == 255;
        EXPECT_EQ(foreign, out.box.contains(y, x));
        EXPECT_EQ(out.sample.label.at(y, x), foreign ? 2 : 1);
      }
  }
}

TEST(Cutmix, MismatchedSizesAreRejected) {
  const auto a = coordinate_sample(20, 30, 0, 1), b = coordinate_sample(20, 31, 255, 2);
  Rng rng(1);
  EXPECT_THROW(cutmix(a, b, 1.0, rng), Error);
}

TEST(Pipeline, SameStreamSameResult) {
  const auto s = make_synthetic_fixture(2, 1, {64, 64}, 4)[0];
  AugmentConfig cfg;
  cfg.crop_size = {32, 32};
  cfg.pipeline = {"resize", "crop", "color", "geom_rtk", "hflip"};
  Rng r1(99), r2(99);
  const auto a = augment_sample(s, cfg, r1), b = augment_sample(s, cfg, r2);
  EXPECT_EQ(a.image, b.image);
  EXPECT_EQ(a.label, b.label);
  EXPECT_EQ(a.image.height, 32);
}

TEST(Pipeline, BatchCutmixPairsWithMirrorIndex) {
  std::vector<Sample> batch{coordinate_sample(16, 16, 10, 1), coordinate_sample(16, 16, 20, 2),
                            coordinate_sample(16, 16, 30, 3)};
  AugmentConfig cfg;
  cfg.pipeline = {"cutmix"};
  cfg.cutmix_prob = 1.0;
  std::vector<Rng> rngs{Rng(1), Rng(2), Rng(3)};
  const auto out = augment_batch(batch, cfg, rngs);
  for (int i : {0, 2})
    for (auto v : label_set(out[i].label)) EXPECT_TRUE(v == 1 || v == 3);
  EXPECT_EQ(label_set(out[1].label), (std::set<int>{2}));
}

TEST(Pipeline, UnknownOpIsRejected) {
  AugmentConfig cfg;
  cfg.pipeline = {"crop", "mixup"};
  EXPECT_THROW(cfg.validate(), ConfigError);
}
