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

#include <numeric>

#include <gtest/gtest.h>

#include "../support/oracles.hpp"
#include "seglab/errors.hpp"
#include "seglab/metrics.hpp"
#include "seglab/rng.hpp"

using namespace seglab;

namespace {

LabelMap map2x2(int a, int b, int c, int d) {
  LabelMap m(2, 2);
  m.data = {static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(b), static_cast<std::uint8_t>(c),
            static_cast<std::uint8_t>(d)};
  return m;
}

}  // namespace

TEST(Miou, WorkedExampleIsSevenTwelfths) {
  ConfusionMatrix cm(2);
  cm.accumulate(map2x2(0, 1, 1, 1), map2x2(0, 0, 1, 1));
  const auto r = miou(cm);
  // IoU_0 = 1/2, IoU_1 = 2/3.
  EXPECT_DOUBLE_EQ(*r.iou_per_class[0], 0.5);
  EXPECT_DOUBLE_EQ(*r.iou_per_class[1], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.miou, 7.0 / 12.0);
  EXPECT_DOUBLE_EQ(r.pixel_accuracy, 0.75);
}

TEST(Miou, PerfectPredictionIsOne) {
  ConfusionMatrix cm(3);
  const auto m = map2x2(0, 1, 2, 2);
  cm.accumulate(m, m);
  EXPECT_DOUBLE_EQ(miou(cm).miou, 1.0);
}

TEST(Miou, AbsentClassIsSkippedNotZero) {
  ConfusionMatrix cm(4);
  const auto m = map2x2(0, 0, 1, 1);
  cm.accumulate(m, m);
  const auto r = miou(cm);
  EXPECT_FALSE(r.iou_per_class[3].has_value());
  EXPECT_DOUBLE_EQ(r.miou, 1.0);
}

TEST(Miou, ExcludedClassIsReportedButNotAveraged) {
  ConfusionMatrix cm(2);
  cm.accumulate(map2x2(0, 1, 1, 1), map2x2(0, 0, 1, 1));
  const auto r = miou(cm, 0);
  EXPECT_TRUE(r.iou_per_class[0].has_value());
  EXPECT_DOUBLE_EQ(r.miou, 2.0 / 3.0);
}

TEST(Miou, MatchesPixelSetOracleExactly) {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const int nc = rng.uniform_int(2, 5);
    LabelMap p(8, 8), t(8, 8);
    for (auto& v : p.data) v = static_cast<std::uint8_t>(rng.uniform_int(0, nc - 1));
    for (auto& v : t.data) v = static_cast<std::uint8_t>(rng.uniform_int(0, nc - 1));
    ConfusionMatrix cm(nc);
    cm.accumulate(p, t);
    EXPECT_EQ(miou(cm).miou, oracle::miou_from_sets(p, t, nc)) << "trial " << trial;
  }
}

TEST(Confusion, MergingPartialsEqualsOneAccumulation) {
  Rng rng(5);
  ConfusionMatrix whole(3), a(3), b(3);
  for (int i = 0; i < 6; ++i) {
    LabelMap p(4, 4), t(4, 4);
    for (auto& v : p.data) v = static_cast<std::uint8_t>(rng.uniform_int(0, 2));
    for (auto& v : t.data) v = static_cast<std::uint8_t>(rng.uniform_int(0, 2));
    whole.accumulate(p, t);
    (i % 2 ? a : b).accumulate(p, t);
  }
  a += b;
  EXPECT_EQ(a, whole);
  EXPECT_EQ(whole.total(), 96);
}

TEST(Smoothed, MeanOfLastTenMatchesDirectSlice) {
  Rng rng(3);
  for (int n = 1; n <= 50; ++n) {
    ValidationHistory h;
    std::vector<double> v;
    for (int i = 0; i < n; ++i) {
      v.push_back(rng.uniform());
      h.emplace_back(2000L * (i + 1), v.back());
    }
    const std::size_t k = std::min<std::size_t>(10, n);
    const double direct = std::accumulate(v.end() - static_cast<long>(k), v.end(), 0.0) / static_cast<double>(k);
    EXPECT_EQ(smoothed_validation_score(h), direct) << "n=" << n;
  }
}

TEST(Smoothed, EmptyHistoryIsAnError) { EXPECT_THROW(smoothed_validation_score({}), Error); }

TEST(Spearman, MonotoneAndTiedAndConstant) {
  EXPECT_DOUBLE_EQ(spearman({1, 2, 3, 4}, {10, 20, 30, 40}), 1.0);
  EXPECT_DOUBLE_EQ(spearman({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0);
  EXPECT_EQ(spearman({1, 1, 1}, {1, 2, 3}), 0.0);
  // Average ranks: a = (1.5, 1.5, 3), b = (1, 2, 3) -> r = sqrt(3)/2.
  EXPECT_NEAR(spearman({5, 5, 9}, {1, 2, 3}), std::sqrt(3.0) / 2.0, 1e-12);
}

TEST(Bias, JoinsIouWithSizeStatistics) {
  const auto t = synthetic_taxonomy(3);
  LabelMap m(6, 6);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) m.at(y, x) = 1;
  m.at(5, 5) = 2;
  const auto st = dataset_statistics({Sample{Image(6, 6), m, "a"}}, t);
  ConfusionMatrix cm(3);
  cm.accumulate(m, m);
  const auto b = bias_analysis(miou(cm), st, t);
  ASSERT_EQ(b.rows.size(), 3u);
  EXPECT_DOUBLE_EQ(b.rows[2].median_min_edge, 1.0);
  EXPECT_NE(bias_csv(b).find("class_id"), std::string::npos);
}

TEST(Spurious, IdenticalMapsHaveNone) {
  LabelMap m(10, 10, 1);
  m.at(3, 3) = 2;
  EXPECT_EQ(count_spurious_blobs(m, m, 16), 0);
}

TEST(Spurious, InjectedBlobIsCounted) {
  LabelMap ref(12, 12, 1), pred(12, 12, 1);
  for (int y = 5; y < 7; ++y)
    for (int x = 5; x < 7; ++x) pred.at(y, x) = 0;
  EXPECT_EQ(count_spurious_blobs(pred, ref, 16), 1);
  EXPECT_EQ(count_spurious_blobs(pred, ref, 4), 0);  // area 4 is not below min_area 4
}

TEST(Spurious, InvariantUnderRelabeling) {
  Rng rng(8);
  const std::uint8_t perm[] = {2, 0, 1};
  for (int trial = 0; trial < 50; ++trial) {
    LabelMap p(10, 10), r(10, 10);
    for (auto& v : p.data) v = static_cast<std::uint8_t>(rng.uniform_int(0, 2));
    for (auto& v : r.data) v = static_cast<std::uint8_t>(rng.uniform_int(0, 2));
    LabelMap pp = p, rr = r;
    for (auto& v : pp.data) v = perm[v];
    for (auto& v : rr.data) v = perm[v];
    EXPECT_EQ(count_spurious_blobs(p, r, 6), count_spurious_blobs(pp, rr, 6));
  }
}

TEST(Spurious, DefaultMinAreaIsOneThousandth) {
  EXPECT_EQ(default_spurious_min_area(LabelMap(288, 352)), 101);
  EXPECT_EQ(default_spurious_min_area(LabelMap(4, 4)), 1);
}
