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

#include <gtest/gtest.h>

#include "seglab/introspection.hpp"

using namespace seglab;

namespace {

Model tiny_model(std::uint64_t seed = 2) {
  ArchSpec a;
  a.num_classes = 4;
  a.width_multiplier = 0.125;
  return build_model(a, seed);
}

InputOptimizationConfig small(int steps) {
  InputOptimizationConfig c;
  c.size = {32, 32};
  c.steps = steps;
  c.step_size = 0.05;
  c.seed = 1;
  return c;
}

}  // namespace

TEST(Introspection, ZeroStepsReturnsInitialization) {
  const auto t = optimize_input(tiny_model(), 1, small(0));
  ASSERT_EQ(t.objective.size(), 1u);
  EXPECT_GE(t.input.min().item<float>(), 0.45f);
  EXPECT_LE(t.input.max().item<float>(), 0.55f);
  EXPECT_EQ(t.image.height, 32);
}

TEST(Introspection, DeterministicAndRaisesObjective) {
  const auto m = tiny_model();
  const auto a = optimize_input(m, 2, small(10));
  const auto b = optimize_input(m, 2, small(10));
  EXPECT_TRUE(torch::equal(a.input, b.input));
  EXPECT_EQ(a.objective, b.objective);
  ASSERT_EQ(a.objective.size(), 11u);
  EXPECT_GT(a.objective.back(), a.objective.front());
  EXPECT_FALSE(a.aborted);
}

TEST(Introspection, StaysInUnitRangeAndLeavesModelAlone) {
  const auto m = tiny_model();
  m.train(true);
  const auto before = m.parameter_hash();
  auto cfg = small(8);
  cfg.step_size = 0.5;
  cfg.use_probability = true;
  const auto t = optimize_input(m, 0, cfg);
  EXPECT_GE(t.input.min().item<float>(), 0.0f);
  EXPECT_LE(t.input.max().item<float>(), 1.0f);
  EXPECT_EQ(m.parameter_hash(), before);
  EXPECT_TRUE(m.is_training());
}

TEST(Introspection, ZeroClassifierGivesFlatObjective) {
  const auto m = tiny_model();
  {
    torch::NoGradGuard ng;
    for (auto& p : m.module().named_parameters())
      if (p.key().rfind("head", 0) == 0) p.value().zero_();
  }
  const auto t = optimize_input(m, 3, small(5));
  for (double v : t.objective) EXPECT_EQ(v, 0.0);
  const auto init = optimize_input(m, 3, small(0));
  EXPECT_TRUE(torch::equal(t.input, init.input));
}

TEST(Introspection, ImageConversionRounds) {
  auto x = torch::zeros({1, 3, 1, 2});
  x[0][0][0][1] = 1.0;
  x[0][2][0][0] = 0.5;
  const auto img = unit_tensor_to_image(x);
  EXPECT_EQ(img.at(0, 1, 0), 255);
  EXPECT_EQ(img.at(0, 0, 2), 128);
}
