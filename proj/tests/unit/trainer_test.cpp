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

#include <filesystem>
#include <fstream>
#include <limits>
#include <set>

#include <gtest/gtest.h>

#include "seglab/errors.hpp"
#include "seglab/trainer.hpp"

using namespace seglab;
namespace fs = std::filesystem;

namespace {

constexpr int kClasses = 4;

HypothesisConfig tiny_config() {
  HypothesisConfig h;
  h.arch.num_classes = kClasses;
  h.arch.width_multiplier = 0.125;
  h.augment.crop_size = {32, 32};
  h.augment.pipeline = {"crop", "hflip"};
  LossConfig wce;
  wce.terms = {LossTerm{LossKind::wce, 1.0}};
  h.train.stages = {StageConfig{LossConfig{}, 5}, StageConfig{wce, 5}};
  h.train.max_iterations = 10;
  h.train.batch_size = 2;
  h.train.val_every = 3;
  h.train.checkpoint_every = 4;
  h.train.seed = 9;
  h.validate();
  return h;
}

const DatasetSplits& tiny_data() {
  static const DatasetSplits d = split_samples(make_synthetic_fixture(3, 10, {36, 40}, kClasses), 3);
  return d;
}

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("seglab_trainer_" + name);
  fs::remove_all(d);
  return d;
}

std::string model_hash(const fs::path& ckpt) { return load_checkpoint(ckpt).model.parameter_hash(); }

}  // namespace

TEST(BatchIndices, EachEpochVisitsEverySampleOnce) {
  const std::size_t n = 7;
  const int batch = 3;
  std::vector<std::size_t> seen;
  for (long it = 0; it < 7; ++it) {
    const auto b = batch_indices(5, it, batch, n);
    ASSERT_EQ(b.size(), 3u);
    seen.insert(seen.end(), b.begin(), b.end());
  }
  // 21 draws = three full epochs.
  for (int e = 0; e < 3; ++e) {
    std::set<std::size_t> epoch(seen.begin() + e * 7, seen.begin() + (e + 1) * 7);
    EXPECT_EQ(epoch.size(), n);
  }
  EXPECT_EQ(batch_indices(5, 4, batch, n), batch_indices(5, 4, batch, n));
  EXPECT_NE(batch_indices(5, 0, 7, n), batch_indices(6, 0, 7, n));
}

TEST(Trainer, StageSwitchKeepsParametersAndLogsCadence) {
  const auto dir = fresh_dir("switch");
  std::vector<StepInfo> steps;
  TrainOptions opts;
  opts.run_dir = dir;
  opts.on_step = [&](const StepInfo& s) { steps.push_back(s); };
  const auto rec = train(tiny_config(), tiny_data(), opts);
  ASSERT_EQ(rec.stage_switches.size(), 1u);
  const auto& sw = rec.stage_switches[0];
  EXPECT_EQ(sw.iteration, 5);
  EXPECT_EQ(sw.from_stage, 0u);
  EXPECT_EQ(sw.to_stage, 1u);
  EXPECT_EQ(sw.hash_before, sw.hash_after);
  ASSERT_EQ(steps.size(), 10u);
  EXPECT_EQ(steps[4].stage, 0u);
  EXPECT_EQ(steps[5].stage, 1u);
  std::vector<long> val_its;
  for (const auto& [it, v] : rec.history) val_its.push_back(it);
  EXPECT_EQ(val_its, (std::vector<long>{3, 6, 9, 10}));
  EXPECT_EQ(rec.train_loss.size(), 10u);
  EXPECT_TRUE(rec.finished);
  EXPECT_EQ(rec.class_weights.size(), static_cast<std::size_t>(kClasses));
  for (const char* f : {"config.resolved", "history.tsv", "loss.tsv", "events.log", "ckpt_last", "ckpt_best"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  std::ifstream events(dir / "events.log");
  const std::string log((std::istreambuf_iterator<char>(events)), std::istreambuf_iterator<char>());
  EXPECT_NE(log.find(sw.hash_before), std::string::npos);
  EXPECT_EQ(read_checkpoint_meta(dir / "ckpt_last").iteration, 10);
  EXPECT_THROW(train(tiny_config(), tiny_data(), opts), Error);
  fs::remove_all(dir);
}

TEST(Trainer, ResumedRunMatchesUninterruptedRun) {
  const auto full_dir = fresh_dir("full"), split_dir = fresh_dir("split");
  TrainOptions full;
  full.run_dir = full_dir;
  const auto a = train(tiny_config(), tiny_data(), full);

  TrainOptions first;
  first.run_dir = split_dir;
  first.stop_after = 5;
  const auto half = train(tiny_config(), tiny_data(), first);
  EXPECT_FALSE(half.finished);
  EXPECT_EQ(half.iterations_done, 5);
  const auto b = resume(split_dir / "ckpt_last", tiny_data());
  EXPECT_TRUE(b.finished);

  EXPECT_EQ(a.history, b.history);
  EXPECT_EQ(a.train_loss, b.train_loss);
  EXPECT_EQ(model_hash(full_dir / "ckpt_last"), model_hash(split_dir / "ckpt_last"));
  EXPECT_EQ(a.best_iteration, b.best_iteration);
  fs::remove_all(full_dir);
  fs::remove_all(split_dir);
}

TEST(Trainer, ResumeRejectsMismatches) {
  const auto dir = fresh_dir("mismatch");
  TrainOptions opts;
  opts.run_dir = dir;
  opts.stop_after = 2;
  train(tiny_config(), tiny_data(), opts);
  auto other = tiny_config().arch;
  other.num_classes = kClasses + 1;
  EXPECT_THROW(resume(dir / "ckpt_last", tiny_data(), {}, other), IncompatibleCheckpoint);
  other = tiny_config().arch;
  other.encoder = "resnet50";
  EXPECT_THROW(resume(dir / "ckpt_last", tiny_data(), {}, other), IncompatibleCheckpoint);
  const auto wider = split_samples(make_synthetic_fixture(3, 10, {36, 40}, kClasses + 2), 3);
  EXPECT_THROW(resume(dir / "ckpt_last", wider), IncompatibleCheckpoint);
  EXPECT_THROW(resume(dir / "missing", tiny_data()), Error);
  fs::remove_all(dir);
}

TEST(Trainer, ResumeOfFinishedRunTakesNoSteps) {
  const auto dir = fresh_dir("done");
  TrainOptions opts;
  opts.run_dir = dir;
  const auto a = train(tiny_config(), tiny_data(), opts);
  int steps = 0;
  TrainOptions again;
  again.on_step = [&](const StepInfo&) { ++steps; };
  const auto b = resume(dir / "ckpt_last", tiny_data(), again);
  EXPECT_EQ(steps, 0);
  EXPECT_EQ(b.iterations_done, 10);
  EXPECT_EQ(b.history, a.history);
  fs::remove_all(dir);
}

TEST(Trainer, NonFiniteLossAbortsAfterSavingState) {
  const auto dir = fresh_dir("nan");
  auto cfg = tiny_config();
  cfg.train.stages[0].loss.terms = {LossTerm{LossKind::wce, 1.0}};
  cfg.train.stages[0].loss.class_weights = std::vector<double>(kClasses, std::numeric_limits<double>::infinity());
  TrainOptions opts;
  opts.run_dir = dir;
  EXPECT_THROW(train(cfg, tiny_data(), opts), TrainingAborted);
  EXPECT_TRUE(fs::exists(dir / "ckpt_last"));
  fs::remove_all(dir);
}

TEST(Trainer, InMemoryRunWritesNothing) {
  auto cfg = tiny_config();
  cfg.train.stages = {StageConfig{LossConfig{}, 2}};
  cfg.train.max_iterations = 2;
  const auto rec = train(cfg, tiny_data());
  EXPECT_EQ(rec.iterations_done, 2);
  EXPECT_TRUE(rec.last_checkpoint.empty());
  EXPECT_EQ(rec.history.size(), 1u);
}

TEST(Trainer, LabelsOutsideTaxonomyAreRejected) {
  const auto wider = split_samples(make_synthetic_fixture(3, 10, {36, 40}, kClasses + 2), 3);
  EXPECT_THROW(train(tiny_config(), wider), Error);
}
