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

#include <functional>
#include <map>

#include <gtest/gtest.h>

#include "seglab/errors.hpp"
#include "seglab/pisss.hpp"

using namespace seglab;

namespace {

HypothesisConfig small_config() {
  HypothesisConfig h;
  h.arch.family = Family::deeplabv3plus;
  h.arch.encoder = "resnet50";
  h.augment.pipeline = {"crop"};
  h.train.stages = {StageConfig{LossConfig{}, 1000}};
  h.train.max_iterations = 1000;
  return h;
}

// Scores a config by output stride and seed; records every call.
class FakeRunner : public HypothesisRunner {
 public:
  std::function<HypothesisOutcome(const HypothesisConfig&)> score = [](const HypothesisConfig& c) {
    HypothesisOutcome o;
    o.ok = true;
    o.score = 0.70 + 0.001 * c.arch.output_stride;
    return o;
  };
  int train_calls = 0;
  int eval_calls = 0;

  HypothesisOutcome train(const HypothesisConfig& c) override {
    ++train_calls;
    return score(c);
  }
  HypothesisOutcome evaluate(const HypothesisConfig&, const HypothesisConfig& c) override {
    ++eval_calls;
    HypothesisOutcome o;
    o.ok = true;
    o.score = c.ensemble.strategy == EnsembleStrategy::flipped ? 0.8 : 0.7;
    return o;
  }
};

HypothesisOutcome fixed(double s) {
  HypothesisOutcome o;
  o.ok = true;
  o.score = s;
  return o;
}

HypothesisOutcome failed() {
  HypothesisOutcome o;
  o.error = "boom";
  return o;
}

Hypothesis hyp(const std::string& label, Json patch = Json::object()) { return Hypothesis{label, std::move(patch), {}}; }

Experiment os_experiment() {
  Experiment e;
  e.name = "OS";
  e.category = Category::A;
  e.part = "Part 2";
  e.hypotheses = {hyp("OS16"), hyp("OS8", {{"arch", {{"output_stride", 8}}}}),
                  hyp("OS4", {{"arch", {{"output_stride", 4}}}})};
  return e;
}

Experiment seed_experiment(const std::vector<int>& seeds) {
  Experiment e;
  e.name = "Seeds";
  e.category = Category::T;
  e.part = "Part 1";
  for (int s : seeds) e.hypotheses.push_back(hyp("s" + std::to_string(s), {{"train", {{"seed", s}}}}));
  return e;
}

Plan plan_with(std::vector<Experiment> exps) {
  Plan p;
  p.name = "test";
  p.initial_config = small_config();
  p.experiments = std::move(exps);
  return p;
}

FakeRunner by_seed(std::map<int, HypothesisOutcome> table) {
  FakeRunner r;
  r.score = [table](const HypothesisConfig& c) { return table.at(static_cast<int>(c.train.seed)); };
  return r;
}

std::filesystem::path source_path(const std::string& rel) { return std::filesystem::path(SEGLAB_SOURCE_DIR) / rel; }

}  // namespace

TEST(Argmax, FirstListedWinsTies) {
  EXPECT_EQ(argmax_first({0.5, 0.7, 0.7}), 1u);
  EXPECT_EQ(argmax_first({0.2}), 0u);
  const double ninf = -std::numeric_limits<double>::infinity();
  EXPECT_EQ(argmax_first({ninf, 0.1, ninf}), 1u);
  EXPECT_FALSE(argmax_first({ninf, ninf}).has_value());
  EXPECT_FALSE(argmax_first({std::nan("")}).has_value());
}

TEST(RunExperiment, HigherScoreWinsAndBecomesIncumbent) {
  auto runner = by_seed({{0, fixed(0.732)}, {1, fixed(0.739)}});
  auto ledger = start_ledger(plan_with({}));
  run_experiment(ledger, seed_experiment({0, 1}), runner);
  ASSERT_EQ(ledger.experiments.size(), 1u);
  const auto& rec = ledger.experiments[0];
  EXPECT_EQ(rec.winner, 1u);
  EXPECT_TRUE(rec.results[1].winner);
  EXPECT_FALSE(rec.results[0].winner);
  EXPECT_EQ(ledger.best_so_far.train.seed, 1u);
  EXPECT_EQ(rec.base_hash, config_hash(small_config()));
}

TEST(RunExperiment, SingleHypothesisWins) {
  auto runner = by_seed({{3, fixed(0.1)}});
  auto ledger = start_ledger(plan_with({}));
  run_experiment(ledger, seed_experiment({3}), runner);
  EXPECT_EQ(ledger.experiments[0].winner, 0u);
  EXPECT_EQ(ledger.best_so_far.train.seed, 3u);
}

TEST(RunExperiment, TieGoesToFirstListed) {
  auto runner = by_seed({{4, fixed(0.5)}, {2, fixed(0.5)}});
  auto ledger = start_ledger(plan_with({}));
  run_experiment(ledger, seed_experiment({4, 2}), runner);
  EXPECT_EQ(ledger.best_so_far.train.seed, 4u);
}

TEST(RunExperiment, FailedHypothesisCannotWin) {
  auto runner = by_seed({{0, failed()}, {1, fixed(0.01)}});
  auto ledger = start_ledger(plan_with({}));
  run_experiment(ledger, seed_experiment({0, 1}), runner);
  EXPECT_EQ(ledger.experiments[0].winner, 1u);
  EXPECT_EQ(ledger.experiments[0].results[0].outcome.error, "boom");
}

TEST(RunExperiment, AllFailedLeavesLedgerUntouched) {
  auto runner = by_seed({{0, failed()}, {1, failed()}});
  auto ledger = start_ledger(plan_with({}));
  const auto before = ledger.hash();
  EXPECT_THROW(run_experiment(ledger, seed_experiment({0, 1}), runner), Error);
  EXPECT_EQ(ledger.hash(), before);
  EXPECT_TRUE(ledger.experiments.empty());
  EXPECT_TRUE(ledger.memo.empty());
}

TEST(RunExperiment, InvalidPatchFailsOnlyThatHypothesis) {
  FakeRunner runner;
  auto ledger = start_ledger(plan_with({}));
  auto e = os_experiment();
  e.hypotheses.push_back(hyp("HLFE OS16", {{"arch", {{"hlfe", true}}}}));
  run_experiment(ledger, e, runner);
  const auto& r = ledger.experiments[0].results.back();
  EXPECT_FALSE(r.outcome.ok);
  EXPECT_FALSE(r.outcome.error.empty());
  EXPECT_EQ(runner.train_calls, 3);
}

TEST(RunExperiment, PinOverridesScoreAndIsMarked) {
  FakeRunner runner;
  auto ledger = start_ledger(plan_with({}));
  auto e = os_experiment();
  e.pin = "OS8";
  run_experiment(ledger, e, runner);
  EXPECT_EQ(ledger.experiments[0].winner, 1u);
  EXPECT_TRUE(ledger.experiments[0].pinned);
  EXPECT_EQ(ledger.best_so_far.arch.output_stride, 8);
}

TEST(RunExperiment, PinOnFailedHypothesisFallsBackToArgmax) {
  auto runner = by_seed({{0, failed()}, {1, fixed(0.3)}});
  auto ledger = start_ledger(plan_with({}));
  auto e = seed_experiment({0, 1});
  e.pin = "s0";
  run_experiment(ledger, e, runner);
  EXPECT_EQ(ledger.experiments[0].winner, 1u);
  EXPECT_FALSE(ledger.experiments[0].pinned);
}

TEST(RunExperiment, IdenticalConfigsAreTrainedOnce) {
  FakeRunner runner;
  auto ledger = start_ledger(plan_with({}));
  auto e = os_experiment();
  e.hypotheses.insert(e.hypotheses.begin(), hyp("incumbent"));
  run_experiment(ledger, e, runner);
  EXPECT_EQ(runner.train_calls, 3);
  // Ensemble-only differences share the training run.
  Experiment e2;
  e2.name = "Vote";
  e2.category = Category::T;
  e2.hypotheses = {hyp("hard"), hyp("soft", {{"ensemble", {{"vote_mode", "soft"}}}})};
  run_experiment(ledger, e2, runner);
  EXPECT_EQ(runner.train_calls, 3);
}

TEST(RunExperiment, PredictionCategoryEvaluatesCheckpoints) {
  FakeRunner runner;
  auto ledger = start_ledger(plan_with({}));
  Experiment e;
  e.name = "Voting Ensemble";
  e.category = Category::P;
  e.hypotheses = {hyp("Single"), hyp("Flipped", {{"ensemble", {{"strategy", "flipped"}}}})};
  run_experiment(ledger, e, runner);
  EXPECT_EQ(runner.train_calls, 0);
  EXPECT_EQ(runner.eval_calls, 2);
  EXPECT_EQ(ledger.best_so_far.ensemble.strategy, EnsembleStrategy::flipped);
}

TEST(RunPlan, ReplayReproducesIncumbentHash) {
  FakeRunner runner;
  const auto plan = plan_with({seed_experiment({0, 1}), os_experiment()});
  auto ledger = start_ledger(plan);
  int calls = 0;
  run_plan(ledger, plan, runner, [&](const Ledger&) { ++calls; });
  EXPECT_EQ(calls, 2);
  EXPECT_EQ(config_hash(replay(ledger)), config_hash(ledger.best_so_far));
  EXPECT_EQ(ledger.best_so_far.arch.output_stride, 16);
}

TEST(RunPlan, ResumesAfterCompletedExperiments) {
  FakeRunner runner;
  const auto plan = plan_with({seed_experiment({0, 1}), os_experiment()});
  auto partial = start_ledger(plan);
  run_experiment(partial, plan.experiments[0], runner);
  auto full = start_ledger(plan);
  FakeRunner other;
  run_plan(full, plan, other);
  const int before = runner.train_calls;
  run_plan(partial, plan, runner);
  EXPECT_EQ(runner.train_calls - before, 2);  // OS16 is the memoized incumbent
  EXPECT_EQ(partial.hash(), full.hash());

  auto wrong = plan_with({os_experiment(), seed_experiment({0, 1})});
  EXPECT_THROW(run_plan(partial, wrong, runner), ConfigError);
}

TEST(LedgerJson, RoundTripKeepsHash) {
  auto runner = by_seed({{0, failed()}, {1, fixed(0.25)}});
  const auto plan = plan_with({seed_experiment({0, 1}), os_experiment()});
  auto ledger = start_ledger(plan);
  runner.score = [](const HypothesisConfig& c) { return c.train.seed == 0 ? failed() : fixed(0.1 * c.arch.output_stride); };
  run_plan(ledger, plan, runner);
  const auto back = ledger_from_json(to_json(ledger));
  EXPECT_EQ(back.hash(), ledger.hash());
  EXPECT_EQ(to_json(back).dump(), to_json(ledger).dump());

  const auto path = std::filesystem::temp_directory_path() / "seglab_ledger_test.json";
  save_ledger(path, ledger);
  EXPECT_EQ(load_ledger(path).hash(), ledger.hash());
  std::filesystem::remove(path);
}

TEST(Report, OneWinnerPerExperimentAndScoresRoundTrip) {
  FakeRunner runner;
  runner.score = [](const HypothesisConfig& c) {
    return c.arch.output_stride == 4 ? failed() : fixed(1.0 / 3.0 + c.arch.output_stride);
  };
  const auto plan = plan_with({os_experiment(), seed_experiment({5, 6})});
  auto ledger = start_ledger(plan);
  run_plan(ledger, plan, runner);
  const auto rep = emit_report(ledger);
  const auto rows = parse_report_csv(rep.csv);
  ASSERT_EQ(rows.size(), 5u);
  std::map<std::string, int> winners;
  for (const auto& r : rows) winners[r.experiment] += r.winner;
  EXPECT_EQ(winners["OS"], 1);
  EXPECT_EQ(winners["Seeds"], 1);
  std::size_t i = 0;
  for (const auto& e : ledger.experiments)
    for (const auto& res : e.results) {
      const auto& row = rows[i++];
      EXPECT_EQ(row.hypothesis, res.label);
      if (res.outcome.ok) {
        ASSERT_TRUE(row.score.has_value());
        EXPECT_EQ(*row.score, res.outcome.score);
      } else {
        EXPECT_FALSE(row.score.has_value());
      }
    }
  EXPECT_NE(rep.text.find("failed"), std::string::npos);
  EXPECT_NE(rep.text.find("Part 2"), std::string::npos);
  EXPECT_NE(rep.text.find("mIoU"), std::string::npos);
}

TEST(Report, DisplayColumnsAndQuotedFields) {
  FakeRunner runner;
  auto ledger = start_ledger(plan_with({}));
  Experiment e;
  e.name = "Arch, pinned";
  e.category = Category::A;
  e.part = "Part 2";
  e.hypotheses = {Hypothesis{"DL3+ \"R50\"", Json::object(), {{"Enc", "R50"}}},
                  Hypothesis{"OS8", {{"arch", {{"output_stride", 8}}}}, {{"Enc", "R50"}, {"OS", "8"}}}};
  e.pin = "OS8";
  run_experiment(ledger, e, runner);
  const auto rep = emit_report(ledger);
  EXPECT_EQ(rep.csv.substr(0, rep.csv.find('\n')),
            "part,experiment,category,hypothesis,config_hash,status,score,winner,Enc,OS");
  const auto rows = parse_report_csv(rep.csv);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].experiment, "Arch, pinned");
  EXPECT_EQ(rows[0].hypothesis, "DL3+ \"R50\"");
  EXPECT_TRUE(rows[1].winner);
  EXPECT_NE(rep.text.find("* (pinned)"), std::string::npos);
}

TEST(Report, EmptyLedgerHasHeaderOnly) {
  const auto rep = emit_report(start_ledger(plan_with({})));
  EXPECT_EQ(rep.csv, "part,experiment,category,hypothesis,config_hash,status,score,winner\n");
  EXPECT_TRUE(parse_report_csv(rep.csv).empty());
}

TEST(PlanJson, RejectsUnknownPatchKeysAtLoad) {
  Json j = {{"schema_version", 1},
            {"name", "p"},
            {"initial_config", to_json(small_config())},
            {"experiments",
             Json::array({{{"name", "X"},
                           {"category", "A"},
                           {"hypotheses", Json::array({{{"label", "a"}, {"patch", {{"arch", {{"stride", 8}}}}}}})}}})}};
  EXPECT_THROW(plan_from_json(j), ConfigError);
  j["experiments"][0]["hypotheses"][0]["patch"] = {{"arch", {{"output_stride", 8}}}};
  EXPECT_EQ(plan_from_json(j).experiments.size(), 1u);
  j["schema_version"] = 2;
  EXPECT_THROW(plan_from_json(j), ConfigError);
  j["schema_version"] = 1;
  j["experiments"][0]["category"] = "Z";
  EXPECT_THROW(plan_from_json(j), ConfigError);
}

TEST(PresetPlans, RtkHasFourteenExperimentsFromTheBaseline) {
  const auto p = load_plan(source_path("plans/rtk.json"));
  EXPECT_EQ(p.experiments.size(), 14u);
  EXPECT_EQ(p.initial_config.arch.family, Family::unet);
  EXPECT_EQ(p.initial_config.arch.encoder, "resnet34");
  EXPECT_EQ(p.initial_config.arch.num_classes, 12);
  ASSERT_EQ(p.initial_config.train.stages.size(), 2u);
  EXPECT_EQ(p.initial_config.train.stages[0].iterations, 7000);
  EXPECT_TRUE(p.initial_config.train.stages[1].loss.uses(LossKind::wce));
  EXPECT_EQ(p.experiments.back().category, Category::P);
  EXPECT_TRUE(p.dry_run.has_value());
}

TEST(PresetPlans, Tas500StartsFromTheTunedRtkRecipe) {
  const auto p = load_plan(source_path("plans/tas500.json"));
  const auto& c = p.initial_config;
  EXPECT_EQ(c.arch.family, Family::deeplabv3plus);
  EXPECT_EQ(c.arch.encoder, "resnet50");
  EXPECT_EQ(c.arch.output_stride, 16);
  EXPECT_TRUE(c.arch.max_pool_in_stem);
  EXPECT_EQ(c.train.optimizer.kind, OptimizerKind::adam);
  EXPECT_DOUBLE_EQ(c.train.optimizer.lr, 5e-5);
  EXPECT_EQ(c.train.batch_size, 4);
  EXPECT_EQ(p.experiments.back().name, "Voting Ensemble");
}

TEST(PresetPlans, BaselineHasNoExperiments) {
  const auto p = load_plan(source_path("plans/baseline.json"));
  EXPECT_TRUE(p.experiments.empty());
  EXPECT_EQ(p.initial_config.train.max_iterations, 14000);
  EXPECT_EQ(p.initial_config.augment.pipeline, std::vector<std::string>{"geom_rtk"});
}

TEST(Display, ComputedCellsDescribeTheResolvedConfig) {
  auto c = small_config();
  c.arch.output_stride = 8;
  c.arch.max_pool_in_stem = false;
  c.augment.pipeline = {"resize", "crop", "cutmix"};
  c.augment.cutmix_prob = 0.8;
  c.train.stages = {StageConfig{LossConfig{{LossTerm{LossKind::ce, 1}, LossTerm{LossKind::soft_dice, 1}}}, 200000}};
  c.train.max_iterations = 200000;
  const auto j = to_json(c);
  EXPECT_EQ(describe_config(j, "arch"), "DL3+");
  EXPECT_EQ(describe_config(j, "encoder"), "ResNet-50");
  EXPECT_EQ(describe_config(j, "encoder_short"), "R50");
  EXPECT_EQ(describe_config(j, "os"), "8");
  EXPECT_EQ(describe_config(j, "wo_mp"), "yes");
  EXPECT_EQ(describe_config(j, "aug"), "Resizing+Crop+Cutmix80");
  EXPECT_EQ(describe_config(j, "cutmix"), "80%");
  auto no_crop = j;
  no_crop["augment"]["pipeline"] = Json::array({"cutmix"});
  EXPECT_EQ(describe_config(no_crop, "cutmix"), "80% w/o crop");
  EXPECT_EQ(describe_config(j, "losses"), "CE+dice");
  EXPECT_EQ(describe_config(j, "iters"), "200k");
  EXPECT_EQ(describe_config(j, "strategy"), "Single Prediction");
  EXPECT_THROW(describe_config(j, "colour"), ConfigError);

  auto u = to_json(HypothesisConfig{});
  u["arch"]["encoder"] = "res2net101";
  u["augment"]["pipeline"] = Json::array();
  EXPECT_EQ(describe_config(u, "os"), "-");
  EXPECT_EQ(describe_config(u, "encoder"), "Res2Net-101");
  EXPECT_EQ(describe_config(u, "aug"), "None");

  const Json rendered = render_display({{"Enc", "=encoder_short"}, {"Note", "fixed"}}, j);
  EXPECT_EQ(rendered, (Json{{"Enc", "R50"}, {"Note", "fixed"}}));
}

TEST(Display, RenderedWhenTheExperimentRuns) {
  FakeRunner runner;
  auto ledger = start_ledger(plan_with({}));
  auto e = os_experiment();
  for (auto& h : e.hypotheses) h.display = {{"OS", "=os"}};
  run_experiment(ledger, e, runner);
  const auto& rs = ledger.experiments[0].results;
  EXPECT_EQ(rs[0].display.at("OS"), "16");
  EXPECT_EQ(rs[1].display.at("OS"), "8");
  EXPECT_EQ(rs[2].display.at("OS"), "4");
}
