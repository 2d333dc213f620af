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

#include "seglab/pisss_runner.hpp"

#include <cmath>

#include "seglab/ensemble.hpp"
#include "seglab/schedule.hpp"
#include "seglab/trainer.hpp"

namespace seglab {
namespace {

int shrink_side(int v, double s) { return std::max(8, static_cast<int>(std::lround(v * s))); }
Size2 shrink(Size2 v, double s) { return {shrink_side(v.height, s), shrink_side(v.width, s)}; }

}  // namespace

TrainingRunner::TrainingRunner(RunnerOptions opts) : opts_(std::move(opts)) {
  if (!(opts_.iteration_scale > 0)) throw ConfigError("iteration scale must be positive");
  Json source = opts_.dataset;
  if (source.is_null()) {
    if (!dry())
      throw ConfigError("no dataset given; pass --manifest and --palette or run with --iteration-scale < 1 on a plan "
                        "with a dry_run fixture");
    source = opts_.dry_run->fixture;
    source["kind"] = "synthetic";
  }
  data_ = load_data_source(source);
}

bool TrainingRunner::dry() const { return opts_.iteration_scale < 1.0 && opts_.dry_run.has_value(); }

HypothesisConfig TrainingRunner::effective(const HypothesisConfig& cfg) const {
  HypothesisConfig e = cfg;
  if (opts_.iteration_scale != 1.0) e.train = scale_iterations(cfg.train, opts_.iteration_scale);
  if (dry()) {
    const double s = opts_.dry_run->spatial_scale;
    e.augment.crop_size = shrink(cfg.augment.crop_size, s);
    e.ensemble.native = shrink(cfg.ensemble.native, s);
    for (auto& sz : e.ensemble.scales) sz = shrink(sz, s);
    e.arch.width_multiplier = cfg.arch.width_multiplier * opts_.dry_run->width_multiplier;
    if (opts_.dry_run->batch_size > 0) e.train.batch_size = opts_.dry_run->batch_size;
  }
  e.validate();
  return e;
}

std::filesystem::path TrainingRunner::run_dir(const HypothesisConfig& cfg) const {
  return opts_.out_dir / "runs" / training_hash(cfg);
}

void TrainingRunner::log(const std::string& msg) const {
  if (opts_.log) opts_.log(msg);
}

HypothesisOutcome TrainingRunner::train(const HypothesisConfig& config) {
  const auto cfg = effective(config);
  if (cfg.arch.num_classes != data_.taxonomy.size())
    throw ConfigError("config predicts " + std::to_string(cfg.arch.num_classes) + " classes but the dataset has " +
                      std::to_string(data_.taxonomy.size()));
  const auto dir = run_dir(config);
  HypothesisOutcome out;
  try {
    TrainOptions o;
    o.run_dir = dir;
    o.dataset_source = data_.source;
    RunRecord rec;
    if (std::filesystem::exists(dir / "ckpt_last")) {
      log("resuming " + dir.string());
      rec = resume(dir / "ckpt_last", data_.splits, o, cfg.arch);
    } else {
      log("training " + dir.filename().string() + " for " + std::to_string(cfg.train.max_iterations) + " iterations");
      rec = seglab::train(cfg, data_.splits, o);
    }
    out.ok = true;
    out.score = smoothed_validation_score(rec.history, static_cast<std::size_t>(cfg.train.smoothing_window));
    out.details = {{"run", std::filesystem::relative(dir, opts_.out_dir).string()},
                   {"iterations", rec.iterations_done},
                   {"validations", rec.history.size()},
                   {"best_miou", rec.best_miou},
                   {"best_iteration", rec.best_iteration}};
  } catch (const TrainingAborted& e) {
    out.ok = false;
    out.error = e.what();
  }
  return out;
}

HypothesisOutcome TrainingRunner::evaluate(const HypothesisConfig& incumbent, const HypothesisConfig& config) {
  const auto dir = run_dir(incumbent);
  if (!std::filesystem::exists(dir / "ckpt_best") || !std::filesystem::exists(dir / "ckpt_last")) {
    auto trained = train(incumbent);
    if (!trained.ok) return trained;
  }
  if (!(training_hash(incumbent) == training_hash(config)))
    throw ConfigError("a prediction hypothesis may only change the ensemble block");
  const auto cfg = effective(config);
  const auto& samples = data_.splits.val.empty() ? data_.splits.train : data_.splits.val;
  log("evaluating " + to_string(cfg.ensemble.strategy) + " on " + dir.filename().string());
  const auto rows = evaluate_checkpoints(dir / "ckpt_last", dir / "ckpt_best", samples, {cfg.ensemble.strategy},
                                         cfg.ensemble);
  HypothesisOutcome out;
  out.ok = true;
  out.score = rows[0].best;
  out.details = {{"run", std::filesystem::relative(dir, opts_.out_dir).string()},
                 {"last", rows[0].last},
                 {"best", rows[0].best}};
  return out;
}

}  // namespace seglab
