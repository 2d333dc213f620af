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

// seglab command-line driver.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <torch/torch.h>

#include "seglab/data_source.hpp"
#include "seglab/ensemble.hpp"
#include "seglab/introspection.hpp"
#include "seglab/pisss.hpp"
#include "seglab/pisss_runner.hpp"
#include "seglab/trainer.hpp"

namespace fs = std::filesystem;
using namespace seglab;

namespace {

struct DataFlags {
  std::string manifest, palette;
  Json source() const {
    if (manifest.empty() != palette.empty()) throw ConfigError("--manifest and --palette must be given together");
    return manifest.empty() ? Json() : manifest_source(manifest, palette);
  }
};

void add_data_flags(CLI::App* cmd, DataFlags& f) {
  cmd->add_option("--manifest", f.manifest, "Dataset manifest (split<TAB>image<TAB>mask per line)");
  cmd->add_option("--palette", f.palette, "Class palette file");
}

void prepare_out_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    if (!force) throw ConfigError("output directory '" + dir.string() + "' is not empty; pass --force to overwrite");
    fs::remove_all(dir);
  }
  fs::create_directories(dir);
}

void prepare_out_file(const fs::path& file, bool force) {
  if (fs::exists(file) && !force)
    throw ConfigError("output file '" + file.string() + "' exists; pass --force to overwrite");
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file);
  if (!out) throw IoError("cannot write '" + file.string() + "'");
  out << text;
}

void emit(const std::string& text, const std::string& out, bool force) {
  if (out.empty()) {
    std::cout << text;
    return;
  }
  prepare_out_file(out, force);
  write_text(out, text);
}

Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_reports(const fs::path& dir, const Ledger& ledger) {
  const auto r = emit_report(ledger);
  write_text(dir / "report.csv", r.csv);
  write_text(dir / "report.txt", r.text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"seglab: segmentation training and ablation-sequence harness"};
  app.require_subcommand(1);
  int workers = 1;
  app.add_option("--workers", workers, "Threads for tensor math")->check(CLI::PositiveNumber);

  // stats
  auto* stats = app.add_subcommand("stats", "Per-class pixel counts and blob sizes as CSV");
  std::string st_manifest, st_palette, st_out;
  bool st_force = false;
  stats->add_option("manifest", st_manifest)->required();
  stats->add_option("palette", st_palette)->required();
  stats->add_option("--out", st_out, "Write CSV here instead of stdout");
  stats->add_flag("--force", st_force);

  // train
  auto* trn = app.add_subcommand("train", "Train one configuration (a plan's initial config or a config file)");
  std::string tr_file, tr_out, tr_resume;
  std::optional<double> tr_scale;
  std::optional<std::uint64_t> tr_seed;
  bool tr_force = false;
  DataFlags tr_data;
  trn->add_option("config", tr_file, "Plan or config JSON")->required();
  trn->add_option("--iteration-scale", tr_scale, "Multiply every iteration count");
  trn->add_option("--seed", tr_seed);
  trn->add_option("--out", tr_out, "Run directory");
  trn->add_option("--resume", tr_resume, "Continue from this checkpoint");
  trn->add_flag("--force", tr_force);
  add_data_flags(trn, tr_data);

  // eval
  auto* ev = app.add_subcommand("eval", "Per-class IoU of a checkpoint on a split, as CSV");
  std::string ev_ckpt, ev_split, ev_ens = "single", ev_out;
  bool ev_force = false;
  DataFlags ev_data;
  ev->add_option("checkpoint", ev_ckpt)->required();
  ev->add_option("split", ev_split)->required()->check(CLI::IsMember({"train", "val", "test"}));
  ev->add_option("--ensemble", ev_ens)->check(CLI::IsMember({"single", "flipped", "msflip"}));
  ev->add_option("--out", ev_out);
  ev->add_flag("--force", ev_force);
  add_data_flags(ev, ev_data);

  // pisss
  auto* pisss = app.add_subcommand("pisss", "Additive ablation sequences");
  pisss->require_subcommand(1);
  auto* prun = pisss->add_subcommand("run", "Run a plan, writing ledger.json, report.csv and report.txt");
  std::string pr_plan, pr_resume, pr_out;
  std::optional<double> pr_scale;
  std::optional<std::uint64_t> pr_seed;
  bool pr_force = false, pr_quiet = false;
  DataFlags pr_data;
  prun->add_option("plan", pr_plan)->required();
  prun->add_option("--resume", pr_resume, "Continue a ledger.json");
  prun->add_option("--iteration-scale", pr_scale);
  prun->add_option("--seed", pr_seed);
  prun->add_option("--out", pr_out, "Output directory (default: pisss-<plan name>)");
  prun->add_flag("--force", pr_force);
  prun->add_flag("--quiet", pr_quiet);
  add_data_flags(prun, pr_data);

  // visualize-class
  auto* vis = app.add_subcommand("visualize-class", "Input that maximises a class response");
  std::string vi_ckpt, vi_out;
  int vi_class = 0;
  InputOptimizationConfig vi_cfg;
  bool vi_force = false;
  vis->add_option("checkpoint", vi_ckpt)->required();
  vis->add_option("class-id", vi_class)->required();
  vis->add_option("--steps", vi_cfg.steps);
  vis->add_option("--step-size", vi_cfg.step_size);
  vis->add_option("--seed", vi_cfg.seed);
  vis->add_flag("--probability", vi_cfg.use_probability, "Ascend the softmax probability instead of the logit");
  vis->add_option("--out", vi_out, "PNG path (objective history goes next to it as .tsv)");
  vis->add_flag("--force", vi_force);

  // report
  auto* rep = app.add_subcommand("report", "Print the tables of a ledger");
  std::string rp_ledger, rp_out;
  bool rp_force = false;
  rep->add_option("ledger", rp_ledger)->required();
  rep->add_option("--out", rp_out, "Also write report.csv and report.txt into this directory");
  rep->add_flag("--force", rp_force);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    torch::set_num_threads(workers);

    if (*stats) {
      const auto tax = load_palette(st_palette);
      const auto data = load_dataset(st_manifest, tax);
      std::vector<Sample> all = data.train;
      all.insert(all.end(), data.val.begin(), data.val.end());
      all.insert(all.end(), data.test.begin(), data.test.end());
      emit(stats_csv(dataset_statistics(all, tax), tax), st_out, st_force);
    } else if (*trn) {
      if (!tr_resume.empty()) {
        const auto meta = read_checkpoint_meta(tr_resume);
        auto source = tr_data.source();
        auto data = load_data_source(source.is_null() ? meta.dataset : source);
        TrainOptions o;
        if (!tr_out.empty()) o.run_dir = tr_out;
        o.dataset_source = data.source;
        const auto rec = resume(tr_resume, data.splits, o);
        std::cout << "resumed to iteration " << rec.iterations_done << ", best mIoU " << rec.best_miou << '\n';
        return 0;
      }
      const Json j = read_json(tr_file);
      HypothesisConfig cfg;
      Json source = tr_data.source();
      std::optional<DryRun> dry;
      if (j.contains("experiments")) {
        const auto plan = plan_from_json(j);
        cfg = plan.initial_config;
        dry = plan.dry_run;
        if (source.is_null()) source = plan.dataset;
      } else {
        Json patch = j;
        if (patch.contains("dataset")) {
          if (source.is_null()) source = patch["dataset"];
          patch.erase("dataset");
        }
        cfg = resolve(HypothesisConfig{}, patch);
        cfg.validate();
      }
      if (tr_seed) cfg.train.seed = *tr_seed;
      const fs::path out = tr_out.empty() ? fs::path("seglab-train-" + training_hash(cfg)) : fs::path(tr_out);
      prepare_out_dir(out, tr_force);
      RunnerOptions ro;
      ro.out_dir = out;
      ro.iteration_scale = tr_scale.value_or(1.0);
      ro.dry_run = dry;
      ro.dataset = source;
      TrainingRunner runner(ro);
      const auto eff = runner.effective(cfg);
      TrainOptions o;
      o.run_dir = out;
      o.dataset_source = runner.data().source;
      o.on_step = [&](const StepInfo& s) {
        if (s.iteration % 50 == 0 || s.iteration == eff.train.max_iterations)
          std::fprintf(stderr, "iteration %ld stage %zu loss %.5f lr %.3g\n", s.iteration, s.stage, s.loss, s.lr);
      };
      const auto rec = train(eff, runner.data().splits, o);
      std::cout << "trained " << rec.iterations_done << " iterations; best mIoU " << rec.best_miou << " at iteration "
                << rec.best_iteration << "; smoothed "
                << smoothed_validation_score(rec.history, eff.train.smoothing_window) << '\n';
    } else if (*ev) {
      auto loaded = load_checkpoint(ev_ckpt);
      auto source = ev_data.source();
      const auto data = load_data_source(source.is_null() ? loaded.meta.dataset : source);
      EnsembleConfig cfg = loaded.meta.config.ensemble;
      cfg.strategy = parse_strategy(ev_ens);
      const auto& samples = data.splits.split(ev_split);
      if (samples.empty()) throw ConfigError("split '" + ev_split + "' is empty");
      const auto cm = evaluate_samples(inference_fn(loaded.model), samples, loaded.meta.config.arch.num_classes, cfg);
      const std::optional<int> excluded =
          loaded.meta.config.train.miou_exclude_background ? std::optional<int>(0) : std::nullopt;
      emit(metric_report_csv(miou(cm, excluded), &data.taxonomy), ev_out, ev_force);
    } else if (*prun) {
      Plan plan = load_plan(pr_plan);
      if (pr_scale) plan.iteration_scale = *pr_scale;
      if (pr_seed) plan.initial_config.train.seed = *pr_seed;
      Ledger ledger;
      fs::path out;
      if (!pr_resume.empty()) {
        ledger = load_ledger(pr_resume);
        if (ledger.plan_name != plan.name)
          throw ConfigError("ledger '" + pr_resume + "' belongs to plan '" + ledger.plan_name + "'");
        if (ledger.iteration_scale != plan.iteration_scale)
          throw ConfigError("ledger was run at iteration scale " + std::to_string(ledger.iteration_scale) +
                            "; pass the same --iteration-scale to resume");
        out = pr_out.empty() ? fs::path(pr_resume).parent_path() : fs::path(pr_out);
        if (out.empty()) out = ".";
        fs::create_directories(out);
      } else {
        ledger = start_ledger(plan);
        out = pr_out.empty() ? fs::path("pisss-" + plan.name) : fs::path(pr_out);
        prepare_out_dir(out, pr_force);
      }
      RunnerOptions ro;
      ro.out_dir = out;
      ro.iteration_scale = plan.iteration_scale;
      ro.dry_run = plan.dry_run;
      ro.dataset = pr_data.source().is_null() ? plan.dataset : pr_data.source();
      if (!pr_quiet) ro.log = [](const std::string& m) { std::fprintf(stderr, "%s\n", m.c_str()); };
      TrainingRunner runner(ro);
      run_plan(ledger, plan, runner, [&](const Ledger& l) {
        save_ledger(out / "ledger.json", l);
        write_reports(out, l);
        if (!pr_quiet) {
          const auto& e = l.experiments.back();
          std::fprintf(stderr, "experiment %zu/%zu %s: winner %s\n", l.experiments.size(), plan.experiments.size(),
                       e.name.c_str(), e.results[e.winner].label.c_str());
        }
      });
      save_ledger(out / "ledger.json", ledger);
      write_reports(out, ledger);
      std::cout << emit_report(ledger).text << "ledger hash " << ledger.hash() << '\n';
    } else if (*vis) {
      const auto loaded = load_checkpoint(vi_ckpt);
      const fs::path png = vi_out.empty() ? fs::path("class-" + std::to_string(vi_class) + ".png") : fs::path(vi_out);
      auto tsv = png;
      tsv.replace_extension(".tsv");
      prepare_out_file(png, vi_force);
      prepare_out_file(tsv, vi_force);
      const auto trace = optimize_input(loaded.model, vi_class, vi_cfg);
      write_image(png.string(), trace.image);
      std::string hist;
      for (std::size_t i = 0; i < trace.objective.size(); ++i)
        hist += std::to_string(i) + '\t' + std::to_string(trace.objective[i]) + '\n';
      write_text(tsv, hist);
      if (trace.aborted) std::fprintf(stderr, "ascent stopped early: non-finite objective or gradient\n");
      std::cout << png.string() << '\n';
    } else if (*rep) {
      const auto ledger = load_ledger(rp_ledger);
      if (!rp_out.empty()) {
        prepare_out_file(fs::path(rp_out) / "report.csv", rp_force);
        prepare_out_file(fs::path(rp_out) / "report.txt", rp_force);
        write_reports(rp_out, ledger);
      }
      std::cout << emit_report(ledger).text;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "seglab: %s\n", e.what());
    return 1;
  } catch (const c10::Error& e) {
    std::fprintf(stderr, "seglab: %s\n", e.what_without_backtrace());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "seglab: %s\n", e.what());
    return 1;
  }
  return 0;
}
