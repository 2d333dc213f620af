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

#include "seglab/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <memory>
#include <numeric>

#include <torch/torch.h>

#include "seglab/augmentation.hpp"
#include "seglab/ensemble.hpp"
#include "seglab/losses.hpp"
#include "seglab/rng.hpp"
#include "seglab/schedule.hpp"

namespace seglab {
namespace {

constexpr std::uint64_t kEpochStream = 1;
constexpr std::uint64_t kAugmentStream = 2;

std::vector<std::size_t> epoch_permutation(std::uint64_t seed, long epoch, std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  Rng rng = Rng::derive(seed, {kEpochStream, static_cast<std::uint64_t>(epoch)});
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng.uniform_int(0, static_cast<int>(i - 1))]);
  return p;
}

std::unique_ptr<torch::optim::Optimizer> make_optimizer(const OptimizerConfig& o, const Model& model) {
  if (o.kind == OptimizerKind::adam)
    return std::make_unique<torch::optim::Adam>(model.parameters(),
                                                torch::optim::AdamOptions(o.lr).weight_decay(o.weight_decay));
  return std::make_unique<torch::optim::SGD>(
      model.parameters(), torch::optim::SGDOptions(o.lr).momentum(o.momentum).weight_decay(o.weight_decay));
}

void check_labels(const std::vector<Sample>& samples, int num_classes, bool from_checkpoint) {
  for (const auto& s : samples) {
    check_aligned(s);
    for (auto v : s.label.data) {
      if (v < num_classes) continue;
      const auto msg = "sample '" + s.id + "' has label " + std::to_string(v) + " but the model predicts " +
                       std::to_string(num_classes) + " classes";
      if (from_checkpoint) throw IncompatibleCheckpoint(msg);
      throw ConfigError(msg);
    }
  }
}

std::string loss_name(const LossConfig& l) {
  std::string out;
  for (const auto& t : l.terms) out += (out.empty() ? "" : "+") + to_string(t.kind);
  return out;
}

class Session {
 public:
  Session(const DatasetSplits& data, const TrainOptions& opts, Model model, CheckpointMeta meta)
      : data_(data), opts_(opts), model_(std::move(model)), meta_(std::move(meta)) {
    const auto& cfg = meta_.config;
    optimizer_ = make_optimizer(cfg.train.optimizer, model_);
    if (!meta_.class_weights.empty())
      weights_ = torch::tensor(std::vector<float>(meta_.class_weights.begin(), meta_.class_weights.end()));
    record_.run_dir = opts.run_dir;
    record_.class_weights = meta_.class_weights;
    if (!opts_.run_dir.empty()) {
      std::filesystem::create_directories(opts_.run_dir);
      record_.last_checkpoint = opts_.run_dir / "ckpt_last";
      record_.best_checkpoint = opts_.run_dir / "ckpt_best";
      std::ofstream(opts_.run_dir / "config.resolved")
          << Json{{"config", to_json(cfg)}, {"dataset", meta_.dataset}}.dump(2) << '\n';
      events_.open(opts_.run_dir / "events.log", std::ios::app);
    }
  }

  torch::optim::Optimizer& optimizer() { return *optimizer_; }

  RunRecord run() {
    const auto& cfg = meta_.config;
    const auto& tc = cfg.train;
    const auto& val = data_.val.empty() ? data_.train : data_.val;
    const auto t0 = std::chrono::steady_clock::now();
    event(meta_.iteration, meta_.iteration == 0 ? "start" : "resume", "");

    long t = meta_.iteration;
    for (; t < tc.max_iterations; ++t) {
      if (opts_.stop_after >= 0 && t >= opts_.stop_after) break;
      const std::size_t stage = stage_at(tc, t);
      if (t > 0 && stage != stage_at(tc, t - 1)) switch_stage(t, stage_at(tc, t - 1), stage);
      const double lr = lr_at(tc, t);
      for (auto& g : optimizer_->param_groups()) g.options().set_lr(lr);

      auto batch = make_batch(t);
      const auto x = images_to_tensor(image_ptrs(batch));
      const auto y = labels_to_tensor(label_ptrs(batch));
      model_.train(true);
      optimizer_->zero_grad();
      auto loss = compound_loss(tc.stages[stage].loss, model_.forward(x), y, weights_);
      const double lv = loss.item<double>();
      if (!std::isfinite(lv)) {
        meta_.iteration = t;
        save("last");
        event(t, "aborted", "non-finite loss");
        throw TrainingAborted("non-finite loss at iteration " + std::to_string(t + 1) + " (stage " +
                              std::to_string(stage) + ")");
      }
      loss.backward();
      optimizer_->step();

      const long done = t + 1;
      meta_.iteration = done;
      meta_.train_loss.emplace_back(done, lv);
      if (opts_.on_step) opts_.on_step({done, stage, lv, lr});

      if (done % tc.val_every == 0 || done == tc.max_iterations) validate(val, done);
      if (done % tc.checkpoint_every == 0) save("last");
    }
    const bool finished = t >= tc.max_iterations;
    save("last");
    event(meta_.iteration, finished ? "finished" : "paused",
          "elapsed_s=" + std::to_string(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()));

    record_.history = meta_.history;
    record_.train_loss = meta_.train_loss;
    record_.best_miou = meta_.best_iteration >= 0 ? meta_.best_miou : record_.best_miou;
    record_.best_iteration = meta_.best_iteration;
    record_.iterations_done = meta_.iteration;
    record_.finished = finished;
    record_.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return record_;
  }

 private:
  static std::vector<const Image*> image_ptrs(const std::vector<Sample>& b) {
    std::vector<const Image*> out;
    for (const auto& s : b) out.push_back(&s.image);
    return out;
  }
  static std::vector<const LabelMap*> label_ptrs(const std::vector<Sample>& b) {
    std::vector<const LabelMap*> out;
    for (const auto& s : b) out.push_back(&s.label);
    return out;
  }

  std::vector<Sample> make_batch(long t) {
    const auto& tc = meta_.config.train;
    std::vector<Sample> raw;
    std::vector<Rng> rngs;
    int j = 0;
    for (auto i : batch_indices(tc.seed, t, tc.batch_size, data_.train.size())) {
      raw.push_back(data_.train[i]);
      rngs.push_back(Rng::derive(tc.seed, {kAugmentStream, static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(j++)}));
    }
    auto batch = augment_batch(raw, meta_.config.augment, rngs);
    for (const auto& s : batch)
      if (s.image.height != batch[0].image.height || s.image.width != batch[0].image.width)
        throw ConfigError("batch samples differ in size; add 'crop' to the augmentation pipeline");
    return batch;
  }

  void switch_stage(long t, std::size_t from, std::size_t to) {
    const auto& stages = meta_.config.train.stages;
    StageSwitch s{t, from, to, model_.parameter_hash(), ""};
    // The loss is looked up per step, so swapping touches no parameters.
    s.hash_after = model_.parameter_hash();
    record_.stage_switches.push_back(s);
    event(t, "stage_switch",
          loss_name(stages[from].loss) + "->" + loss_name(stages[to].loss) + " params=" + s.hash_before + "/" + s.hash_after);
  }

  void validate(const std::vector<Sample>& val, long done) {
    const auto& cfg = meta_.config;
    EnsembleConfig single;
    const auto cm = evaluate_samples(inference_fn(model_), val, cfg.arch.num_classes, single);
    const double score =
        miou(cm, cfg.train.miou_exclude_background ? std::optional<int>(0) : std::nullopt).miou;
    meta_.history.emplace_back(done, score);
    event(done, "validate", "miou=" + std::to_string(score));
    if (meta_.best_iteration < 0 || score > meta_.best_miou) {
      meta_.best_miou = score;
      meta_.best_iteration = done;
      save("best");
    }
  }

  void save(const std::string& which) {
    if (opts_.run_dir.empty()) return;
    meta_.rng_state = Json{{"seed", meta_.config.train.seed}, {"next_iteration", meta_.iteration}}.dump();
    save_checkpoint(opts_.run_dir / ("ckpt_" + which), model_, optimizer_.get(), meta_);
    std::ofstream hist(opts_.run_dir / "history.tsv");
    hist << std::setprecision(8);
    for (const auto& [it, v] : meta_.history) hist << it << '\t' << v << '\n';
    std::ofstream loss(opts_.run_dir / "loss.tsv");
    loss << std::setprecision(8);
    for (const auto& [it, v] : meta_.train_loss) loss << it << '\t' << v << '\n';
  }

  void event(long iteration, const std::string& name, const std::string& detail) {
    if (!events_.is_open()) return;
    events_ << "iteration=" << iteration << "\tevent=" << name;
    if (!detail.empty()) events_ << '\t' << detail;
    events_ << '\n' << std::flush;
  }

  const DatasetSplits& data_;
  TrainOptions opts_;
  Model model_;
  CheckpointMeta meta_;
  std::unique_ptr<torch::optim::Optimizer> optimizer_;
  torch::Tensor weights_;
  RunRecord record_;
  std::ofstream events_;
};

}  // namespace

std::vector<std::size_t> batch_indices(std::uint64_t seed, long iteration, int batch_size, std::size_t n) {
  if (n == 0) throw ConfigError("training split is empty");
  std::vector<std::size_t> out;
  long cached_epoch = -1;
  std::vector<std::size_t> perm;
  for (int j = 0; j < batch_size; ++j) {
    const long k = iteration * batch_size + j;
    const long epoch = k / static_cast<long>(n);
    if (epoch != cached_epoch) {
      perm = epoch_permutation(seed, epoch, n);
      cached_epoch = epoch;
    }
    out.push_back(perm[static_cast<std::size_t>(k % static_cast<long>(n))]);
  }
  return out;
}

RunRecord train(const HypothesisConfig& cfg, const DatasetSplits& data, const TrainOptions& opts) {
  cfg.validate();
  if (data.train.empty()) throw ConfigError("training split is empty");
  check_labels(data.train, cfg.arch.num_classes, false);
  check_labels(data.val, cfg.arch.num_classes, false);
  if (!opts.run_dir.empty() && std::filesystem::exists(opts.run_dir / "ckpt_last"))
    throw ConfigError("run directory '" + opts.run_dir.string() + "' already holds a run; resume it instead");

  CheckpointMeta meta;
  meta.config = cfg;
  meta.dataset = opts.dataset_source;
  bool needs_weights = false;
  for (const auto& s : cfg.train.stages)
    if (s.loss.uses(LossKind::wce) && !s.loss.class_weights) needs_weights = true;
  if (needs_weights) meta.class_weights = inverse_frequency_weights(data.train, cfg.arch.num_classes);

  Model model = build_model(cfg.arch, cfg.train.seed);
  if (!cfg.arch.encoder_weights.empty()) model.load_encoder(cfg.arch.encoder_weights);
  Session session(data, opts, model, std::move(meta));
  return session.run();
}

RunRecord resume(const std::filesystem::path& checkpoint, const DatasetSplits& data, const TrainOptions& opts,
                 const std::optional<ArchSpec>& expected) {
  auto meta = read_checkpoint_meta(checkpoint);
  if (expected) {
    ArchSpec a = *expected, b = meta.config.arch;
    a.encoder_weights.clear();
    b.encoder_weights.clear();
    if (!(a == b))
      throw IncompatibleCheckpoint("checkpoint '" + checkpoint.string() + "' was trained with architecture " +
                                   to_json(b).dump() + ", expected " + to_json(a).dump());
  }
  check_labels(data.train, meta.config.arch.num_classes, true);
  check_labels(data.val, meta.config.arch.num_classes, true);

  auto loaded = load_checkpoint(checkpoint);
  TrainOptions o = opts;
  if (o.run_dir.empty()) o.run_dir = checkpoint.parent_path();
  if (o.dataset_source.empty()) o.dataset_source = loaded.meta.dataset;
  loaded.meta.dataset = o.dataset_source;
  Session session(data, o, loaded.model, std::move(loaded.meta));
  load_optimizer_state(checkpoint, session.optimizer());
  return session.run();
}

}  // namespace seglab
