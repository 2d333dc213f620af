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

#include "seglab/ensemble.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "seglab/checkpoint.hpp"

namespace seglab {
namespace {

namespace F = torch::nn::functional;

torch::Tensor resize_bilinear(const torch::Tensor& x, Size2 size) {
  if (x.size(2) == size.height && x.size(3) == size.width) return x;
  return F::interpolate(x, F::InterpolateFuncOptions()
                               .size(std::vector<int64_t>{size.height, size.width})
                               .mode(torch::kBilinear)
                               .align_corners(false));
}

int scale_side(int configured, int image, int native) {
  return std::max(1, static_cast<int>(std::lround(static_cast<double>(configured) * image / native)));
}

}  // namespace

std::vector<EnsembleMember> ensemble_members(const EnsembleConfig& cfg, Size2 image_size) {
  std::vector<EnsembleMember> out;
  switch (cfg.strategy) {
    case EnsembleStrategy::single:
      out.push_back({image_size, false});
      break;
    case EnsembleStrategy::flipped:
      out.push_back({image_size, false});
      out.push_back({image_size, true});
      break;
    case EnsembleStrategy::multiscale_flipped:
      out.push_back({image_size, false});
      out.push_back({image_size, true});
      for (const auto& s : cfg.scales) {
        const Size2 sz{scale_side(s.height, image_size.height, cfg.native.height),
                       scale_side(s.width, image_size.width, cfg.native.width)};
        out.push_back({sz, false});
        out.push_back({sz, true});
      }
      break;
  }
  return out;
}

LabelMap argmax_labels(const torch::Tensor& scores) {
  if (scores.dim() != 3) throw InvalidSpec("argmax_labels expects (C, H, W) scores");
  const auto s = scores.to(torch::kFloat).contiguous();
  const int c = static_cast<int>(s.size(0)), h = static_cast<int>(s.size(1)), w = static_cast<int>(s.size(2));
  const float* p = s.data_ptr<float>();
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  LabelMap out(h, w);
  for (std::size_t i = 0; i < plane; ++i) {
    int best = 0;
    float bv = p[i];
    for (int k = 1; k < c; ++k) {
      const float v = p[k * plane + i];
      if (v > bv || (std::isnan(bv) && !std::isnan(v))) {
        bv = v;
        best = k;
      }
    }
    out.data[i] = static_cast<std::uint8_t>(best);
  }
  return out;
}

LabelMap hard_vote(const std::vector<LabelMap>& votes, int num_classes) {
  if (votes.empty()) throw InvalidSpec("hard_vote needs at least one label map");
  const int h = votes[0].height, w = votes[0].width;
  for (const auto& v : votes)
    if (v.height != h || v.width != w) throw InvalidSpec("hard_vote: label maps differ in size");
  LabelMap out(h, w);
  std::vector<int> count(num_classes);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    std::fill(count.begin(), count.end(), 0);
    for (const auto& v : votes) ++count[v.data[i]];
    int best = 0;
    for (int k = 1; k < num_classes; ++k)
      if (count[k] > count[best]) best = k;
    out.data[i] = static_cast<std::uint8_t>(best);
  }
  return out;
}

torch::Tensor member_logits(const LogitFn& fn, const Image& image, const EnsembleMember& m) {
  torch::NoGradGuard ng;
  const Size2 frame{image.height, image.width};
  auto x = resize_bilinear(images_to_tensor({&image}), m.size);
  if (m.flip) x = x.flip({3});
  auto y = fn(x);
  if (m.flip) y = y.flip({3});
  return resize_bilinear(y, frame)[0];
}

LabelMap predict(const LogitFn& fn, const Image& image) {
  return argmax_labels(member_logits(fn, image, {{image.height, image.width}, false}));
}

LabelMap predict_members(const LogitFn& fn, const Image& image, const std::vector<EnsembleMember>& members,
                         VoteMode mode) {
  if (members.empty()) throw InvalidSpec("ensemble has no members");
  if (members.size() == 1) return argmax_labels(member_logits(fn, image, members[0]));
  if (mode == VoteMode::soft) {
    torch::Tensor acc;
    for (const auto& m : members) {
      auto p = torch::softmax(member_logits(fn, image, m), 0);
      acc = acc.defined() ? acc + p : p;
    }
    return argmax_labels(acc / static_cast<double>(members.size()));
  }
  std::vector<LabelMap> votes;
  int num_classes = 0;
  for (const auto& m : members) {
    auto logits = member_logits(fn, image, m);
    num_classes = static_cast<int>(logits.size(0));
    votes.push_back(argmax_labels(logits));
  }
  return hard_vote(votes, num_classes);
}

LabelMap predict_flipped(const LogitFn& fn, const Image& image, VoteMode mode) {
  EnsembleConfig cfg;
  cfg.strategy = EnsembleStrategy::flipped;
  return predict_members(fn, image, ensemble_members(cfg, {image.height, image.width}), mode);
}

LabelMap predict_multiscale_flipped(const LogitFn& fn, const Image& image, const EnsembleConfig& cfg) {
  EnsembleConfig c = cfg;
  c.strategy = EnsembleStrategy::multiscale_flipped;
  return predict_members(fn, image, ensemble_members(c, {image.height, image.width}), c.vote_mode);
}

LabelMap predict_ensemble(const LogitFn& fn, const Image& image, const EnsembleConfig& cfg) {
  return predict_members(fn, image, ensemble_members(cfg, {image.height, image.width}), cfg.vote_mode);
}

ConfusionMatrix evaluate_samples(const LogitFn& fn, const std::vector<Sample>& samples, int num_classes,
                                 const EnsembleConfig& cfg) {
  ConfusionMatrix cm(num_classes);
  for (const auto& s : samples) cm.accumulate(predict_ensemble(fn, s.image, cfg), s.label);
  return cm;
}

std::vector<CheckpointEvalRow> evaluate_checkpoints(const std::filesystem::path& last_checkpoint,
                                                    const std::filesystem::path& best_checkpoint,
                                                    const std::vector<Sample>& samples,
                                                    const std::vector<EnsembleStrategy>& strategies,
                                                    const EnsembleConfig& base) {
  auto last = load_checkpoint(last_checkpoint);
  auto best = load_checkpoint(best_checkpoint);
  const int nc = last.meta.config.arch.num_classes;
  const std::optional<int> excluded =
      last.meta.config.train.miou_exclude_background ? std::optional<int>(0) : std::nullopt;
  auto fn_last = inference_fn(last.model), fn_best = inference_fn(best.model);
  std::vector<CheckpointEvalRow> rows;
  for (auto st : strategies) {
    EnsembleConfig cfg = base;
    cfg.strategy = st;
    CheckpointEvalRow r;
    r.strategy = st;
    r.last = miou(evaluate_samples(fn_last, samples, nc, cfg), excluded).miou;
    r.best = miou(evaluate_samples(fn_best, samples, nc, cfg), excluded).miou;
    rows.push_back(r);
  }
  return rows;
}

std::string checkpoint_eval_csv(const std::vector<CheckpointEvalRow>& rows) {
  std::ostringstream os;
  os << "strategy,last,best\n" << std::setprecision(6) << std::fixed;
  for (const auto& r : rows) os << to_string(r.strategy) << ',' << r.last << ',' << r.best << '\n';
  return os.str();
}

}  // namespace seglab
