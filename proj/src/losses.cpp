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

#include "seglab/losses.hpp"

#include <algorithm>

namespace seglab {
namespace {

void check_shapes(const torch::Tensor& scores, const torch::Tensor& labels) {
  if (scores.dim() != 4 || labels.dim() != 3 || scores.size(0) != labels.size(0) || scores.size(2) != labels.size(1) ||
      scores.size(3) != labels.size(2))
    throw Error("loss: expected scores (N, C, H, W) and labels (N, H, W) with matching N, H, W");
}

torch::Tensor one_hot_like(const torch::Tensor& probs, const torch::Tensor& labels) {
  return torch::one_hot(labels, probs.size(1)).permute({0, 3, 1, 2}).to(probs.scalar_type());
}

torch::Tensor soft_ratio_loss(const torch::Tensor& probs, const torch::Tensor& labels, double eps, bool dice) {
  check_shapes(probs, labels);
  if (!(eps > 0)) throw Error("loss: epsilon must be positive");
  const auto y = one_hot_like(probs, labels);
  const std::vector<int64_t> dims = {0, 2, 3};
  const auto inter = (probs * y).sum(dims);
  const auto p = probs.sum(dims);
  const auto t = y.sum(dims);
  const auto ratio = dice ? (2 * inter + eps) / (p + t + eps) : (inter + eps) / (p + t - inter + eps);
  const auto present = torch::logical_or(t > 0, p > 0);
  const auto n = present.sum();
  if (n.item<int64_t>() == 0) return torch::zeros({}, probs.options());
  return 1 - ratio.masked_select(present).sum() / n.to(probs.scalar_type());
}

}  // namespace

torch::Tensor ce_loss(const torch::Tensor& logits, const torch::Tensor& labels) {
  check_shapes(logits, labels);
  const auto logp = torch::log_softmax(logits, 1);
  return -logp.gather(1, labels.unsqueeze(1)).mean();
}

torch::Tensor wce_loss(const torch::Tensor& logits, const torch::Tensor& labels, const torch::Tensor& class_weights) {
  check_shapes(logits, labels);
  if (class_weights.dim() != 1 || class_weights.size(0) != logits.size(1))
    throw Error("wce: need one weight per class");
  if (!(class_weights > 0).all().item<bool>()) throw Error("wce: class weights must be positive");
  const auto w = class_weights.to(logits.scalar_type()).index({labels});
  const auto nll = -torch::log_softmax(logits, 1).gather(1, labels.unsqueeze(1)).squeeze(1);
  return (nll * w).sum() / w.sum();
}

torch::Tensor soft_miou_loss(const torch::Tensor& probs, const torch::Tensor& labels, double epsilon) {
  return soft_ratio_loss(probs, labels, epsilon, false);
}

torch::Tensor soft_dice_loss(const torch::Tensor& probs, const torch::Tensor& labels, double epsilon) {
  return soft_ratio_loss(probs, labels, epsilon, true);
}

torch::Tensor compound_loss(const LossConfig& cfg, const torch::Tensor& logits, const torch::Tensor& labels,
                            const torch::Tensor& fallback_weights) {
  cfg.validate();
  torch::Tensor total = torch::zeros({}, logits.options());
  torch::Tensor probs;
  for (const auto& term : cfg.terms) {
    if (term.weight == 0.0) continue;
    torch::Tensor v;
    switch (term.kind) {
      case LossKind::ce: v = ce_loss(logits, labels); break;
      case LossKind::wce: {
        torch::Tensor w = cfg.class_weights ? torch::tensor(*cfg.class_weights, torch::kFloat64) : fallback_weights;
        if (!w.defined()) throw Error("wce: no class weights available");
        v = wce_loss(logits, labels, w);
        break;
      }
      case LossKind::soft_miou:
      case LossKind::soft_dice:
        if (!probs.defined()) probs = torch::softmax(logits, 1);
        v = term.kind == LossKind::soft_miou ? soft_miou_loss(probs, labels, cfg.epsilon)
                                             : soft_dice_loss(probs, labels, cfg.epsilon);
        break;
    }
    total = total + term.weight * v;
  }
  return total;
}

std::vector<double> inverse_frequency_weights(const std::vector<Sample>& samples, int num_classes) {
  std::vector<double> counts(num_classes, 0.0);
  for (const auto& s : samples)
    for (auto v : s.label.data)
      if (v < num_classes) counts[v] += 1.0;
  std::vector<double> w(num_classes, 0.0);
  double total = 0, max_w = 0;
  for (double c : counts) total += c;
  for (int k = 0; k < num_classes; ++k)
    if (counts[k] > 0) {
      w[k] = total / counts[k];
      max_w = std::max(max_w, w[k]);
    }
  if (max_w == 0) return std::vector<double>(num_classes, 1.0);
  double mean = 0;
  for (auto& v : w) {
    if (v == 0) v = max_w;
    mean += v;
  }
  mean /= num_classes;
  for (auto& v : w) v /= mean;
  return w;
}

}  // namespace seglab
