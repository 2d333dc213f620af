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

#include "seglab/introspection.hpp"

#include <cmath>
#include <cstring>

#include "seglab/rng.hpp"

namespace seglab {

Image unit_tensor_to_image(const torch::Tensor& x) {
  auto t = x.dim() == 4 ? x[0] : x;
  t = (t.detach().to(torch::kFloat).clamp(0, 1) * 255.0).round().to(torch::kUInt8).permute({1, 2, 0}).contiguous();
  Image img(static_cast<int>(t.size(0)), static_cast<int>(t.size(1)));
  std::memcpy(img.data.data(), t.data_ptr<std::uint8_t>(), img.data.size());
  return img;
}

InputTrace optimize_input(const Model& model, int target_class, const InputOptimizationConfig& cfg) {
  if (target_class < 0 || target_class >= model.spec().num_classes)
    throw InvalidSpec("target class " + std::to_string(target_class) + " outside [0, " +
                      std::to_string(model.spec().num_classes) + ")");
  if (cfg.steps < 0 || cfg.step_size <= 0) throw InvalidSpec("optimize_input needs steps >= 0 and step_size > 0");
  const bool was_training = model.is_training();
  model.train(false);

  Rng rng(cfg.seed);
  std::vector<float> init(static_cast<std::size_t>(3) * cfg.size.height * cfg.size.width);
  for (auto& v : init) v = static_cast<float>(rng.uniform(0.45, 0.55));
  auto x = torch::from_blob(init.data(), {1, 3, cfg.size.height, cfg.size.width}, torch::kFloat).clone();

  auto objective = [&](const torch::Tensor& in) {
    auto logits = model.forward(normalize_unit_range(in));
    auto response = cfg.use_probability ? torch::softmax(logits, 1) : logits;
    return response.select(1, target_class).mean();
  };

  InputTrace trace;
  for (int step = 0; step <= cfg.steps; ++step) {
    if (cfg.on_step) cfg.on_step(step, x);
    auto xv = x.detach().requires_grad_(true);
    auto obj = objective(xv);
    const double value = obj.item<double>();
    trace.objective.push_back(value);
    if (!std::isfinite(value)) {
      trace.aborted = true;
      break;
    }
    if (step == cfg.steps) break;
    auto grad = torch::autograd::grad({obj}, {xv})[0];
    const double scale = grad.abs().max().item<double>();
    if (!std::isfinite(scale)) {
      trace.aborted = true;
      break;
    }
    if (scale == 0.0) continue;  // flat objective: nothing to follow
    x = (x + grad * (cfg.step_size / scale)).clamp(0.0, 1.0).detach();
  }
  model.train(was_training);
  trace.input = x;
  trace.image = unit_tensor_to_image(x);
  return trace;
}

}  // namespace seglab
