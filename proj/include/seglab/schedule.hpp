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

#pragma once

#include "seglab/config.hpp"

namespace seglab {

/// Learning rate for the step taken at `iteration`. Adam is constant; SGD
/// warms up linearly then decays polynomially to zero at max_iterations.
double lr_at(const TrainConfig& cfg, long iteration);

/// Uniformly shrinks every iteration budget (stages, validation and
/// checkpoint cadence, warm-up) by `scale`, keeping each count >= 1.
TrainConfig scale_iterations(const TrainConfig& cfg, double scale);

/// Stage index active at `iteration` (0-based step counter).
std::size_t stage_at(const TrainConfig& cfg, long iteration);

}  // namespace seglab
