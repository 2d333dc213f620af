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

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "seglab/data_source.hpp"
#include "seglab/pisss.hpp"

namespace seglab {

struct RunnerOptions {
  /// Runs land in `out_dir/runs/<training hash>`.
  std::filesystem::path out_dir;
  double iteration_scale = 1.0;
  /// Applied only when iteration_scale < 1.
  std::optional<DryRun> dry_run;
  /// Dataset description; when null a dry run falls back to its fixture.
  Json dataset;
  std::function<void(const std::string&)> log;
};

/// Scores hypotheses by actually training them.
class TrainingRunner : public HypothesisRunner {
 public:
  explicit TrainingRunner(RunnerOptions opts);

  /// The config that is trained for `cfg`: iteration counts scaled and, in a
  /// dry run, crop/ensemble sizes and layer widths shrunk.
  HypothesisConfig effective(const HypothesisConfig& cfg) const;
  bool dry() const;
  const LoadedData& data() const { return data_; }

  HypothesisOutcome train(const HypothesisConfig& config) override;
  HypothesisOutcome evaluate(const HypothesisConfig& incumbent, const HypothesisConfig& config) override;

 private:
  std::filesystem::path run_dir(const HypothesisConfig& cfg) const;
  void log(const std::string& msg) const;

  RunnerOptions opts_;
  LoadedData data_;
};

}  // namespace seglab
