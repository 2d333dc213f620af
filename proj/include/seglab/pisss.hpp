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

#include <cstddef>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "seglab/config.hpp"

namespace seglab {

/// Baseline, Prediction, Technique, Architecture.
enum class Category { B, P, T, A };
std::string to_string(Category c);
Category parse_category(const std::string& s);

struct Hypothesis {
  std::string label;
  Json patch = Json::object();
  /// Report cells, e.g. {"Enc": "R50", "Iters": "14k"}. A value "=field" is
  /// computed from the hypothesis's resolved config (see render_display).
  Json display = Json::object();
};

/// Fields accepted as "=field" display values.
const std::vector<std::string>& display_fields();
/// Short description of one aspect of a config in JSON form, e.g. "encoder"
/// gives "ResNet-50" and "os" gives "16" ("-" for U-Net).
std::string describe_config(const Json& config, const std::string& field);
/// Replaces every "=field" value of `display` with describe_config(config, field).
Json render_display(const Json& display, const Json& config);

struct Experiment {
  std::string name;
  Category category = Category::T;
  std::string part;
  std::vector<Hypothesis> hypotheses;
  /// Label carried forward regardless of scores.
  std::optional<std::string> pin;

  void validate() const;
};

/// Desk-scale substitutions used when a plan runs with iteration_scale < 1.
struct DryRun {
  Json fixture;  // synthetic dataset description (see data_source.hpp)
  double spatial_scale = 0.25;
  double width_multiplier = 0.25;
  /// Replaces the batch size when positive.
  int batch_size = 0;
};

inline constexpr int kPlanSchemaVersion = 1;

struct Plan {
  std::string name;
  /// Patch over the built-in defaults.
  HypothesisConfig initial_config;
  Json dataset;  // null when the dataset is supplied at run time
  std::optional<DryRun> dry_run;
  double iteration_scale = 1.0;
  std::vector<Experiment> experiments;
};

/// Reads and checks a plan: schema version, categories, and that every
/// hypothesis patch only names existing config keys.
Plan plan_from_json(const Json& j);
Plan load_plan(const std::filesystem::path& path);

enum class Scoring { smoothed_validation, checkpoint };
Scoring scoring_for(Category c);

/// Hash of everything that affects training (the ensemble block is ignored).
std::string training_hash(const HypothesisConfig& h);

struct HypothesisOutcome {
  bool ok = false;
  double score = -std::numeric_limits<double>::infinity();
  std::string error;
  Json details = Json::object();
};

/// Produces scores for hypotheses; the ledger logic never trains anything itself.
class HypothesisRunner {
 public:
  virtual ~HypothesisRunner() = default;
  /// Trains `config` and returns its smoothed validation score.
  virtual HypothesisOutcome train(const HypothesisConfig& config) = 0;
  /// Scores `config.ensemble` on the checkpoints of the trained `incumbent`.
  virtual HypothesisOutcome evaluate(const HypothesisConfig& incumbent, const HypothesisConfig& config) = 0;
};

struct HypothesisResult {
  std::string label;
  Json patch = Json::object();
  Json display = Json::object();
  std::string config_hash;
  HypothesisOutcome outcome;
  bool winner = false;
};

struct ExperimentRecord {
  std::string name;
  Category category = Category::T;
  std::string part;
  std::string base_hash;
  std::vector<HypothesisResult> results;
  std::size_t winner = 0;
  bool pinned = false;
};

struct Ledger {
  std::string plan_name;
  double iteration_scale = 1.0;
  HypothesisConfig initial;
  HypothesisConfig best_so_far;
  std::vector<ExperimentRecord> experiments;
  /// Outcomes keyed by scoring kind and config hash; identical configs are scored once.
  std::map<std::string, HypothesisOutcome> memo;

  /// Fingerprint of the canonical JSON form.
  std::string hash() const;
};

Ledger start_ledger(const Plan& plan);

/// Index of the best successful score, first-listed on ties; nullopt when
/// every entry is -inf/NaN (failed).
std::optional<std::size_t> argmax_first(const std::vector<double>& scores);

/// Runs one experiment on top of `ledger.best_so_far` and appends it. Throws
/// (leaving the ledger untouched) when every hypothesis fails.
void run_experiment(Ledger& ledger, const Experiment& experiment, HypothesisRunner& runner);

/// Runs the experiments the ledger has not completed yet. `after_each` is
/// called with the ledger after every completed experiment.
void run_plan(Ledger& ledger, const Plan& plan, HypothesisRunner& runner,
              const std::function<void(const Ledger&)>& after_each = {});

/// Applies the winners' patches to the initial config in order.
HypothesisConfig replay(const Ledger& ledger);

Json to_json(const Ledger& ledger);
Ledger ledger_from_json(const Json& j);
void save_ledger(const std::filesystem::path& path, const Ledger& ledger);
Ledger load_ledger(const std::filesystem::path& path);

struct Report {
  std::string csv;
  std::string text;
};

/// One CSV table over all experiments and one aligned text table per part.
Report emit_report(const Ledger& ledger);

struct ReportRow {
  std::string experiment;
  std::string hypothesis;
  std::optional<double> score;  // nullopt for failed hypotheses
  bool winner = false;
};
std::vector<ReportRow> parse_report_csv(const std::string& csv);

}  // namespace seglab
