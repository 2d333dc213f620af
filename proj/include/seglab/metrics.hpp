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

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "seglab/dataset.hpp"
#include "seglab/image.hpp"

namespace seglab {

/// C x C pixel counts; rows are ground truth, columns prediction.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int num_classes = 0)
      : n_(num_classes), counts_(static_cast<std::size_t>(num_classes) * num_classes, 0) {}

  int num_classes() const { return n_; }
  std::int64_t operator()(int truth, int pred) const { return counts_[static_cast<std::size_t>(truth) * n_ + pred]; }
  std::int64_t total() const;

  void accumulate(const LabelMap& predicted, const LabelMap& truth);
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  int n_;
  std::vector<std::int64_t> counts_;
};

struct MetricReport {
  std::vector<std::optional<double>> iou_per_class;  // nullopt: class absent from truth and prediction
  double miou = 0.0;
  double pixel_accuracy = 0.0;
};

/// IoU_c = TP / (row + col - TP); zero-union classes are absent and skipped
/// by the mean. `excluded` (e.g. background) is reported but not averaged.
MetricReport miou(const ConfusionMatrix& cm, std::optional<int> excluded = std::nullopt);

/// CSV rows `class_id,name,iou` plus `mean` and `pixel_accuracy` rows.
std::string metric_report_csv(const MetricReport& r, const ClassTaxonomy* taxonomy = nullptr);

using ValidationHistory = std::vector<std::pair<long, double>>;

/// Mean of the last min(k, n) scores.
double smoothed_validation_score(const ValidationHistory& history, std::size_t k = 10);

/// Spearman rank correlation with average ranks for ties; 0 when either
/// side is constant or fewer than two points exist.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

struct BiasRow {
  int class_id = 0;
  std::string name;
  double iou = 0.0;
  double median_min_edge = 0.0;
  double inverse_frequency = 0.0;
};

struct BiasAnalysis {
  std::vector<BiasRow> rows;
  double corr_iou_vs_edge = 0.0;
  double corr_iou_vs_inverse_frequency = 0.0;
};

/// Joins per-class IoU with size statistics over classes that have an IoU,
/// at least one blob and finite inverse frequency.
BiasAnalysis bias_analysis(const MetricReport& report, const DatasetStats& stats, const ClassTaxonomy& taxonomy);
std::string bias_csv(const BiasAnalysis& analysis);

/// Connected components of `predicted` smaller than `min_area` whose class
/// is not a majority class of `reference` under the component footprint.
int count_spurious_blobs(const LabelMap& predicted, const LabelMap& reference, int min_area);
/// Default min_area: 0.1% of the image area (at least 1).
int default_spurious_min_area(const LabelMap& m);

}  // namespace seglab
