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

#include "seglab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

namespace seglab {

std::int64_t ConfusionMatrix::total() const { return std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0}); }

void ConfusionMatrix::accumulate(const LabelMap& predicted, const LabelMap& truth) {
  if (predicted.height != truth.height || predicted.width != truth.width)
    throw Error("confusion: prediction and truth sizes differ");
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth.data[i], p = predicted.data[i];
    if (t >= n_ || p >= n_) throw Error("confusion: class id out of range");
    ++counts_[static_cast<std::size_t>(t) * n_ + p];
  }
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.n_ != n_) throw Error("confusion: class counts differ");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

MetricReport miou(const ConfusionMatrix& cm, std::optional<int> excluded) {
  const int n = cm.num_classes();
  MetricReport r;
  r.iou_per_class.resize(n);
  std::int64_t diag_total = 0;
  double sum = 0;
  int present = 0;
  for (int c = 0; c < n; ++c) {
    std::int64_t row = 0, col = 0;
    for (int k = 0; k < n; ++k) {
      row += cm(c, k);
      col += cm(k, c);
    }
    const std::int64_t tp = cm(c, c);
    diag_total += tp;
    const std::int64_t uni = row + col - tp;
    if (uni == 0) continue;
    r.iou_per_class[c] = static_cast<double>(tp) / static_cast<double>(uni);
    if (excluded && *excluded == c) continue;
    sum += *r.iou_per_class[c];
    ++present;
  }
  r.miou = present ? sum / present : 0.0;
  const auto total = cm.total();
  r.pixel_accuracy = total ? static_cast<double>(diag_total) / static_cast<double>(total) : 0.0;
  return r;
}

std::string metric_report_csv(const MetricReport& r, const ClassTaxonomy* taxonomy) {
  std::ostringstream os;
  os.precision(10);
  os << "class_id,name,iou\n";
  for (std::size_t c = 0; c < r.iou_per_class.size(); ++c) {
    os << c << ',' << (taxonomy ? (*taxonomy)[static_cast<int>(c)].name : "class_" + std::to_string(c)) << ',';
    if (r.iou_per_class[c]) os << *r.iou_per_class[c];
    os << '\n';
  }
  os << "mean,miou," << r.miou << '\n';
  os << "pixel_accuracy,pixel_accuracy," << r.pixel_accuracy << '\n';
  return os.str();
}

double smoothed_validation_score(const ValidationHistory& history, std::size_t k) {
  if (history.empty()) throw Error("smoothed score of an empty history");
  if (k == 0) throw Error("smoothed score window must be >= 1");
  const std::size_t take = std::min(k, history.size());
  double sum = 0;
  for (std::size_t i = history.size() - take; i < history.size(); ++i) sum += history[i].second;
  return sum / static_cast<double>(take);
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw Error("spearman: length mismatch");
  if (a.size() < 2) return 0.0;
  const auto ra = average_ranks(a), rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double cov = 0, va = 0, vb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va == 0 || vb == 0) return 0.0;
  return cov / std::sqrt(va * vb);
}

BiasAnalysis bias_analysis(const MetricReport& report, const DatasetStats& stats, const ClassTaxonomy& taxonomy) {
  BiasAnalysis out;
  const int n = std::min<int>(static_cast<int>(report.iou_per_class.size()), taxonomy.size());
  for (int c = 0; c < n; ++c) {
    if (!report.iou_per_class[c]) continue;
    const auto edge = stats.median_min_edge(c);
    if (!edge || !std::isfinite(stats.inverse_frequency[c])) continue;
    out.rows.push_back({c, taxonomy[c].name, *report.iou_per_class[c], *edge, stats.inverse_frequency[c]});
  }
  std::vector<double> iou, edge, inv;
  for (const auto& r : out.rows) {
    iou.push_back(r.iou);
    edge.push_back(r.median_min_edge);
    inv.push_back(r.inverse_frequency);
  }
  out.corr_iou_vs_edge = spearman(iou, edge);
  out.corr_iou_vs_inverse_frequency = spearman(iou, inv);
  return out;
}

std::string bias_csv(const BiasAnalysis& a) {
  std::ostringstream os;
  os.precision(10);
  os << "class_id,name,iou,median_min_edge,inverse_frequency\n";
  for (const auto& r : a.rows)
    os << r.class_id << ',' << r.name << ',' << r.iou << ',' << r.median_min_edge << ',' << r.inverse_frequency << '\n';
  os << "# spearman_iou_vs_median_min_edge," << a.corr_iou_vs_edge << '\n';
  os << "# spearman_iou_vs_inverse_frequency," << a.corr_iou_vs_inverse_frequency << '\n';
  return os.str();
}

int count_spurious_blobs(const LabelMap& predicted, const LabelMap& reference, int min_area) {
  if (predicted.height != reference.height || predicted.width != reference.width)
    throw Error("count_spurious_blobs: maps differ in size");
  std::vector<int> comp;
  const auto blobs = connected_components(predicted, &comp);
  std::vector<std::map<int, int>> votes(blobs.size());
  for (std::size_t i = 0; i < comp.size(); ++i)
    if (blobs[comp[i]].area < min_area) ++votes[comp[i]][reference.data[i]];
  int count = 0;
  for (std::size_t b = 0; b < blobs.size(); ++b) {
    if (blobs[b].area >= min_area) continue;
    int best = 0;
    for (const auto& [cls, n] : votes[b]) best = std::max(best, n);
    auto it = votes[b].find(blobs[b].cls);
    const int own = it == votes[b].end() ? 0 : it->second;
    if (own < best) ++count;
  }
  return count;
}

int default_spurious_min_area(const LabelMap& m) {
  return std::max(1, static_cast<int>(std::lround(0.001 * static_cast<double>(m.size()))));
}

}  // namespace seglab
