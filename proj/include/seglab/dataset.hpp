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
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "seglab/image.hpp"

namespace seglab {

enum class ClassGroup { surface, sign, damage, background, vegetation, other };

std::string to_string(ClassGroup g);
ClassGroup parse_class_group(const std::string& s);

struct ClassInfo {
  int id = 0;
  std::string name;
  Rgb color;
  ClassGroup group = ClassGroup::other;
};

/// Ordered class set. Construction validates contiguous ids, distinct
/// colors and a single background class.
class ClassTaxonomy {
 public:
  ClassTaxonomy() = default;
  explicit ClassTaxonomy(std::vector<ClassInfo> classes);

  int size() const { return static_cast<int>(classes_.size()); }
  const ClassInfo& operator[](int id) const { return classes_.at(id); }
  const std::vector<ClassInfo>& classes() const { return classes_; }
  int background_id() const { return background_; }
  /// Class id for an exact palette color, if any.
  std::optional<int> find_color(Rgb c) const;
  std::optional<int> find_name(const std::string& name) const;

 private:
  std::vector<ClassInfo> classes_;
  std::vector<std::pair<std::uint32_t, int>> by_color_;  // sorted packed rgb -> id
  int background_ = 0;
};

/// Palette file: `id<TAB>name<TAB>R,G,B<TAB>group`, '#' comments allowed.
ClassTaxonomy load_palette(const std::filesystem::path& path);
ClassTaxonomy parse_palette(const std::string& text, const std::string& origin = "<palette>");

/// Exact palette lookup; throws UnknownColor on the first off-palette pixel.
LabelMap decode_color_mask(const Image& rgb_mask, const ClassTaxonomy& taxonomy);
Image encode_color_mask(const LabelMap& label, const ClassTaxonomy& taxonomy);

struct ManifestEntry {
  std::string split;
  std::string image_path;
  std::string mask_path;
};

/// Manifest file: `split<TAB>image_path<TAB>mask_path`. Relative paths are
/// resolved against the manifest's directory.
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);

struct DatasetSplits {
  std::vector<Sample> train, val, test;
  const std::vector<Sample>& split(const std::string& name) const;
  std::size_t total() const { return train.size() + val.size() + test.size(); }
};

DatasetSplits load_dataset(const std::filesystem::path& manifest, const ClassTaxonomy& taxonomy);

/// Deterministic shuffle-and-cut split used when a dataset has no manifest
/// split assignment (fixtures). Fractions default to 70/15/15.
DatasetSplits split_samples(std::vector<Sample> samples, std::uint64_t seed,
                            double train_fraction = 0.70, double val_fraction = 0.15);

struct Blob {
  int cls = 0;
  int area = 0;
  int min_y = 0, min_x = 0, max_y = 0, max_x = 0;
  int height() const { return max_y - min_y + 1; }
  int width() const { return max_x - min_x + 1; }
  int min_edge() const { return height() < width() ? height() : width(); }
};

/// Same-class connected components under 4-connectivity, in raster order of
/// their first pixel. `component_of` (optional) receives the blob index of
/// every pixel.
std::vector<Blob> connected_components(const LabelMap& label,
                                       std::vector<int>* component_of = nullptr);

struct DatasetStats {
  std::vector<std::int64_t> pixel_count_per_class;
  std::vector<std::vector<int>> blob_min_edge_distribution;
  /// Pixels of the most frequent class over pixels of class c; inf when absent.
  std::vector<double> inverse_frequency;

  std::int64_t total_pixels() const;
  /// Median of a class's blob min-edge list; nullopt when it has no blobs.
  std::optional<double> median_min_edge(int cls) const;
};

DatasetStats dataset_statistics(const std::vector<Sample>& samples, const ClassTaxonomy& taxonomy);

/// CSV: class_id,name,pixel_count,inverse_frequency,blob_count,median_min_edge
std::string stats_csv(const DatasetStats& stats, const ClassTaxonomy& taxonomy);

/// Fraction of a class's blobs whose min edge is <= `edge`.
double fraction_of_blobs_with_min_edge_at_most(const DatasetStats& stats, int cls, int edge);

/// Deterministic toy dataset: textured geometric shapes of each class on
/// background. Every class appears in at least one sample when n > 0.
std::vector<Sample> make_synthetic_fixture(std::uint64_t seed, int n, Size2 dims, int num_classes);
ClassTaxonomy synthetic_taxonomy(int num_classes);

}  // namespace seglab
