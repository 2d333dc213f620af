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

#include "seglab/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "seglab/rng.hpp"

namespace seglab {
namespace {

std::uint32_t pack(Rgb c) { return (std::uint32_t{c.r} << 16) | (std::uint32_t{c.g} << 8) | c.b; }

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == '\t') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

bool skip_line(const std::string& line) {
  auto pos = line.find_first_not_of(" \t\r");
  return pos == std::string::npos || line[pos] == '#';
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string to_string(ClassGroup g) {
  switch (g) {
    case ClassGroup::surface: return "surface";
    case ClassGroup::sign: return "sign";
    case ClassGroup::damage: return "damage";
    case ClassGroup::background: return "background";
    case ClassGroup::vegetation: return "vegetation";
    case ClassGroup::other: return "other";
  }
  return "other";
}

ClassGroup parse_class_group(const std::string& s) {
  static const std::map<std::string, ClassGroup> names = {
      {"surface", ClassGroup::surface},       {"sign", ClassGroup::sign},
      {"damage", ClassGroup::damage},         {"background", ClassGroup::background},
      {"vegetation", ClassGroup::vegetation}, {"other", ClassGroup::other}};
  auto it = names.find(s);
  if (it == names.end()) throw ConfigError("unknown class group '" + s + "'");
  return it->second;
}

ClassTaxonomy::ClassTaxonomy(std::vector<ClassInfo> classes) : classes_(std::move(classes)) {
  if (classes_.empty()) throw ConfigError("taxonomy has no classes");
  if (classes_.size() > 255) throw ConfigError("taxonomy has more than 255 classes");
  std::sort(classes_.begin(), classes_.end(),
            [](const ClassInfo& a, const ClassInfo& b) { return a.id < b.id; });
  int backgrounds = 0;
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    if (classes_[i].id != static_cast<int>(i))
      throw ConfigError("taxonomy ids must be contiguous from 0; missing id " + std::to_string(i));
    if (classes_[i].group == ClassGroup::background) {
      background_ = classes_[i].id;
      ++backgrounds;
    }
    by_color_.emplace_back(pack(classes_[i].color), classes_[i].id);
  }
  if (backgrounds != 1)
    throw ConfigError("taxonomy must designate exactly one background class, found " +
                      std::to_string(backgrounds));
  std::sort(by_color_.begin(), by_color_.end());
  for (std::size_t i = 1; i < by_color_.size(); ++i)
    if (by_color_[i].first == by_color_[i - 1].first)
      throw ConfigError("palette color shared by classes " + std::to_string(by_color_[i - 1].second) +
                        " and " + std::to_string(by_color_[i].second));
}

std::optional<int> ClassTaxonomy::find_color(Rgb c) const {
  const auto key = pack(c);
  auto it = std::lower_bound(by_color_.begin(), by_color_.end(), std::make_pair(key, -1));
  if (it != by_color_.end() && it->first == key) return it->second;
  return std::nullopt;
}

std::optional<int> ClassTaxonomy::find_name(const std::string& name) const {
  for (const auto& c : classes_)
    if (c.name == name) return c.id;
  return std::nullopt;
}

ClassTaxonomy parse_palette(const std::string& text, const std::string& origin) {
  std::vector<ClassInfo> classes;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skip_line(line)) continue;
    auto f = split_tabs(line);
    const std::string where = origin + ":" + std::to_string(lineno);
    if (f.size() != 4) throw ConfigError(where + ": expected id<TAB>name<TAB>R,G,B<TAB>group");
    ClassInfo info;
    try {
      info.id = std::stoi(f[0]);
    } catch (const std::exception&) {
      throw ConfigError(where + ": bad class id '" + f[0] + "'");
    }
    info.name = f[1];
    int r, g, b;
    char c1, c2;
    std::istringstream cs(f[2]);
    if (!(cs >> r >> c1 >> g >> c2 >> b) || c1 != ',' || c2 != ',' || r < 0 || r > 255 || g < 0 ||
        g > 255 || b < 0 || b > 255)
      throw ConfigError(where + ": bad color '" + f[2] + "'");
    info.color = {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g), static_cast<std::uint8_t>(b)};
    info.group = parse_class_group(f[3]);
    classes.push_back(info);
  }
  return ClassTaxonomy(std::move(classes));
}

ClassTaxonomy load_palette(const std::filesystem::path& path) {
  return parse_palette(read_text(path), path.string());
}

LabelMap decode_color_mask(const Image& rgb_mask, const ClassTaxonomy& taxonomy) {
  LabelMap out(rgb_mask.height, rgb_mask.width);
  // Masks are dominated by a few colors; cache the last hit.
  Rgb last{};
  int last_id = -1;
  for (int y = 0; y < rgb_mask.height; ++y) {
    for (int x = 0; x < rgb_mask.width; ++x) {
      const Rgb c = rgb_mask.pixel(y, x);
      if (last_id < 0 || !(c == last)) {
        auto id = taxonomy.find_color(c);
        if (!id) throw UnknownColor(c.r, c.g, c.b, y, x);
        last = c;
        last_id = *id;
      }
      out.at(y, x) = static_cast<std::uint8_t>(last_id);
    }
  }
  return out;
}

Image encode_color_mask(const LabelMap& label, const ClassTaxonomy& taxonomy) {
  Image out(label.height, label.width);
  for (int y = 0; y < label.height; ++y)
    for (int x = 0; x < label.width; ++x) out.set(y, x, taxonomy[label.at(y, x)].color);
  return out;
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
  const auto text = read_text(path);
  const auto base = path.parent_path();
  std::vector<ManifestEntry> entries;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skip_line(line)) continue;
    auto f = split_tabs(line);
    if (f.size() != 3)
      throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                        ": expected split<TAB>image_path<TAB>mask_path");
    if (f[0] != "train" && f[0] != "val" && f[0] != "test")
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": unknown split '" + f[0] + "'");
    auto resolve = [&](const std::string& p) {
      std::filesystem::path fp(p);
      return (fp.is_absolute() ? fp : base / fp).string();
    };
    entries.push_back({f[0], resolve(f[1]), resolve(f[2])});
  }
  return entries;
}

const std::vector<Sample>& DatasetSplits::split(const std::string& name) const {
  if (name == "train") return train;
  if (name == "val") return val;
  if (name == "test") return test;
  throw ConfigError("unknown split '" + name + "' (expected train, val or test)");
}

DatasetSplits load_dataset(const std::filesystem::path& manifest, const ClassTaxonomy& taxonomy) {
  DatasetSplits ds;
  std::set<std::string> ids;
  for (const auto& e : load_manifest(manifest)) {
    if (!std::filesystem::exists(e.image_path)) throw IoError("missing image file '" + e.image_path + "'");
    if (!std::filesystem::exists(e.mask_path)) throw IoError("missing mask file '" + e.mask_path + "'");
    Sample s;
    s.id = std::filesystem::path(e.image_path).stem().string();
    if (!ids.insert(s.id).second) throw ConfigError("duplicate sample id '" + s.id + "' in manifest");
    s.image = read_image(e.image_path);
    const Image mask = read_image(e.mask_path);
    if (mask.height != s.image.height || mask.width != s.image.width)
      throw Error("dimension mismatch between '" + e.image_path + "' and '" + e.mask_path + "'");
    s.label = decode_color_mask(mask, taxonomy);
    if (e.split == "train") ds.train.push_back(std::move(s));
    else if (e.split == "val") ds.val.push_back(std::move(s));
    else ds.test.push_back(std::move(s));
  }
  return ds;
}

DatasetSplits split_samples(std::vector<Sample> samples, std::uint64_t seed, double train_fraction,
                            double val_fraction) {
  Rng rng = Rng::derive(seed, {0x5B1D});
  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i - 1)))]);
  const auto n = samples.size();
  const auto n_train = static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(n)));
  const auto n_val = std::min(n - n_train, static_cast<std::size_t>(std::lround(val_fraction * static_cast<double>(n))));
  DatasetSplits ds;
  for (std::size_t k = 0; k < n; ++k) {
    auto& s = samples[order[k]];
    if (k < n_train) ds.train.push_back(std::move(s));
    else if (k < n_train + n_val) ds.val.push_back(std::move(s));
    else ds.test.push_back(std::move(s));
  }
  return ds;
}

std::vector<Blob> connected_components(const LabelMap& label, std::vector<int>* component_of) {
  std::vector<int> comp(label.size(), -1);
  std::vector<Blob> blobs;
  std::vector<int> stack;
  const int h = label.height, w = label.width;
  for (int y0 = 0; y0 < h; ++y0) {
    for (int x0 = 0; x0 < w; ++x0) {
      const int start = y0 * w + x0;
      if (comp[start] >= 0) continue;
      const int idx = static_cast<int>(blobs.size());
      const auto cls = label.data[start];
      Blob b{cls, 0, y0, x0, y0, x0};
      comp[start] = idx;
      stack.assign(1, start);
      while (!stack.empty()) {
        const int p = stack.back();
        stack.pop_back();
        const int y = p / w, x = p % w;
        ++b.area;
        b.min_y = std::min(b.min_y, y);
        b.max_y = std::max(b.max_y, y);
        b.min_x = std::min(b.min_x, x);
        b.max_x = std::max(b.max_x, x);
        const int ny[4] = {y - 1, y + 1, y, y};
        const int nx[4] = {x, x, x - 1, x + 1};
        for (int k = 0; k < 4; ++k) {
          if (ny[k] < 0 || ny[k] >= h || nx[k] < 0 || nx[k] >= w) continue;
          const int q = ny[k] * w + nx[k];
          if (comp[q] < 0 && label.data[q] == cls) {
            comp[q] = idx;
            stack.push_back(q);
          }
        }
      }
      blobs.push_back(b);
    }
  }
  if (component_of) *component_of = std::move(comp);
  return blobs;
}

std::int64_t DatasetStats::total_pixels() const {
  std::int64_t t = 0;
  for (auto c : pixel_count_per_class) t += c;
  return t;
}

std::optional<double> DatasetStats::median_min_edge(int cls) const {
  auto v = blob_min_edge_distribution.at(cls);
  if (v.empty()) return std::nullopt;
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

DatasetStats dataset_statistics(const std::vector<Sample>& samples, const ClassTaxonomy& taxonomy) {
  if (samples.empty()) throw Error("dataset_statistics: empty sample list");
  const int c = taxonomy.size();
  DatasetStats st;
  st.pixel_count_per_class.assign(c, 0);
  st.blob_min_edge_distribution.assign(c, {});
  for (const auto& s : samples) {
    check_aligned(s);
    for (auto v : s.label.data) {
      if (v >= c) throw Error("sample '" + s.id + "' has label " + std::to_string(v) + " outside the taxonomy");
      ++st.pixel_count_per_class[v];
    }
    for (const auto& b : connected_components(s.label)) st.blob_min_edge_distribution[b.cls].push_back(b.min_edge());
  }
  const auto most = *std::max_element(st.pixel_count_per_class.begin(), st.pixel_count_per_class.end());
  st.inverse_frequency.resize(c);
  for (int k = 0; k < c; ++k)
    st.inverse_frequency[k] = st.pixel_count_per_class[k] > 0
                                  ? static_cast<double>(most) / static_cast<double>(st.pixel_count_per_class[k])
                                  : std::numeric_limits<double>::infinity();
  return st;
}

std::string stats_csv(const DatasetStats& stats, const ClassTaxonomy& taxonomy) {
  std::ostringstream os;
  os << "class_id,name,pixel_count,inverse_frequency,blob_count,median_min_edge\n";
  os.precision(10);
  for (int k = 0; k < taxonomy.size(); ++k) {
    os << k << ',' << taxonomy[k].name << ',' << stats.pixel_count_per_class[k] << ',';
    if (std::isinf(stats.inverse_frequency[k])) os << "inf";
    else os << stats.inverse_frequency[k];
    os << ',' << stats.blob_min_edge_distribution[k].size() << ',';
    if (auto m = stats.median_min_edge(k)) os << *m;
    os << '\n';
  }
  return os.str();
}

double fraction_of_blobs_with_min_edge_at_most(const DatasetStats& stats, int cls, int edge) {
  const auto& v = stats.blob_min_edge_distribution.at(cls);
  if (v.empty()) return 0.0;
  return static_cast<double>(std::count_if(v.begin(), v.end(), [&](int e) { return e <= edge; })) /
         static_cast<double>(v.size());
}

ClassTaxonomy synthetic_taxonomy(int num_classes) {
  std::vector<ClassInfo> classes;
  classes.push_back({0, "background", {0, 0, 0}, ClassGroup::background});
  for (int k = 1; k < num_classes; ++k) {
    // Spread hues with the golden ratio; vary value so neighbours differ.
    const double hue = std::fmod(0.13 + 0.618033988749895 * k, 1.0) * 6.0;
    const double v = (k % 2) ? 235.0 : 170.0;
    const int sector = static_cast<int>(hue);
    const double f = hue - sector;
    const double p = v * 0.15, q = v * (1 - 0.85 * f), t = v * (0.15 + 0.85 * f);
    double r, g, b;
    switch (sector) {
      case 0: r = v, g = t, b = p; break;
      case 1: r = q, g = v, b = p; break;
      case 2: r = p, g = v, b = t; break;
      case 3: r = p, g = q, b = v; break;
      case 4: r = t, g = p, b = v; break;
      default: r = v, g = p, b = q; break;
    }
    ClassInfo info{k, "class_" + std::to_string(k),
                   {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g), static_cast<std::uint8_t>(b)},
                   ClassGroup::other};
    // Nudge on the (unlikely) collision so the palette stays a bijection.
    for (const auto& prev : classes)
      if (prev.color == info.color) info.color.b = static_cast<std::uint8_t>(info.color.b ^ 0x5A);
    classes.push_back(info);
  }
  return ClassTaxonomy(std::move(classes));
}

std::vector<Sample> make_synthetic_fixture(std::uint64_t seed, int n, Size2 dims, int num_classes) {
  if (dims.height < 32 || dims.width < 32) throw ConfigError("synthetic fixture needs dims >= 32x32");
  if (num_classes < 2) throw ConfigError("synthetic fixture needs at least 2 classes");
  std::vector<Sample> out;
  if (n <= 0) return out;
  const auto taxonomy = synthetic_taxonomy(num_classes);
  const int fg = num_classes - 1;
  const int shapes = std::max(3, (fg + n - 1) / n);
  const int grid = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(shapes))));
  const int cell_h = dims.height / grid, cell_w = dims.width / grid;

  for (int i = 0; i < n; ++i) {
    Rng rng = Rng::derive(seed, {0xF1C7, static_cast<std::uint64_t>(i)});
    Sample s;
    s.id = "synthetic_" + std::to_string(i);
    s.image = Image(dims.height, dims.width);
    s.label = LabelMap(dims.height, dims.width, 0);
    // Pick the cells; a random subset of the grid, one shape per cell.
    std::vector<int> cells(static_cast<std::size_t>(grid * grid));
    for (std::size_t k = 0; k < cells.size(); ++k) cells[k] = static_cast<int>(k);
    for (std::size_t k = cells.size(); k > 1; --k)
      std::swap(cells[k - 1], cells[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(k - 1)))]);
    for (int j = 0; j < shapes; ++j) {
      const int cls = 1 + (i * shapes + j) % fg;
      const int cy0 = (cells[j] / grid) * cell_h, cx0 = (cells[j] % grid) * cell_w;
      const int kind = rng.uniform_int(0, 3);
      int h = rng.uniform_int(2, std::max(2, cell_h - 2));
      int w = rng.uniform_int(2, std::max(2, cell_w - 2));
      if (kind == 3) {  // thin bar
        if (rng.bernoulli(0.5)) h = std::min(h, 2);
        else w = std::min(w, 2);
      }
      const int y0 = cy0 + rng.uniform_int(0, std::max(0, cell_h - h - 1));
      const int x0 = cx0 + rng.uniform_int(0, std::max(0, cell_w - w - 1));
      const double ry = h / 2.0, rx = w / 2.0, my = y0 + ry - 0.5, mx = x0 + rx - 0.5;
      for (int y = y0; y < y0 + h && y < dims.height; ++y)
        for (int x = x0; x < x0 + w && x < dims.width; ++x) {
          if (kind == 1) {
            const double dy = (y - my) / ry, dx = (x - mx) / rx;
            if (dy * dy + dx * dx > 1.0) continue;
          }
          s.label.at(y, x) = static_cast<std::uint8_t>(cls);
        }
    }
    for (int y = 0; y < dims.height; ++y)
      for (int x = 0; x < dims.width; ++x) {
        const int cls = s.label.at(y, x);
        const Rgb base = cls == 0 ? Rgb{110, 110, 110} : taxonomy[cls].color;
        const int noise = rng.uniform_int(-18, 18);
        auto clamp = [](int v) { return static_cast<std::uint8_t>(std::clamp(v, 0, 255)); };
        s.image.set(y, x, {clamp(base.r + noise), clamp(base.g + noise), clamp(base.b + noise)});
      }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace seglab
