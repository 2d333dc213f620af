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

#include "seglab/augmentation.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace seglab {
namespace {

int mirror101(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n - 2;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

double bilinear(const Image& img, double sy, double sx, int c) {
  sy = std::clamp(sy, 0.0, static_cast<double>(img.height - 1));
  sx = std::clamp(sx, 0.0, static_cast<double>(img.width - 1));
  const int y0 = static_cast<int>(sy), x0 = static_cast<int>(sx);
  const int y1 = std::min(y0 + 1, img.height - 1), x1 = std::min(x0 + 1, img.width - 1);
  const double wy = sy - y0, wx = sx - x0;
  const double top = img.at(y0, x0, c) * (1 - wx) + img.at(y0, x1, c) * wx;
  const double bot = img.at(y1, x0, c) * (1 - wx) + img.at(y1, x1, c) * wx;
  return top * (1 - wy) + bot * wy;
}

double luma(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
  const double mx = std::max({r, g, b}), mn = std::min({r, g, b}), d = mx - mn;
  v = mx;
  s = mx > 0 ? d / mx : 0;
  if (d <= 0) {
    h = 0;
    return;
  }
  if (mx == r) h = std::fmod((g - b) / d, 6.0);
  else if (mx == g) h = (b - r) / d + 2.0;
  else h = (r - g) / d + 4.0;
  h /= 6.0;
  if (h < 0) h += 1.0;
}

void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
  h = h - std::floor(h);
  const double hh = h * 6.0;
  const int i = static_cast<int>(hh) % 6;
  const double f = hh - std::floor(hh);
  const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  switch (i) {
    case 0: r = v, g = t, b = p; break;
    case 1: r = q, g = v, b = p; break;
    case 2: r = p, g = v, b = t; break;
    case 3: r = p, g = q, b = v; break;
    case 4: r = t, g = p, b = v; break;
    default: r = v, g = p, b = q; break;
  }
}

void check_same_dims(const Sample& a, const Sample& b) {
  check_aligned(a);
  check_aligned(b);
  if (a.image.height != b.image.height || a.image.width != b.image.width)
    throw Error("cutmix: samples '" + a.id + "' and '" + b.id + "' differ in size");
}

}  // namespace

void AugmentConfig::validate() const {
  if (!(resize_low > 0) || !(resize_low <= resize_high))
    throw ConfigError("augment: resize scale range must satisfy 0 < low <= high");
  auto prob = [](double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string("augment: ") + what + " must be in [0, 1]");
  };
  prob(color.grayscale_prob, "color.grayscale_prob");
  prob(geom_rtk.hflip_prob, "geom_rtk.hflip_prob");
  prob(cutmix_prob, "cutmix_prob");
  prob(hflip_prob, "hflip_prob");
  if (!(color.jitter_strength >= 0)) throw ConfigError("augment: color.jitter_strength must be >= 0");
  if (!(geom_rtk.perspective_magnitude >= 0)) throw ConfigError("augment: geom_rtk.perspective_magnitude must be >= 0");
  if (crop_size.height <= 0 || crop_size.width <= 0) throw ConfigError("augment: crop_size must be positive");
  for (const auto& op : pipeline) {
    if (std::none_of(std::begin(kAugmentOps), std::end(kAugmentOps), [&](const char* k) { return op == k; }))
      throw ConfigError("augment: unknown pipeline op '" + op + "'");
  }
}

Sample pad_reflect(const Sample& s, Size2 min_size, int* offset_y, int* offset_x) {
  check_aligned(s);
  const int h = s.image.height, w = s.image.width;
  const int ph = std::max(0, min_size.height - h), pw = std::max(0, min_size.width - w);
  const int top = ph / 2, left = pw / 2;
  if (offset_y) *offset_y = top;
  if (offset_x) *offset_x = left;
  if (ph == 0 && pw == 0) return s;
  Sample out{Image(h + ph, w + pw), LabelMap(h + ph, w + pw), s.id};
  for (int y = 0; y < h + ph; ++y) {
    const int sy = mirror101(y - top, h);
    for (int x = 0; x < w + pw; ++x) {
      const int sx = mirror101(x - left, w);
      out.image.set(y, x, s.image.pixel(sy, sx));
      out.label.at(y, x) = s.label.at(sy, sx);
    }
  }
  return out;
}

Sample crop_at(const Sample& s, const Box& win) {
  check_aligned(s);
  if (win.top < 0 || win.left < 0 || win.top + win.height > s.image.height || win.left + win.width > s.image.width)
    throw Error("crop window outside sample '" + s.id + "'");
  Sample out{Image(win.height, win.width), LabelMap(win.height, win.width), s.id};
  for (int y = 0; y < win.height; ++y) {
    std::copy_n(&s.image.data[((static_cast<std::size_t>(y) + win.top) * s.image.width + win.left) * 3],
                static_cast<std::size_t>(win.width) * 3, &out.image.data[static_cast<std::size_t>(y) * win.width * 3]);
    std::copy_n(&s.label.data[(static_cast<std::size_t>(y) + win.top) * s.label.width + win.left],
                static_cast<std::size_t>(win.width), &out.label.data[static_cast<std::size_t>(y) * win.width]);
  }
  return out;
}

Sample random_crop(const Sample& s, Size2 size, Rng& rng, Box* window) {
  const Sample padded = pad_reflect(s, size);
  Box win{rng.uniform_int(0, padded.image.height - size.height), rng.uniform_int(0, padded.image.width - size.width),
          size.height, size.width};
  if (window) *window = win;
  return crop_at(padded, win);
}

Sample resize_to(const Sample& s, Size2 size) {
  check_aligned(s);
  if (size.height <= 0 || size.width <= 0) throw Error("resize: target size must be positive");
  if (size.height == s.image.height && size.width == s.image.width) return s;
  const double fy = static_cast<double>(s.image.height) / size.height;
  const double fx = static_cast<double>(s.image.width) / size.width;
  Sample out{Image(size.height, size.width), LabelMap(size.height, size.width), s.id};
  for (int y = 0; y < size.height; ++y) {
    const double sy = (y + 0.5) * fy - 0.5;
    const int ny = std::min(static_cast<int>((y + 0.5) * fy), s.image.height - 1);
    for (int x = 0; x < size.width; ++x) {
      const double sx = (x + 0.5) * fx - 0.5;
      const int nx = std::min(static_cast<int>((x + 0.5) * fx), s.image.width - 1);
      for (int c = 0; c < 3; ++c) out.image.at(y, x, c) = to_byte(bilinear(s.image, sy, sx, c));
      out.label.at(y, x) = s.label.at(ny, nx);
    }
  }
  return out;
}

Sample resize_by(const Sample& s, double scale) {
  const int h = std::max(1, static_cast<int>(std::lround(s.image.height * scale)));
  const int w = std::max(1, static_cast<int>(std::lround(s.image.width * scale)));
  return resize_to(s, {h, w});
}

Sample random_resize(const Sample& s, double low, double high, Rng& rng, double* drawn_scale) {
  if (!(low > 0) || !(low <= high)) throw ConfigError("resize: invalid scale range");
  const double scale = rng.uniform(low, high);
  if (drawn_scale) *drawn_scale = scale;
  return resize_by(s, scale);
}

Sample color_augment(const Sample& s, const ColorConfig& cfg, Rng& rng) {
  check_aligned(s);
  const double j = cfg.jitter_strength;
  if (j < 0) throw ConfigError("color: jitter_strength must be >= 0");
  // Draw every factor unconditionally so the stream layout is config-independent.
  const double brightness = rng.uniform(std::max(0.0, 1 - j), 1 + j);
  const double contrast = rng.uniform(std::max(0.0, 1 - j), 1 + j);
  const double saturation = rng.uniform(std::max(0.0, 1 - j), 1 + j);
  const double hue = rng.uniform(-j / 2, j / 2);
  const bool gray = rng.bernoulli(cfg.grayscale_prob);

  const bool jitter = brightness != 1.0 || contrast != 1.0 || saturation != 1.0 || hue != 0.0;
  if (!jitter && !gray) return s;

  Sample out = s;
  const std::size_t n = static_cast<std::size_t>(s.image.height) * s.image.width;
  std::vector<double> px(n * 3);
  for (std::size_t i = 0; i < n * 3; ++i) px[i] = s.image.data[i] / 255.0;
  auto clamp01 = [](double v) { return std::clamp(v, 0.0, 1.0); };

  if (brightness != 1.0)
    for (auto& v : px) v = clamp01(v * brightness);
  if (contrast != 1.0) {
    double mean = 0;
    for (std::size_t i = 0; i < n; ++i) mean += luma(px[3 * i], px[3 * i + 1], px[3 * i + 2]);
    mean /= static_cast<double>(n);
    for (auto& v : px) v = clamp01(mean + (v - mean) * contrast);
  }
  if (saturation != 1.0)
    for (std::size_t i = 0; i < n; ++i) {
      const double g = luma(px[3 * i], px[3 * i + 1], px[3 * i + 2]);
      for (int c = 0; c < 3; ++c) px[3 * i + c] = clamp01(g + (px[3 * i + c] - g) * saturation);
    }
  if (hue != 0.0)
    for (std::size_t i = 0; i < n; ++i) {
      double h, sat, v;
      rgb_to_hsv(px[3 * i], px[3 * i + 1], px[3 * i + 2], h, sat, v);
      hsv_to_rgb(h + hue, sat, v, px[3 * i], px[3 * i + 1], px[3 * i + 2]);
    }
  if (jitter)
    for (std::size_t i = 0; i < n * 3; ++i) out.image.data[i] = to_byte(px[i] * 255.0);
  if (gray)
    for (std::size_t i = 0; i < n; ++i) {
      const auto* p = &out.image.data[3 * i];
      const auto g = to_byte(luma(p[0], p[1], p[2]));
      out.image.data[3 * i] = out.image.data[3 * i + 1] = out.image.data[3 * i + 2] = g;
    }
  return out;
}

bool Homography::is_identity() const {
  static constexpr double id[9] = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  return std::equal(std::begin(m), std::end(m), std::begin(id));
}

Homography homography_from_corners(const double src[8], const double dst[8]) {
  // Unknowns h0..h7 with h8 = 1:  x = (h0 u + h1 v + h2) / (h6 u + h7 v + 1).
  std::array<std::array<double, 9>, 8> a{};
  for (int k = 0; k < 4; ++k) {
    const double u = dst[2 * k], v = dst[2 * k + 1], x = src[2 * k], y = src[2 * k + 1];
    a[2 * k] = {u, v, 1, 0, 0, 0, -u * x, -v * x, x};
    a[2 * k + 1] = {0, 0, 0, u, v, 1, -u * y, -v * y, y};
  }
  for (int col = 0; col < 8; ++col) {
    int piv = col;
    for (int r = col + 1; r < 8; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    if (std::abs(a[piv][col]) < 1e-12) throw Error("degenerate perspective corners");
    std::swap(a[col], a[piv]);
    for (int r = 0; r < 8; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      for (int c = col; c < 9; ++c) a[r][c] -= f * a[col][c];
    }
  }
  Homography h;
  for (int i = 0; i < 8; ++i) h.m[i] = a[i][8] / a[i][i];
  h.m[8] = 1.0;
  return h;
}

Sample warp_perspective(const Sample& s, const Homography& hm) {
  check_aligned(s);
  if (hm.is_identity()) return s;
  const int h = s.image.height, w = s.image.width;
  Sample out{Image(h, w), LabelMap(h, w), s.id};
  const double* m = hm.m;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double den = m[6] * x + m[7] * y + m[8];
      const double sx = (m[0] * x + m[1] * y + m[2]) / den;
      const double sy = (m[3] * x + m[4] * y + m[5]) / den;
      for (int c = 0; c < 3; ++c) out.image.at(y, x, c) = to_byte(bilinear(s.image, sy, sx, c));
      const int ny = std::clamp(static_cast<int>(std::lround(sy)), 0, h - 1);
      const int nx = std::clamp(static_cast<int>(std::lround(sx)), 0, w - 1);
      out.label.at(y, x) = s.label.at(ny, nx);
    }
  return out;
}

Sample geom_rtk(const Sample& s, const GeomRtkConfig& cfg, Rng& rng) {
  check_aligned(s);
  if (!cfg.enabled) return s;
  const double w = s.image.width - 1.0, h = s.image.height - 1.0;
  const double dst[8] = {0, 0, w, 0, w, h, 0, h};
  double src[8];
  bool moved = false;
  for (int k = 0; k < 4; ++k) {
    const double dx = rng.uniform(-cfg.perspective_magnitude, cfg.perspective_magnitude) * s.image.width;
    const double dy = rng.uniform(-cfg.perspective_magnitude, cfg.perspective_magnitude) * s.image.height;
    moved = moved || dx != 0.0 || dy != 0.0;
    src[2 * k] = dst[2 * k] + dx;
    src[2 * k + 1] = dst[2 * k + 1] + dy;
  }
  const bool flip = rng.bernoulli(cfg.hflip_prob);
  Sample out = moved ? warp_perspective(s, homography_from_corners(src, dst)) : s;
  if (flip) {
    out.image = hflip(out.image);
    out.label = hflip(out.label);
  }
  return out;
}

Sample random_hflip(const Sample& s, double prob, Rng& rng) {
  if (!rng.bernoulli(prob)) return s;
  return {hflip(s.image), hflip(s.label), s.id};
}

Box cutmix_box(Size2 frame, double lambda, Rng& rng) {
  const double r = std::sqrt(std::clamp(1.0 - lambda, 0.0, 1.0));
  Box b;
  b.height = std::clamp(static_cast<int>(std::lround(frame.height * r)), 0, frame.height);
  b.width = std::clamp(static_cast<int>(std::lround(frame.width * r)), 0, frame.width);
  b.top = rng.uniform_int(0, frame.height - b.height);
  b.left = rng.uniform_int(0, frame.width - b.width);
  return b;
}

CutmixOutcome cutmix_with_lambda(const Sample& a, const Sample& b, double lambda, Rng& rng) {
  check_same_dims(a, b);
  CutmixOutcome res{a, true, lambda, cutmix_box({a.image.height, a.image.width}, lambda, rng)};
  const Box& box = res.box;
  for (int y = box.top; y < box.top + box.height; ++y)
    for (int x = box.left; x < box.left + box.width; ++x) {
      res.sample.image.set(y, x, b.image.pixel(y, x));
      res.sample.label.at(y, x) = b.label.at(y, x);
    }
  return res;
}

CutmixOutcome cutmix_detailed(const Sample& a, const Sample& b, double prob, Rng& rng) {
  check_same_dims(a, b);
  if (!rng.bernoulli(prob)) return {a, false, 1.0, {}};
  double lambda = rng.uniform();
  while (lambda <= 0.0) lambda = rng.uniform();
  return cutmix_with_lambda(a, b, lambda, rng);
}

Sample cutmix(const Sample& a, const Sample& b, double prob, Rng& rng) {
  return cutmix_detailed(a, b, prob, rng).sample;
}

namespace {

Sample apply_op(const std::string& op, const Sample& s, const AugmentConfig& cfg, Rng& rng) {
  if (op == "crop") return random_crop(s, cfg.crop_size, rng);
  if (op == "resize") return random_resize(s, cfg.resize_low, cfg.resize_high, rng);
  if (op == "color") return color_augment(s, cfg.color, rng);
  if (op == "geom_rtk") {
    GeomRtkConfig g = cfg.geom_rtk;
    g.enabled = true;
    return geom_rtk(s, g, rng);
  }
  if (op == "hflip") return random_hflip(s, cfg.hflip_prob, rng);
  throw ConfigError("augment: unknown pipeline op '" + op + "'");
}

}  // namespace

Sample augment_sample(const Sample& s, const AugmentConfig& cfg, Rng& rng) {
  Sample cur = s;
  for (const auto& op : cfg.pipeline)
    if (op != "cutmix") cur = apply_op(op, cur, cfg, rng);
  return cur;
}

std::vector<Sample> augment_batch(const std::vector<Sample>& batch, const AugmentConfig& cfg, std::vector<Rng>& rngs) {
  if (rngs.size() != batch.size()) throw Error("augment_batch: one RNG stream per sample required");
  std::vector<Sample> cur = batch;
  for (const auto& op : cfg.pipeline) {
    if (op == "cutmix") {
      const std::vector<Sample> before = cur;
      const std::size_t n = before.size();
      for (std::size_t i = 0; i < n; ++i) cur[i] = cutmix(before[i], before[n - 1 - i], cfg.cutmix_prob, rngs[i]);
    } else {
      for (std::size_t i = 0; i < cur.size(); ++i) cur[i] = apply_op(op, cur[i], cfg, rngs[i]);
    }
  }
  return cur;
}

}  // namespace seglab
