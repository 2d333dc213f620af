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
#include <string>
#include <vector>

#include "seglab/errors.hpp"

namespace seglab {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Interleaved 8-bit RGB raster, row-major (HWC).
struct Image {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> data;

  Image() = default;
  Image(int h, int w, std::uint8_t fill = 0)
      : height(h), width(w), data(static_cast<std::size_t>(h) * w * 3, fill) {}

  std::uint8_t& at(int y, int x, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  std::uint8_t at(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  Rgb pixel(int y, int x) const { return {at(y, x, 0), at(y, x, 1), at(y, x, 2)}; }
  void set(int y, int x, Rgb p) {
    at(y, x, 0) = p.r;
    at(y, x, 1) = p.g;
    at(y, x, 2) = p.b;
  }
  bool empty() const { return height == 0 || width == 0; }
  friend bool operator==(const Image&, const Image&) = default;
};

/// Class-id raster, row-major. Ids fit in a byte (at most 255 classes).
struct LabelMap {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> data;

  LabelMap() = default;
  LabelMap(int h, int w, std::uint8_t fill = 0)
      : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}

  std::uint8_t& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
  std::size_t size() const { return data.size(); }
  friend bool operator==(const LabelMap&, const LabelMap&) = default;
};

struct Sample {
  Image image;
  LabelMap label;
  std::string id;
};

struct Size2 {
  int height = 0;
  int width = 0;
  friend bool operator==(const Size2&, const Size2&) = default;
};

inline void check_aligned(const Sample& s) {
  if (s.image.height != s.label.height || s.image.width != s.label.width)
    throw Error("sample '" + s.id + "': image is " + std::to_string(s.image.height) + "x" +
                std::to_string(s.image.width) + " but label is " +
                std::to_string(s.label.height) + "x" + std::to_string(s.label.width));
}

LabelMap hflip(const LabelMap& m);
Image hflip(const Image& img);

/// PNG/JPEG file I/O (OpenCV-backed). Images are returned in RGB order.
Image read_image(const std::string& path);
void write_image(const std::string& path, const Image& img);

}  // namespace seglab
