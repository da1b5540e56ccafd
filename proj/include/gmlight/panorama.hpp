// Copyright 2026 The gmlight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gmlight/errors.hpp"

namespace gmlight {

using Rgb = std::array<double, 3>;

inline constexpr Rgb kBlack{0.0, 0.0, 0.0};

// Rec.709 luminance.
constexpr double luminance(const Rgb& c) {
  return 0.2126 * c[0] + 0.7152 * c[1] + 0.0722 * c[2];
}

// Equirectangular HDR raster, top-to-bottom row-major, linear radiance.
// Every channel is finite and nonnegative.
class Panorama {
 public:
  Panorama(std::size_t width, std::size_t height, Rgb fill = kBlack)
      : width_(width), height_(height) {
    check_dimensions();
    check_value(fill);
    pixels_.assign(width * height, fill);
  }

  Panorama(std::size_t width, std::size_t height, std::vector<Rgb> pixels)
      : width_(width), height_(height), pixels_(std::move(pixels)) {
    check_dimensions();
    if (pixels_.size() != width * height) {
      throw InvalidArgument("pixel count " + std::to_string(pixels_.size()) +
                            " does not match " + std::to_string(width) + "x" +
                            std::to_string(height));
    }
    for (const Rgb& p : pixels_) check_value(p);
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return pixels_.size(); }

  const Rgb& at(std::size_t row, std::size_t col) const {
    return pixels_[row * width_ + col];
  }
  const Rgb& operator[](std::size_t i) const { return pixels_[i]; }
  std::span<const Rgb> pixels() const noexcept { return pixels_; }

  void set(std::size_t row, std::size_t col, const Rgb& value) {
    check_value(value);
    pixels_[row * width_ + col] = value;
  }

  friend bool operator==(const Panorama&, const Panorama&) = default;

 private:
  void check_dimensions() const {
    if (width_ == 0 || height_ == 0) {
      throw InvalidArgument("panorama dimensions must be positive");
    }
  }
  static void check_value(const Rgb& v) {
    for (double c : v) {
      if (!std::isfinite(c) || c < 0.0) {
        throw InvalidArgument("panorama channels must be finite and >= 0");
      }
    }
  }

  std::size_t width_;
  std::size_t height_;
  std::vector<Rgb> pixels_;
};

// Single-channel raster with the panorama layout (used for depth).
struct ScalarRaster {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> values;

  double at(std::size_t row, std::size_t col) const {
    return values[row * width + col];
  }
  friend bool operator==(const ScalarRaster&, const ScalarRaster&) = default;
};

inline bool same_shape(const Panorama& a, const Panorama& b) {
  return a.width() == b.width() && a.height() == b.height();
}

}  // namespace gmlight
