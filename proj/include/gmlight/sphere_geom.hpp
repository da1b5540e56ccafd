// Copyright 2026 The gmlight Authors
// SPDX-License-Identifier: Apache-2.0

// Spherical geometry shared by every other module: anchor lattices,
// equirectangular pixel <-> direction mapping and angular distances.
//
// Equirectangular convention: row 0 is the north (+z) pole, the polar angle
// is measured from +z, the azimuth from +x towards +y, and pixel centers sit
// at half-integer offsets.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gmlight/errors.hpp"

namespace gmlight {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend constexpr Vec3 operator+(const Vec3& a, const Vec3& b) {
    return {a.x + b.x, a.y + b.y, a.z + b.z};
  }
  friend constexpr Vec3 operator-(const Vec3& a, const Vec3& b) {
    return {a.x - b.x, a.y - b.y, a.z - b.z};
  }
  friend constexpr Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
  friend constexpr Vec3 operator*(double s, const Vec3& a) {
    return {s * a.x, s * a.y, s * a.z};
  }
  friend constexpr Vec3 operator*(const Vec3& a, double s) { return s * a; }
  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr double dot(const Vec3& a, const Vec3& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

inline bool is_finite(const Vec3& a) {
  return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}

inline constexpr double kUnitNormTolerance = 1e-12;
inline constexpr double kUnitInputTolerance = 1e-6;

// Immutable set of distinct unit directions on the sphere.
class AnchorSet {
 public:
  explicit AnchorSet(std::vector<Vec3> directions)
      : directions_(std::move(directions)) {
    if (directions_.empty()) {
      throw InvalidArgument("anchor set must contain at least one direction");
    }
    for (std::size_t i = 0; i < directions_.size(); ++i) {
      const Vec3& d = directions_[i];
      if (!is_finite(d) || std::abs(norm(d) - 1.0) > kUnitNormTolerance) {
        throw InvalidArgument("anchor " + std::to_string(i) +
                              " is not a unit vector");
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (directions_[j] == d) {
          throw InvalidArgument("anchors " + std::to_string(j) + " and " +
                                std::to_string(i) + " coincide");
        }
      }
    }
  }

  std::size_t size() const noexcept { return directions_.size(); }
  const Vec3& operator[](std::size_t i) const { return directions_[i]; }
  std::span<const Vec3> directions() const noexcept { return directions_; }

 private:
  std::vector<Vec3> directions_;
};

// Spherical Fibonacci lattice: uniform z strata with golden-angle azimuths.
inline AnchorSet generate_anchors(std::size_t n) {
  if (n == 0) throw InvalidArgument("anchor count must be positive");
  const double golden_angle = std::numbers::pi * (3.0 - std::sqrt(5.0));
  std::vector<Vec3> dirs;
  dirs.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double z =
        1.0 - (2.0 * static_cast<double>(k) + 1.0) / static_cast<double>(n);
    const double azimuth = static_cast<double>(k) * golden_angle;
    const double r = std::sqrt(1.0 - z * z);
    dirs.push_back({r * std::cos(azimuth), r * std::sin(azimuth), z});
  }
  return AnchorSet(std::move(dirs));
}

inline double polar_angle(std::size_t row, std::size_t height) {
  return std::numbers::pi * (static_cast<double>(row) + 0.5) /
         static_cast<double>(height);
}

inline double azimuth_angle(std::size_t col, std::size_t width) {
  return 2.0 * std::numbers::pi * (static_cast<double>(col) + 0.5) /
         static_cast<double>(width);
}

inline Vec3 pixel_direction(std::size_t row, std::size_t col,
                            std::size_t height, std::size_t width) {
  if (row >= height || col >= width) {
    throw InvalidArgument("pixel (" + std::to_string(row) + ", " +
                          std::to_string(col) + ") outside " +
                          std::to_string(height) + "x" + std::to_string(width));
  }
  const double phi = polar_angle(row, height);
  const double lambda = azimuth_angle(col, width);
  const double s = std::sin(phi);
  return {s * std::cos(lambda), s * std::sin(lambda), std::cos(phi)};
}

// Solid angle subtended by one pixel of the given row.
inline double solid_angle(std::size_t row, std::size_t height,
                          std::size_t width) {
  if (row >= height || width == 0) {
    throw InvalidArgument("row " + std::to_string(row) + " outside height " +
                          std::to_string(height));
  }
  return std::sin(polar_angle(row, height)) *
         (std::numbers::pi / static_cast<double>(height)) *
         (2.0 * std::numbers::pi / static_cast<double>(width));
}

inline double angular_distance(const Vec3& a, const Vec3& b) {
  if (std::abs(norm(a) - 1.0) > kUnitInputTolerance ||
      std::abs(norm(b) - 1.0) > kUnitInputTolerance) {
    throw InvalidArgument("angular_distance expects unit vectors");
  }
  return std::acos(std::clamp(dot(a, b), -1.0, 1.0));
}

namespace detail {

// argmax of the cosine, first index wins on ties. Equivalent to the argmin of
// the angular distance since arccos is strictly decreasing.
inline std::size_t nearest_anchor_unchecked(const Vec3& dir,
                                            std::span<const Vec3> anchors) {
  std::size_t best = 0;
  double best_cos = -2.0;
  for (std::size_t k = 0; k < anchors.size(); ++k) {
    const double c = std::clamp(dot(dir, anchors[k]), -1.0, 1.0);
    if (c > best_cos) {
      best_cos = c;
      best = k;
    }
  }
  return best;
}

}  // namespace detail

inline std::size_t nearest_anchor(const Vec3& dir, const AnchorSet& anchors) {
  if (!is_finite(dir) || std::abs(norm(dir) - 1.0) > kUnitInputTolerance) {
    throw InvalidArgument("nearest_anchor expects a unit direction");
  }
  return detail::nearest_anchor_unchecked(dir, anchors.directions());
}

// Nearest anchor of every pixel of a height x width grid, row-major.
inline std::vector<std::size_t> assign_pixels(const AnchorSet& anchors,
                                              std::size_t height,
                                              std::size_t width) {
  std::vector<std::size_t> out(height * width);
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      out[r * width + c] = detail::nearest_anchor_unchecked(
          pixel_direction(r, c, height, width), anchors.directions());
    }
  }
  return out;
}

// n x n row-major matrix of pairwise angles.
inline std::vector<double> pairwise_angles(const AnchorSet& anchors) {
  const std::size_t n = anchors.size();
  std::vector<double> out(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double a = angular_distance(anchors[i], anchors[j]);
      out[i * n + j] = a;
      out[j * n + i] = a;
    }
  }
  return out;
}

}  // namespace gmlight
