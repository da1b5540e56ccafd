// Copyright 2026 The gmlight Authors
// SPDX-License-Identifier: Apache-2.0

// Decomposition of an HDR panorama into anchor-based illumination
// parameters: a light distribution P over the anchors, an RGB intensity I,
// an RGB ambient term A and per-anchor depths D.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "gmlight/errors.hpp"
#include "gmlight/panorama.hpp"
#include "gmlight/sphere_geom.hpp"

namespace gmlight {

inline constexpr double kDistributionTolerance = 1e-9;
inline constexpr double kDefaultLightFraction = 0.05;

struct IlluminationParams {
  std::size_t n = 0;
  std::vector<double> distribution;
  Rgb intensity = kBlack;
  Rgb ambient = kBlack;
  std::vector<double> depth;

  // Throws InvalidArgument unless every invariant holds. The distribution
  // must sum to one unless the intensity is zero.
  void validate() const {
    if (n == 0) throw InvalidArgument("params need at least one anchor");
    if (distribution.size() != n || depth.size() != n) {
      throw InvalidArgument("distribution and depth must have n = " +
                            std::to_string(n) + " entries");
    }
    double total = 0.0;
    for (double p : distribution) {
      if (!std::isfinite(p) || p < 0.0) {
        throw InvalidArgument("distribution entries must be finite and >= 0");
      }
      total += p;
    }
    for (double d : depth) {
      if (!std::isfinite(d) || !(d > 0.0)) {
        throw InvalidArgument("depth entries must be finite and > 0");
      }
    }
    for (const Rgb* c : {&intensity, &ambient}) {
      for (double x : *c) {
        if (!std::isfinite(x) || x < 0.0) {
          throw InvalidArgument("intensity and ambient must be finite and >= 0");
        }
      }
    }
    const bool dark = intensity == kBlack;
    if (!dark && std::abs(total - 1.0) > kDistributionTolerance) {
      throw InvalidArgument("distribution must sum to 1 (sum " +
                            std::to_string(total) + ")");
    }
  }

  friend bool operator==(const IlluminationParams&,
                         const IlluminationParams&) = default;
};

struct DecomposeOptions {
  // Share of pixels treated as light sources.
  double fraction = kDefaultLightFraction;
  // Weight pixel contributions by their solid angle.
  bool solid_angle_weighting = false;
};

struct Decomposition {
  IlluminationParams params;
  std::vector<bool> light_mask;
  // The masked pixels carry no luminance; P was set to uniform.
  bool uniform_fallback = false;
};

// Number of light pixels for a given fraction: ceil(fraction * count), with
// products that are integers up to rounding noise (0.05 * 20) not bumped up.
inline std::size_t light_pixel_count(double fraction, std::size_t count) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw InvalidArgument("light fraction must lie in (0, 1)");
  }
  const double x = fraction * static_cast<double>(count);
  const double k = std::ceil(x - 1e-9 * std::max(1.0, x));
  return std::clamp(static_cast<std::size_t>(k), std::size_t{1}, count);
}

// Marks the ceil(fraction * W * H) pixels of highest luminance; ties go to
// the pixel that comes first in row-major order.
inline std::vector<bool> select_light_mask(
    const Panorama& p, double fraction = kDefaultLightFraction) {
  const std::size_t count = light_pixel_count(fraction, p.size());
  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> lum(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) lum[i] = luminance(p[i]);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return lum[a] > lum[b];
  });
  std::vector<bool> mask(p.size(), false);
  for (std::size_t k = 0; k < count; ++k) mask[order[k]] = true;
  return mask;
}

namespace detail {

inline void check_depth_raster(const ScalarRaster& depth, std::size_t width,
                               std::size_t height) {
  if (depth.width != width || depth.height != height ||
      depth.values.size() != width * height) {
    throw InvalidArgument("depth map is " + std::to_string(depth.width) + "x" +
                          std::to_string(depth.height) + ", panorama is " +
                          std::to_string(width) + "x" + std::to_string(height));
  }
  for (double d : depth.values) {
    if (!std::isfinite(d) || !(d > 0.0)) {
      throw InvalidArgument("depth map values must be finite and > 0");
    }
  }
}

// Mean depth of the pixels assigned to each anchor. Anchors without pixels
// copy the value of the angularly nearest anchor that has some.
inline std::vector<double> anchor_depths(const ScalarRaster& depth,
                                         const std::vector<std::size_t>& owner,
                                         const AnchorSet& anchors) {
  const std::size_t n = anchors.size();
  std::vector<double> sum(n, 0.0);
  std::vector<std::size_t> hits(n, 0);
  for (std::size_t i = 0; i < owner.size(); ++i) {
    sum[owner[i]] += depth.values[i];
    ++hits[owner[i]];
  }
  std::vector<Vec3> populated;
  std::vector<std::size_t> populated_index;
  std::vector<double> out(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    if (hits[k] == 0) continue;
    out[k] = sum[k] / static_cast<double>(hits[k]);
    populated.push_back(anchors[k]);
    populated_index.push_back(k);
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (hits[k] != 0) continue;
    out[k] = out[populated_index[nearest_anchor_unchecked(anchors[k],
                                                          populated)]];
  }
  return out;
}

// Luminance of each panorama pixel summed into its nearest anchor.
inline std::vector<double> bin_luminance(const Panorama& p,
                                         const std::vector<std::size_t>& owner,
                                         std::size_t n) {
  std::vector<double> bins(n, 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) bins[owner[i]] += luminance(p[i]);
  return bins;
}

}  // namespace detail

inline Decomposition decompose(const Panorama& p, const ScalarRaster* depth,
                               const AnchorSet& anchors,
                               const DecomposeOptions& opts = {}) {
  const std::size_t w = p.width();
  const std::size_t h = p.height();
  if (depth != nullptr) detail::check_depth_raster(*depth, w, h);
  const std::size_t n = anchors.size();

  Decomposition out;
  out.light_mask = select_light_mask(p, opts.fraction);
  const auto owner = assign_pixels(anchors, h, w);

  std::vector<double> bins(n, 0.0);
  Rgb light = kBlack;
  Rgb rest = kBlack;
  double rest_weight = 0.0;
  for (std::size_t r = 0; r < h; ++r) {
    const double weight = opts.solid_angle_weighting ? solid_angle(r, h, w) : 1.0;
    for (std::size_t c = 0; c < w; ++c) {
      const std::size_t i = r * w + c;
      const Rgb& px = p[i];
      if (out.light_mask[i]) {
        for (int ch = 0; ch < 3; ++ch) light[ch] += weight * px[ch];
        bins[owner[i]] += weight * luminance(px);
      } else {
        for (int ch = 0; ch < 3; ++ch) rest[ch] += weight * px[ch];
        rest_weight += weight;
      }
    }
  }

  IlluminationParams& params = out.params;
  params.n = n;
  params.intensity = light;
  if (rest_weight > 0.0) {
    for (int ch = 0; ch < 3; ++ch) params.ambient[ch] = rest[ch] / rest_weight;
  }
  const double total = std::accumulate(bins.begin(), bins.end(), 0.0);
  params.distribution.resize(n);
  if (total > 0.0) {
    for (std::size_t k = 0; k < n; ++k) params.distribution[k] = bins[k] / total;
  } else {
    std::fill(params.distribution.begin(), params.distribution.end(),
              1.0 / static_cast<double>(n));
    out.uniform_fallback = true;
  }
  params.depth = depth != nullptr ? detail::anchor_depths(*depth, owner, anchors)
                                  : std::vector<double>(n, 1.0);
  return out;
}

// sum_i P_i * I. Equals I whenever the distribution sums to one.
inline Rgb recompose_check(const IlluminationParams& params) {
  Rgb total = kBlack;
  for (double p : params.distribution) {
    for (int ch = 0; ch < 3; ++ch) total[ch] += p * params.intensity[ch];
  }
  return total;
}

}  // namespace gmlight
