// Copyright 2026 The gmlight Authors
// SPDX-License-Identifier: Apache-2.0

// Spherical Gaussian rendering of illumination parameters onto an
// equirectangular map, coarse-to-fine map pyramids, and reprojection of the
// parameters to a displaced insertion point.
//
// M(u) = sum_i P_i I exp((o_i . u - 1) / s) + A

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gmlight/decompose.hpp"
#include "gmlight/errors.hpp"
#include "gmlight/panorama.hpp"
#include "gmlight/sphere_geom.hpp"

namespace gmlight {

struct ProjectionConfig {
  std::size_t width = 256;
  std::size_t height = 128;
  // Lobe width s; smaller is sharper.
  double angular_size = 0.0025;
  // Coarse to fine; the last entry must equal angular_size.
  std::vector<double> s_schedule{0.04, 0.01, 0.0025};

  void validate() const {
    if (width == 0 || height == 0) {
      throw InvalidArgument("map dimensions must be positive");
    }
    if (!(angular_size > 0.0) || !std::isfinite(angular_size)) {
      throw InvalidArgument("angular size must be positive");
    }
    for (std::size_t k = 0; k < s_schedule.size(); ++k) {
      if (!(s_schedule[k] > 0.0) || !std::isfinite(s_schedule[k])) {
        throw InvalidArgument("schedule entries must be positive");
      }
      if (k > 0 && !(s_schedule[k] < s_schedule[k - 1])) {
        throw InvalidArgument("schedule must be strictly decreasing");
      }
    }
    if (!s_schedule.empty() && s_schedule.back() != angular_size) {
      throw InvalidArgument("schedule must end at the angular size");
    }
  }
};

enum class Falloff {
  // l / (l + dl): linear in distance.
  kLinear,
  kInverseSquare,
};

namespace detail {

inline void check_params_for(const IlluminationParams& params,
                             const AnchorSet& anchors) {
  params.validate();
  if (params.n != anchors.size()) {
    throw InvalidArgument("params have n = " + std::to_string(params.n) +
                          " but there are " + std::to_string(anchors.size()) +
                          " anchors");
  }
}

inline Panorama render(const IlluminationParams& params,
                       const AnchorSet& anchors, std::size_t width,
                       std::size_t height, double s) {
  // Anchors without mass never contribute.
  std::vector<Vec3> lit;
  std::vector<double> weight;
  for (std::size_t i = 0; i < params.n; ++i) {
    if (params.distribution[i] > 0.0) {
      lit.push_back(anchors[i]);
      weight.push_back(params.distribution[i]);
    }
  }
  const double inv_s = 1.0 / s;
  std::vector<Rgb> pixels(width * height);
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      const Vec3 u = pixel_direction(r, c, height, width);
      double lobe = 0.0;
      for (std::size_t i = 0; i < lit.size(); ++i) {
        lobe += weight[i] * std::exp((dot(lit[i], u) - 1.0) * inv_s);
      }
      Rgb& px = pixels[r * width + c];
      for (int ch = 0; ch < 3; ++ch) {
        px[ch] = params.intensity[ch] * lobe + params.ambient[ch];
      }
    }
  }
  return Panorama(width, height, std::move(pixels));
}

}  // namespace detail

// Map at cfg.angular_size.
inline Panorama gaussian_map(const IlluminationParams& params,
                             const AnchorSet& anchors,
                             const ProjectionConfig& cfg = {}) {
  cfg.validate();
  detail::check_params_for(params, anchors);
  return detail::render(params, anchors, cfg.width, cfg.height,
                        cfg.angular_size);
}

// One map per schedule entry, coarse to fine.
inline std::vector<Panorama> progressive_maps(const IlluminationParams& params,
                                              const AnchorSet& anchors,
                                              const ProjectionConfig& cfg = {}) {
  cfg.validate();
  if (cfg.s_schedule.empty()) throw InvalidArgument("schedule is empty");
  detail::check_params_for(params, anchors);
  std::vector<Panorama> maps;
  maps.reserve(cfg.s_schedule.size());
  for (double s : cfg.s_schedule) {
    maps.push_back(detail::render(params, anchors, cfg.width, cfg.height, s));
  }
  return maps;
}

struct Reprojection {
  IlluminationParams params;
  AnchorSet anchors;
};

// Moves the insertion point by `offset`. Anchor i sits at w_i = D_i o_i in
// the scene; seen from the new point it lies along (w_i - offset) at distance
// l_i = |w_i - offset|. Each anchor's radiance is scaled by D_i / l_i (or its
// square); the scale is split into a renormalised P and a global factor on I
// so that P'_i I' equals the scaled P_i I. The ambient term is kept.
inline Reprojection reproject(const IlluminationParams& params,
                              const AnchorSet& anchors, const Vec3& offset,
                              Falloff falloff = Falloff::kLinear) {
  detail::check_params_for(params, anchors);
  if (!is_finite(offset)) throw InvalidArgument("offset must be finite");
  if (offset == Vec3{}) return {params, anchors};
  double min_depth = params.depth.front();
  for (double d : params.depth) min_depth = std::min(min_depth, d);
  if (!(norm(offset) < min_depth)) {
    throw InvalidArgument("offset length " + std::to_string(norm(offset)) +
                          " reaches the nearest anchor at depth " +
                          std::to_string(min_depth));
  }

  const std::size_t n = params.n;
  std::vector<Vec3> dirs(n);
  IlluminationParams out;
  out.n = n;
  out.ambient = params.ambient;
  out.depth.resize(n);
  out.distribution.resize(n);
  double scale_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 w = params.depth[i] * anchors[i] - offset;
    const double l = norm(w);
    dirs[i] = (1.0 / l) * w;
    out.depth[i] = l;
    double ratio = params.depth[i] / l;
    if (falloff == Falloff::kInverseSquare) ratio *= ratio;
    out.distribution[i] = params.distribution[i] * ratio;
    scale_sum += out.distribution[i];
  }
  if (scale_sum > 0.0) {
    for (double& p : out.distribution) p /= scale_sum;
    for (int ch = 0; ch < 3; ++ch) {
      out.intensity[ch] = params.intensity[ch] * scale_sum;
    }
  } else {
    out.distribution = params.distribution;
    out.intensity = params.intensity;
  }
  return {std::move(out), AnchorSet(std::move(dirs))};
}

inline Panorama spatially_varying_map(const IlluminationParams& params,
                                      const AnchorSet& anchors,
                                      const Vec3& offset,
                                      const ProjectionConfig& cfg = {},
                                      Falloff falloff = Falloff::kLinear) {
  const Reprojection moved = reproject(params, anchors, offset, falloff);
  return gaussian_map(moved.params, moved.anchors, cfg);
}

}  // namespace gmlight
