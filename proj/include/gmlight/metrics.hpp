// Copyright 2026 The gmlight Authors
// SPDX-License-Identifier: Apache-2.0

// Panorama comparison metrics: RMSE, scale-invariant RMSE, RGB angular
// error, cosine distance and the Geometric Mover's Distance between the
// anchor-binned luminance of two maps.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "gmlight/decompose.hpp"
#include "gmlight/errors.hpp"
#include "gmlight/ot/cost.hpp"
#include "gmlight/ot/exact_emd.hpp"
#include "gmlight/ot/sinkhorn.hpp"
#include "gmlight/panorama.hpp"
#include "gmlight/sphere_geom.hpp"

namespace gmlight {

namespace detail {

inline void require_same_shape(const Panorama& a, const Panorama& b) {
  if (!same_shape(a, b)) {
    throw InvalidArgument("panoramas differ in size: " +
                          std::to_string(a.width()) + "x" +
                          std::to_string(a.height()) + " vs " +
                          std::to_string(b.width()) + "x" +
                          std::to_string(b.height()));
  }
}

// <a, b> over all channels of all pixels.
inline double inner(const Panorama& a, const Panorama& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (int ch = 0; ch < 3; ++ch) s += a[i][ch] * b[i][ch];
  }
  return s;
}

inline double rgb_norm(const Rgb& c) {
  return std::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2]);
}

}  // namespace detail

inline double rmse(const Panorama& a, const Panorama& b) {
  detail::require_same_shape(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (int ch = 0; ch < 3; ++ch) {
      const double d = a[i][ch] - b[i][ch];
      s += d * d;
    }
  }
  return std::sqrt(s / static_cast<double>(3 * a.size()));
}

// RMSE after scaling `a` by the least-squares factor <a,b>/<a,a>, a single
// scalar shared by all channels.
inline double si_rmse(const Panorama& a, const Panorama& b) {
  detail::require_same_shape(a, b);
  const double aa = detail::inner(a, a);
  if (!(aa > 0.0)) {
    throw Undefined("si_rmse: the first map is identically zero");
  }
  const double alpha = detail::inner(a, b) / aa;
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (int ch = 0; ch < 3; ++ch) {
      const double d = alpha * a[i][ch] - b[i][ch];
      s += d * d;
    }
  }
  return std::sqrt(s / static_cast<double>(3 * a.size()));
}

// Mean angle in degrees between the RGB vectors of corresponding pixels,
// skipping pixels where either vector is zero.
inline double rgb_angular_error(const Panorama& a, const Panorama& b) {
  detail::require_same_shape(a, b);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double na = detail::rgb_norm(a[i]);
    const double nb = detail::rgb_norm(b[i]);
    if (!(na > 0.0) || !(nb > 0.0)) continue;
    // 2 atan2(|x - y|, |x + y|) keeps full precision near zero, where
    // acos(x . y) would lose half the digits.
    Rgb diff;
    Rgb plus;
    for (int ch = 0; ch < 3; ++ch) {
      diff[ch] = a[i][ch] / na - b[i][ch] / nb;
      plus[ch] = a[i][ch] / na + b[i][ch] / nb;
    }
    sum += 2.0 * std::atan2(detail::rgb_norm(diff), detail::rgb_norm(plus));
    ++count;
  }
  if (count == 0) {
    throw Undefined("rgb_angular_error: no pixel is nonzero in both maps");
  }
  return sum / static_cast<double>(count) * 180.0 / std::numbers::pi;
}

// 1 - <a,b> / (|a| |b|) over the flattened maps.
inline double cosine_distance(const Panorama& a, const Panorama& b) {
  detail::require_same_shape(a, b);
  const double aa = detail::inner(a, a);
  const double bb = detail::inner(b, b);
  if (!(aa > 0.0) || !(bb > 0.0)) {
    throw Undefined("cosine_distance: a map is identically zero");
  }
  const double d = 1.0 - detail::inner(a, b) / std::sqrt(aa * bb);
  return std::clamp(d, 0.0, 2.0);
}

// Luminance of `p` binned to the nearest anchor and normalised to sum 1.
inline std::vector<double> anchor_distribution(const Panorama& p,
                                               const AnchorSet& anchors) {
  const auto owner = assign_pixels(anchors, p.height(), p.width());
  auto bins = detail::bin_luminance(p, owner, anchors.size());
  const double total = std::accumulate(bins.begin(), bins.end(), 0.0);
  if (!(total > 0.0)) {
    throw InvalidArgument("map has zero total luminance");
  }
  for (double& x : bins) x /= total;
  return bins;
}

// Optimal transport cost between the anchor distributions of two maps under
// the geometric cost. Per-anchor depths come from the depth maps when both
// are given and are 1 otherwise. Exact below kExactEmdMaxSize anchors,
// entropic (cfg) above.
inline double gmd(const Panorama& a, const Panorama& b,
                  const AnchorSet& anchors, const ScalarRaster* depth_a = nullptr,
                  const ScalarRaster* depth_b = nullptr,
                  const SinkhornConfig& cfg = {}) {
  detail::require_same_shape(a, b);
  const std::size_t n = anchors.size();
  const auto u = anchor_distribution(a, anchors);
  const auto v = anchor_distribution(b, anchors);
  std::vector<double> du(n, 1.0);
  std::vector<double> dv(n, 1.0);
  if (depth_a != nullptr && depth_b != nullptr) {
    detail::check_depth_raster(*depth_a, a.width(), a.height());
    detail::check_depth_raster(*depth_b, b.width(), b.height());
    const auto owner = assign_pixels(anchors, a.height(), a.width());
    du = detail::anchor_depths(*depth_a, owner, anchors);
    dv = detail::anchor_depths(*depth_b, owner, anchors);
  }
  const CostMatrix c = geometric_cost(anchors, du, dv);
  if (n <= kExactEmdMaxSize) return exact_emd(u, v, c).value;
  const auto r = sinkhorn_gml(u, v, c, cfg);
  if (!r.converged()) {
    throw NotConverged("gmd: entropic solver stopped at marginal error " +
                       std::to_string(r.diagnostics.marginal_error));
  }
  return r.value;
}

struct MetricReport {
  double rmse = 0.0;
  double si_rmse = 0.0;
  double angular_error_degrees = 0.0;
  double cosine_distance = 0.0;
  std::optional<double> gmd;
};

struct ReportInputs {
  const AnchorSet* anchors = nullptr;
  const ScalarRaster* depth_pred = nullptr;
  const ScalarRaster* depth_gt = nullptr;
  SinkhornConfig sinkhorn{};
};

// All metrics of `pred` against `gt`; gmd only when anchors are supplied.
inline MetricReport report(const Panorama& pred, const Panorama& gt,
                           const ReportInputs& in = {}) {
  MetricReport r;
  r.rmse = rmse(pred, gt);
  r.si_rmse = si_rmse(pred, gt);
  r.angular_error_degrees = rgb_angular_error(pred, gt);
  r.cosine_distance = cosine_distance(pred, gt);
  if (in.anchors != nullptr) {
    r.gmd = gmd(pred, gt, *in.anchors, in.depth_pred, in.depth_gt, in.sinkhorn);
  }
  return r;
}

}  // namespace gmlight
