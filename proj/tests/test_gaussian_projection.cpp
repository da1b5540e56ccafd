// Copyright 2026 The gmlight Authors
// SPDX-License-Identifier: Apache-2.0

#include "gmlight/gaussian_projection.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

namespace gmlight {
namespace {

IlluminationParams delta_params(std::size_t n, std::size_t k, Rgb intensity,
                                Rgb ambient, double depth = 1.0) {
  IlluminationParams p;
  p.n = n;
  p.distribution.assign(n, 0.0);
  p.distribution[k] = 1.0;
  p.intensity = intensity;
  p.ambient = ambient;
  p.depth.assign(n, depth);
  return p;
}

IlluminationParams random_params(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  IlluminationParams p;
  p.n = n;
  p.distribution.resize(n);
  for (double& x : p.distribution) x = u(rng);
  const double s = std::accumulate(p.distribution.begin(), p.distribution.end(), 0.0);
  for (double& x : p.distribution) x /= s;
  p.intensity = {10 * u(rng), 10 * u(rng), 10 * u(rng)};
  p.ambient = {u(rng), u(rng), u(rng)};
  p.depth.resize(n);
  for (double& x : p.depth) x = 2.0 + 3.0 * u(rng);
  return p;
}

std::size_t argmax_luminance(const Panorama& m) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < m.size(); ++i) {
    if (luminance(m[i]) > luminance(m[best])) best = i;
  }
  return best;
}

TEST(ProjectionConfig, Validation) {
  ProjectionConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.s_schedule = {0.01, 0.04, 0.0025};
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg.s_schedule = {0.04, 0.01};
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.angular_size = 0.0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
}

TEST(GaussianMap, AnchorAlignedPixelPeaks) {
  ProjectionConfig cfg;
  const AnchorSet one({pixel_direction(30, 70, cfg.height, cfg.width)});
  const auto p = delta_params(1, 0, {5, 5, 5}, {0.25, 0.5, 0.75});
  const Panorama m = gaussian_map(p, one, cfg);
  for (int c = 0; c < 3; ++c) {
    EXPECT_NEAR(m.at(30, 70)[c], 5.0 + p.ambient[c], 1e-9);
  }
  // The antipode only sees the ambient term.
  const AnchorSet pole({{0, 0, 1}});
  const Panorama far = gaussian_map(delta_params(1, 0, {5, 5, 5}, kBlack), pole, cfg);
  EXPECT_EQ(far.at(cfg.height - 1, 0), kBlack);
}

TEST(GaussianMap, ZeroIntensityIsFlatAmbient) {
  const auto anchors = generate_anchors(128);
  IlluminationParams p;
  p.n = 128;
  p.distribution.assign(128, 1.0 / 128);
  p.ambient = {0.1, 0.2, 0.3};
  p.depth.assign(128, 1.0);
  const Panorama m = gaussian_map(p, anchors, {32, 16, 0.0025, {0.0025}});
  for (const Rgb& px : m.pixels()) EXPECT_EQ(px, p.ambient);
}

TEST(GaussianMap, LinearInIntensityAndBoundedBelowByAmbient) {
  std::mt19937_64 rng(3);
  const auto anchors = generate_anchors(32);
  auto p = random_params(rng, 32);
  const ProjectionConfig cfg{64, 32, 0.01, {0.01}};
  const Panorama a = gaussian_map(p, anchors, cfg);
  for (double& x : p.intensity) x *= 2.0;
  const Panorama b = gaussian_map(p, anchors, cfg);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (int c = 0; c < 3; ++c) {
      const double da = a[i][c] - p.ambient[c];
      const double db = b[i][c] - p.ambient[c];
      EXPECT_NEAR(db, 2.0 * da, 1e-12 * (1.0 + std::abs(db)));
      EXPECT_GE(a[i][c], p.ambient[c]);
    }
  }
}

TEST(GaussianMap, RejectsCountMismatch) {
  const auto p = delta_params(3, 0, {1, 1, 1}, kBlack);
  EXPECT_THROW(gaussian_map(p, generate_anchors(4)), InvalidArgument);
}

TEST(ProgressiveMaps, CoarseToFine) {
  const auto anchors = generate_anchors(16);
  const auto p = delta_params(16, 5, {4, 4, 4}, {0.1, 0.1, 0.1});
  const ProjectionConfig cfg{64, 32, 0.0025, {0.04, 0.01, 0.0025}};
  const auto maps = progressive_maps(p, anchors, cfg);
  ASSERT_EQ(maps.size(), 3u);
  EXPECT_EQ(maps.back(), gaussian_map(p, anchors, cfg));

  // With a pixel-aligned anchor the peak is I + A for every s, and wider
  // lobes raise the rest of the map, so the peak stands out less.
  const AnchorSet one({pixel_direction(10, 20, 32, 64)});
  const auto single =
      progressive_maps(delta_params(1, 0, {4, 4, 4}, {0.1, 0.1, 0.1}), one, cfg);
  double previous = 0.0;
  for (const auto& m : single) {
    EXPECT_NEAR(m.at(10, 20)[0], 4.1, 1e-12);
    double mean = 0.0;
    for (const Rgb& px : m.pixels()) mean += px[0] / static_cast<double>(m.size());
    EXPECT_GT(4.1 / mean, previous);
    previous = 4.1 / mean;
  }
}

TEST(Reproject, ZeroOffsetIsIdentity) {
  std::mt19937_64 rng(1);
  const auto anchors = generate_anchors(24);
  const auto p = random_params(rng, 24);
  const auto r = reproject(p, anchors, {0, 0, 0});
  EXPECT_EQ(r.params, p);
  for (std::size_t k = 0; k < 24; ++k) EXPECT_EQ(r.anchors[k], anchors[k]);
  const ProjectionConfig cfg{64, 32, 0.0025, {0.0025}};
  EXPECT_EQ(spatially_varying_map(p, anchors, {0, 0, 0}, cfg),
            gaussian_map(p, anchors, cfg));
}

TEST(Reproject, CollinearSingleAnchor) {
  const AnchorSet up({{0, 0, 1}});
  const auto p = delta_params(1, 0, {3, 3, 3}, kBlack, 2.0);
  const auto r = reproject(p, up, {0, 0, 1});
  EXPECT_DOUBLE_EQ(r.params.depth[0], 1.0);
  EXPECT_EQ(r.anchors[0], (Vec3{0, 0, 1}));
  EXPECT_DOUBLE_EQ(r.params.intensity[0], 6.0);
  EXPECT_DOUBLE_EQ(r.params.distribution[0], 1.0);
  const auto sq = reproject(p, up, {0, 0, 1}, Falloff::kInverseSquare);
  EXPECT_DOUBLE_EQ(sq.params.intensity[0], 12.0);
}

TEST(Reproject, WeightsMatchPerAnchorFalloff) {
  std::mt19937_64 rng(7);
  const auto anchors = generate_anchors(20);
  const auto p = random_params(rng, 20);
  const Vec3 off{0.3, -0.2, 0.5};
  const auto r = reproject(p, anchors, off);
  const double total = std::accumulate(r.params.distribution.begin(),
                                       r.params.distribution.end(), 0.0);
  EXPECT_NEAR(total, 1.0, 1e-9);
  for (std::size_t k = 0; k < 20; ++k) {
    const Vec3 w = p.depth[k] * anchors[k] - off;
    const double l = norm(w);
    EXPECT_NEAR(r.params.depth[k], l, 1e-12);
    for (int c = 0; c < 3; ++c) {
      const double expected = p.distribution[k] * p.intensity[c] * p.depth[k] / l;
      EXPECT_NEAR(r.params.distribution[k] * r.params.intensity[c], expected,
                  1e-12 * (1.0 + expected));
    }
  }
  EXPECT_EQ(r.params.ambient, p.ambient);
}

TEST(Reproject, RoundTrip) {
  std::mt19937_64 rng(9);
  const auto anchors = generate_anchors(64);
  std::uniform_real_distribution<double> o(-0.6, 0.6);
  for (int t = 0; t < 10; ++t) {
    const auto p = random_params(rng, 64);
    const Vec3 off{o(rng), o(rng), o(rng)};
    const auto there = reproject(p, anchors, off);
    const auto back = reproject(there.params, there.anchors, -off);
    for (std::size_t k = 0; k < 64; ++k) {
      EXPECT_NEAR(back.params.depth[k], p.depth[k], 1e-9);
      EXPECT_NEAR(back.anchors[k].x, anchors[k].x, 1e-9);
      EXPECT_NEAR(back.anchors[k].y, anchors[k].y, 1e-9);
      EXPECT_NEAR(back.anchors[k].z, anchors[k].z, 1e-9);
      EXPECT_NEAR(back.params.distribution[k], p.distribution[k], 1e-9);
    }
    for (int c = 0; c < 3; ++c) {
      EXPECT_NEAR(back.params.intensity[c], p.intensity[c], 1e-9 * p.intensity[c]);
    }
  }
}

TEST(Reproject, RejectsOffsetsReachingTheShell) {
  const auto anchors = generate_anchors(8);
  const auto p = delta_params(8, 0, {1, 1, 1}, kBlack, 2.0);
  EXPECT_THROW(reproject(p, anchors, {0, 0, 2.0}), InvalidArgument);
  EXPECT_THROW(reproject(p, anchors, {0, 0, NAN}), InvalidArgument);
}

TEST(SpatiallyVaryingMap, MovingTowardLightBrightensIt) {
  const ProjectionConfig cfg{128, 64, 0.0025, {0.0025}};
  const Vec3 dir = pixel_direction(32, 0, 64, 128);  // near +x on the equator
  const AnchorSet anchors({dir, {0, 0, 1}, {0, 0, -1}});
  IlluminationParams p;
  p.n = 3;
  p.distribution = {1.0, 0.0, 0.0};
  p.intensity = {5, 5, 5};
  p.depth = {3.0, 3.0, 3.0};
  const Panorama here = spatially_varying_map(p, anchors, {0, 0, 0}, cfg);
  const Panorama closer = spatially_varying_map(p, anchors, 1.0 * dir, cfg);
  EXPECT_GT(luminance(closer[argmax_luminance(closer)]),
            luminance(here[argmax_luminance(here)]));
  // A sideways step along +y moves the light to smaller azimuths.
  const Panorama aside = spatially_varying_map(p, anchors, {0, 1.5, 0}, cfg);
  EXPECT_NE(argmax_luminance(aside) % 128, argmax_luminance(here) % 128);
}

}  // namespace
}  // namespace gmlight
