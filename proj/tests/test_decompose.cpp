// Copyright 2026 The gmlight Authors
// SPDX-License-Identifier: Apache-2.0

#include "gmlight/decompose.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

namespace gmlight {
namespace {

Panorama random_panorama(std::mt19937_64& rng, std::size_t w, std::size_t h) {
  std::uniform_real_distribution<double> val(0.0, 4.0);
  std::vector<Rgb> px(w * h);
  for (auto& p : px) p = {val(rng), val(rng), val(rng)};
  return Panorama(w, h, std::move(px));
}

Panorama doubled(const Panorama& p) {
  std::vector<Rgb> px(p.pixels().begin(), p.pixels().end());
  for (auto& q : px) {
    for (double& c : q) c *= 2.0;
  }
  return Panorama(p.width(), p.height(), std::move(px));
}

TEST(LightPixelCount, CeilingWithoutRoundingBumps) {
  EXPECT_EQ(light_pixel_count(0.05, 128 * 256), 1639u);
  EXPECT_EQ(light_pixel_count(0.05, 20), 1u);
  EXPECT_EQ(light_pixel_count(0.05, 21), 2u);
  EXPECT_EQ(light_pixel_count(0.1, 30), 3u);
  EXPECT_THROW(light_pixel_count(0.0, 10), InvalidArgument);
  EXPECT_THROW(light_pixel_count(1.0, 10), InvalidArgument);
}

TEST(SelectLightMask, TiesTakeEarliestPixels) {
  const Panorama p(256, 128, Rgb{1, 1, 1});
  const auto mask = select_light_mask(p, 0.05);
  for (std::size_t i = 0; i < mask.size(); ++i) EXPECT_EQ(mask[i], i < 1639);
}

TEST(SelectLightMask, BrightPixelIsSelected) {
  Panorama p(64, 32);
  p.set(20, 50, {0, 0, 1});
  const auto mask = select_light_mask(p, 0.05);
  EXPECT_TRUE(mask[20 * 64 + 50]);
  EXPECT_EQ(std::count(mask.begin(), mask.end(), true), 103);
}

TEST(SelectLightMask, RanksByLuminance) {
  // Green weighs more than red, so (0,1,0) outranks (2,0,0).
  Panorama p(10, 2);
  p.set(0, 0, {2, 0, 0});
  p.set(1, 9, {0, 1, 0});
  const auto mask = select_light_mask(p, 0.05);
  EXPECT_TRUE(mask[19]);
  EXPECT_FALSE(mask[0]);
}

TEST(Decompose, SingleSource) {
  const auto anchors = generate_anchors(128);
  Panorama p(256, 128);
  p.set(40, 77, {10, 10, 10});
  const auto d = decompose(p, nullptr, anchors);
  EXPECT_EQ(d.params.intensity, (Rgb{10, 10, 10}));
  EXPECT_EQ(d.params.ambient, kBlack);
  const std::size_t k = nearest_anchor(pixel_direction(40, 77, 128, 256), anchors);
  for (std::size_t i = 0; i < 128; ++i) {
    EXPECT_EQ(d.params.distribution[i], i == k ? 1.0 : 0.0);
    EXPECT_EQ(d.params.depth[i], 1.0);
  }
  EXPECT_FALSE(d.uniform_fallback);
}

TEST(Decompose, UniformPanorama) {
  const auto d = decompose(Panorama(256, 128, Rgb{1, 1, 1}), nullptr,
                           generate_anchors(128));
  EXPECT_EQ(d.params.intensity, (Rgb{1639, 1639, 1639}));
  EXPECT_EQ(d.params.ambient, (Rgb{1, 1, 1}));
}

TEST(Decompose, ConstantDepth) {
  const ScalarRaster depth{256, 128, std::vector<double>(256 * 128, 2.5)};
  const auto d = decompose(Panorama(256, 128, Rgb{1, 1, 1}), &depth,
                           generate_anchors(128));
  for (double x : d.params.depth) EXPECT_EQ(x, 2.5);
}

TEST(Decompose, DepthIsMeanOverAllAssignedPixels) {
  const auto anchors = generate_anchors(16);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> dd(0.5, 5.0);
  ScalarRaster depth{32, 16, std::vector<double>(32 * 16)};
  for (double& x : depth.values) x = dd(rng);
  const auto d = decompose(random_panorama(rng, 32, 16), &depth, anchors);
  std::vector<double> sum(16, 0.0);
  std::vector<int> hits(16, 0);
  for (std::size_t r = 0; r < 16; ++r) {
    for (std::size_t c = 0; c < 32; ++c) {
      const std::size_t k = nearest_anchor(pixel_direction(r, c, 16, 32), anchors);
      sum[k] += depth.at(r, c);
      ++hits[k];
    }
  }
  for (std::size_t k = 0; k < 16; ++k) {
    ASSERT_GT(hits[k], 0);
    EXPECT_NEAR(d.params.depth[k], sum[k] / hits[k], 1e-12);
  }
}

TEST(Decompose, EmptyAnchorCopiesNearestPopulatedDepth) {
  // A 2x1 map has pixels at +y and -y only. Anchors 2 and 3 own no pixel:
  // anchor 2 (+z) is equidistant from both populated anchors and takes the
  // lower index, anchor 3 is closer to -y.
  const double s = std::sqrt(0.5);
  const AnchorSet anchors({{0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, -s, -s}});
  const ScalarRaster depth{2, 1, {3.0, 7.0}};
  const auto d = decompose(Panorama(2, 1, Rgb{1, 1, 1}), &depth, anchors);
  EXPECT_EQ(d.params.depth, (std::vector<double>{3.0, 7.0, 3.0, 7.0}));
}

TEST(Decompose, ZeroLightFallsBackToUniform) {
  const auto d = decompose(Panorama(16, 8), nullptr, generate_anchors(4));
  EXPECT_TRUE(d.uniform_fallback);
  for (double x : d.params.distribution) EXPECT_EQ(x, 0.25);
  EXPECT_NO_THROW(d.params.validate());
}

TEST(Decompose, RejectsBadDepth) {
  const Panorama p(4, 2, Rgb{1, 1, 1});
  const auto anchors = generate_anchors(4);
  const ScalarRaster wrong{3, 2, std::vector<double>(6, 1.0)};
  EXPECT_THROW(decompose(p, &wrong, anchors), InvalidArgument);
  ScalarRaster zero{4, 2, std::vector<double>(8, 1.0)};
  zero.values[3] = 0.0;
  EXPECT_THROW(decompose(p, &zero, anchors), InvalidArgument);
}

TEST(Decompose, ConservationAndScaleCovariance) {
  std::mt19937_64 rng(11);
  const auto anchors = generate_anchors(32);
  for (int t = 0; t < 10; ++t) {
    const Panorama p = random_panorama(rng, 48, 24);
    const auto d = decompose(p, nullptr, anchors);
    const double total = std::accumulate(d.params.distribution.begin(),
                                         d.params.distribution.end(), 0.0);
    EXPECT_NEAR(total, 1.0, 1e-9);
    Rgb sum = kBlack;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (d.light_mask[i]) {
        for (int c = 0; c < 3; ++c) sum[c] += p[i][c];
      }
    }
    EXPECT_EQ(d.params.intensity, sum);

    const auto d2 = decompose(doubled(p), nullptr, anchors);
    for (int c = 0; c < 3; ++c) {
      EXPECT_EQ(d2.params.intensity[c], 2 * d.params.intensity[c]);
      EXPECT_EQ(d2.params.ambient[c], 2 * d.params.ambient[c]);
    }
    EXPECT_EQ(d2.params.distribution, d.params.distribution);
  }
}

TEST(Decompose, AnchorRelabelingPermutesOutputs) {
  std::mt19937_64 rng(2);
  const auto base = generate_anchors(12);
  std::vector<Vec3> dirs(base.directions().begin(), base.directions().end());
  std::vector<std::size_t> perm(12);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Vec3> shuffled(12);
  for (std::size_t k = 0; k < 12; ++k) shuffled[k] = dirs[perm[k]];
  const Panorama p = random_panorama(rng, 40, 20);
  ScalarRaster depth{40, 20, std::vector<double>(800)};
  std::uniform_real_distribution<double> dd(1.0, 3.0);
  for (double& x : depth.values) x = dd(rng);
  const auto a = decompose(p, &depth, base);
  const auto b = decompose(p, &depth, AnchorSet(shuffled));
  for (std::size_t k = 0; k < 12; ++k) {
    EXPECT_NEAR(b.params.distribution[k], a.params.distribution[perm[k]], 1e-15);
    EXPECT_NEAR(b.params.depth[k], a.params.depth[perm[k]], 1e-12);
  }
}

TEST(Decompose, SolidAngleWeighting) {
  const Panorama p(32, 16, Rgb{2, 2, 2});
  const auto d = decompose(p, nullptr, generate_anchors(8), {0.05, true});
  EXPECT_NEAR(d.params.ambient[0], 2.0, 1e-12);
  double area = 0.0;
  const auto mask = select_light_mask(p, 0.05);
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (mask[i]) area += solid_angle(i / 32, 16, 32);
  }
  EXPECT_NEAR(d.params.intensity[0], 2.0 * area, 1e-12);
}

TEST(RecomposeCheck, EqualsIntensity) {
  IlluminationParams p{3, {0.2, 0.3, 0.5}, {4, 5, 6}, {0, 0, 0}, {1, 1, 1}};
  const Rgb r = recompose_check(p);
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(r[c], p.intensity[c], 1e-9 * p.intensity[c]);
  p.intensity = kBlack;
  EXPECT_EQ(recompose_check(p), kBlack);
  p.intensity = {4, 5, 6};
  p.distribution[1] = 0.4;
  EXPECT_GT(std::abs(recompose_check(p)[0] - 4.0), 1e-3);
}

TEST(IlluminationParams, Validation) {
  IlluminationParams p{2, {0.5, 0.5}, {1, 1, 1}, {0, 0, 0}, {1, 1}};
  EXPECT_NO_THROW(p.validate());
  p.distribution = {0.5, 0.6};
  EXPECT_THROW(p.validate(), InvalidArgument);
  p.distribution = {0.5, 0.5};
  p.depth = {1, 0};
  EXPECT_THROW(p.validate(), InvalidArgument);
  p.depth = {1};
  EXPECT_THROW(p.validate(), InvalidArgument);
}

}  // namespace
}  // namespace gmlight
