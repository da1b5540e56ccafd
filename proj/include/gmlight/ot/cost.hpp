// Copyright 2026 The gmlight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gmlight/errors.hpp"
#include "gmlight/sphere_geom.hpp"

namespace gmlight {

// Dense row-major n x n matrix of finite nonnegative reals.
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t n, double fill = 0.0)
      : n_(n), data_(n * n, fill) {}
  SquareMatrix(std::size_t n, std::vector<double> entries)
      : n_(n), data_(std::move(entries)) {
    if (data_.size() != n * n) {
      throw InvalidArgument("matrix needs " + std::to_string(n * n) +
                            " entries, got " + std::to_string(data_.size()));
    }
  }

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * n_ + j];
  }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  std::span<const double> entries() const noexcept { return data_; }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(data_).subspan(i * n_, n_);
  }

  double max() const {
    return data_.empty() ? 0.0 : *std::max_element(data_.begin(), data_.end());
  }

  friend bool operator==(const SquareMatrix&, const SquareMatrix&) = default;

 protected:
  void require_nonnegative(const char* what) const {
    for (double x : data_) {
      if (!std::isfinite(x) || x < 0.0) {
        throw InvalidArgument(std::string(what) +
                              " entries must be finite and >= 0");
      }
    }
  }

  std::size_t n_ = 0;
  std::vector<double> data_;
};

// Unit transport costs between the anchors of two distributions.
class CostMatrix : public SquareMatrix {
 public:
  CostMatrix() = default;
  CostMatrix(std::size_t n, std::vector<double> entries)
      : SquareMatrix(n, std::move(entries)) {
    require_nonnegative("cost");
  }
};

// Mass moved between anchor i of the source and anchor j of the target.
class TransportPlan : public SquareMatrix {
 public:
  TransportPlan() = default;
  explicit TransportPlan(std::size_t n) : SquareMatrix(n) {}
  TransportPlan(std::size_t n, std::vector<double> entries)
      : SquareMatrix(n, std::move(entries)) {
    require_nonnegative("plan");
  }

  std::vector<double> row_sums() const {
    std::vector<double> out(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) out[i] += (*this)(i, j);
    }
    return out;
  }
  std::vector<double> col_sums() const {
    std::vector<double> out(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) out[j] += (*this)(i, j);
    }
    return out;
  }
};

inline double transport_cost(const CostMatrix& c, const TransportPlan& t) {
  double s = 0.0;
  for (std::size_t k = 0; k < c.entries().size(); ++k) {
    s += c.entries()[k] * t.entries()[k];
  }
  return s;
}

// Squared Euclidean distance between the anchor points placed at their
// depths: |D_i o_i - D'_j o_j|^2 by the law of cosines.
inline CostMatrix geometric_cost(const AnchorSet& anchors,
                                 std::span<const double> depth_u,
                                 std::span<const double> depth_v) {
  const std::size_t n = anchors.size();
  if (depth_u.size() != n || depth_v.size() != n) {
    throw InvalidArgument("depth vectors must have one entry per anchor");
  }
  auto positive = [](double d) { return std::isfinite(d) && d > 0.0; };
  if (!std::all_of(depth_u.begin(), depth_u.end(), positive) ||
      !std::all_of(depth_v.begin(), depth_v.end(), positive)) {
    throw InvalidArgument("depths must be strictly positive");
  }
  const auto angles = pairwise_angles(anchors);
  std::vector<double> c(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double du = depth_u[i];
      const double dv = depth_v[j];
      const double v =
          du * du + dv * dv - 2.0 * du * dv * std::cos(angles[i * n + j]);
      c[i * n + j] = std::max(v, 0.0);
    }
  }
  return CostMatrix(n, std::move(c));
}

// Great-circle distance between anchors (depth-agnostic baseline cost).
inline CostMatrix spherical_cost(const AnchorSet& anchors) {
  return CostMatrix(anchors.size(), pairwise_angles(anchors));
}

}  // namespace gmlight
