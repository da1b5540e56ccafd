// Copyright 2026 The gmlight Authors
// SPDX-License-Identifier: Apache-2.0

// Exact optimal transport between two discrete distributions, solved as a
// min-cost flow with successive shortest paths (Dijkstra on reduced costs).
// Dense O(n^2) per search; intended as a reference at small n.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "gmlight/errors.hpp"
#include "gmlight/ot/cost.hpp"

namespace gmlight {

inline constexpr std::size_t kExactEmdMaxSize = 64;

struct ExactEmdResult {
  double value = 0.0;
  TransportPlan plan;
};

namespace detail {

inline void check_distribution(std::span<const double> p, std::size_t n,
                               const char* name, double mass_tol) {
  if (p.size() != n) {
    throw InvalidArgument(std::string(name) + " has " +
                          std::to_string(p.size()) + " entries, expected " +
                          std::to_string(n));
  }
  double s = 0.0;
  for (double x : p) {
    if (!std::isfinite(x) || x < 0.0) {
      throw InvalidArgument(std::string(name) +
                            " entries must be finite and >= 0");
    }
    s += x;
  }
  if (std::abs(s - 1.0) > mass_tol) {
    throw InvalidArgument(std::string(name) + " must sum to 1 (sum " +
                          std::to_string(s) + ")");
  }
}

}  // namespace detail

inline ExactEmdResult exact_emd(std::span<const double> u,
                                std::span<const double> v,
                                const CostMatrix& c) {
  const std::size_t n = c.size();
  if (n > kExactEmdMaxSize) {
    throw UnsupportedScale("exact_emd supports n <= 64, got " +
                           std::to_string(n));
  }
  detail::check_distribution(u, n, "u", 1e-9);
  detail::check_distribution(v, n, "v", 1e-9);

  // Residual masses; the smaller total is shipped in full.
  std::vector<double> supply(u.begin(), u.end());
  std::vector<double> demand(v.begin(), v.end());
  const double total = std::min(std::accumulate(u.begin(), u.end(), 0.0),
                                std::accumulate(v.begin(), v.end(), 0.0));
  std::vector<double> flow(n * n, 0.0);

  // Node layout: [0, n) sources, [n, 2n) sinks, then the super source and
  // super sink. Potentials keep reduced costs of residual arcs nonnegative.
  const double inf = std::numeric_limits<double>::infinity();
  const std::size_t kSource = 2 * n;
  const std::size_t kSink = 2 * n + 1;
  std::vector<double> potential(2 * n + 2, 0.0);
  std::vector<double> dist(2 * n);
  std::vector<std::ptrdiff_t> parent(2 * n);
  std::vector<char> done(2 * n);
  const double eps_mass = 1e-15;

  double shipped = 0.0;
  for (std::size_t round = 0; round < 4 * n * n + 8; ++round) {
    if (total - shipped <= eps_mass) break;
    std::fill(dist.begin(), dist.end(), inf);
    std::fill(parent.begin(), parent.end(), -1);
    std::fill(done.begin(), done.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      if (supply[i] > eps_mass) {
        dist[i] = std::max(potential[kSource] - potential[i], 0.0);
      }
    }
    while (true) {
      std::size_t x = 2 * n;
      double best = inf;
      for (std::size_t k = 0; k < 2 * n; ++k) {
        if (!done[k] && dist[k] < best) {
          best = dist[k];
          x = k;
        }
      }
      if (x == 2 * n) break;
      done[x] = 1;
      if (x < n) {
        for (std::size_t j = 0; j < n; ++j) {
          const double rc =
              std::max(c(x, j) + potential[x] - potential[n + j], 0.0);
          if (best + rc < dist[n + j]) {
            dist[n + j] = best + rc;
            parent[n + j] = static_cast<std::ptrdiff_t>(x);
          }
        }
      } else {
        const std::size_t j = x - n;
        for (std::size_t i = 0; i < n; ++i) {
          if (flow[i * n + j] <= eps_mass) continue;
          const double rc =
              std::max(-c(i, j) + potential[x] - potential[i], 0.0);
          if (best + rc < dist[i]) {
            dist[i] = best + rc;
            parent[i] = static_cast<std::ptrdiff_t>(x);
          }
        }
      }
    }
    std::size_t target = 2 * n;
    double target_dist = inf;
    for (std::size_t j = 0; j < n; ++j) {
      if (demand[j] <= eps_mass || dist[n + j] == inf) continue;
      const double d =
          dist[n + j] + std::max(potential[n + j] - potential[kSink], 0.0);
      if (d < target_dist) {
        target_dist = d;
        target = n + j;
      }
    }
    if (target == 2 * n) break;
    for (std::size_t k = 0; k < 2 * n; ++k) {
      potential[k] += std::min(dist[k], target_dist);
    }
    potential[kSink] += target_dist;
    // Bottleneck along the path back to an originating source.
    double amount = demand[target - n];
    std::size_t x = target;
    while (parent[x] >= 0) {
      const auto p = static_cast<std::size_t>(parent[x]);
      if (x < n) amount = std::min(amount, flow[x * n + (p - n)]);
      x = p;
    }
    amount = std::min(amount, supply[x]);
    const std::size_t origin = x;
    x = target;
    while (parent[x] >= 0) {
      const auto p = static_cast<std::size_t>(parent[x]);
      if (x >= n) {
        flow[p * n + (x - n)] += amount;
      } else {
        double& f = flow[x * n + (p - n)];
        f -= amount;
        if (f < eps_mass) f = 0.0;
      }
      x = p;
    }
    supply[origin] -= amount;
    demand[target - n] -= amount;
    shipped += amount;
  }

  TransportPlan plan(n, std::move(flow));
  return {transport_cost(c, plan), std::move(plan)};
}

}  // namespace gmlight
