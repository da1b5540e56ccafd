// Copyright 2026 The gmlight Authors
// SPDX-License-Identifier: Apache-2.0

// Entropic optimal transport between anchor distributions.
//
// Balanced mode minimises <C,T> + eps * sum T log T subject to T 1 = u and
// T^T 1 = v. Unbalanced mode replaces the hard marginals by
// rho * KL(T 1 | u) + rho * KL(T^T 1 | v).
//
// Both run on a stabilised kernel K_ij = exp((alpha_i + beta_j - C_ij)/eps)
// whose scalings a, b are absorbed into the potentials (alpha, beta) when
// they drift far from 1, and both anneal eps geometrically from the cost
// scale down to the target. At each level a short run of (generalized)
// Sinkhorn sweeps warm-starts a damped Newton ascent on the dual: at
// eps = 1e-4 the plan is supported on a near-tree and plain sweeps contract
// far too slowly to reach 1e-9 marginals. The unbalanced sweep is the
// balanced one damped by the exponent rho / (rho + eps), preceded by the
// closed-form optimal translation (f + t, g - t) of the potentials.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gmlight/errors.hpp"
#include "gmlight/ot/cost.hpp"
#include "gmlight/ot/exact_emd.hpp"

namespace gmlight {

struct SinkhornConfig {
  double epsilon = 1e-4;
  std::size_t max_iterations = 10000;
  // Stop once the L1 violation of the optimality conditions (the marginal
  // constraints, in balanced mode) is at most this.
  double tolerance = 1e-9;
  // rho: weight of both KL penalties in unbalanced mode.
  double kl_weight = 1.0;
  // Annealing ratio between successive epsilon levels.
  double epsilon_decay = 0.25;

  void validate() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
      throw InvalidArgument("epsilon must be positive");
    }
    if (!(tolerance > 0.0)) throw InvalidArgument("tolerance must be positive");
    if (!(kl_weight > 0.0) || !std::isfinite(kl_weight)) {
      throw InvalidArgument("kl_weight must be positive");
    }
    if (!(epsilon_decay > 0.0 && epsilon_decay < 1.0)) {
      throw InvalidArgument("epsilon_decay must lie in (0, 1)");
    }
    if (max_iterations == 0) {
      throw InvalidArgument("max_iterations must be positive");
    }
  }
};

struct SinkhornDiagnostics {
  // Sinkhorn sweeps plus Newton steps, summed over all epsilon levels.
  std::size_t iterations = 0;
  bool converged = false;
  double marginal_error = 0.0;
  // H(T) = -sum T log T of the returned plan.
  double entropy = 0.0;
  // Reported value minus eps H(T): the quantity actually minimised.
  double entropic_objective = 0.0;
};

struct SinkhornResult {
  // <C,T> of the entropic plan; -eps H(T) is excluded.
  double value = 0.0;
  TransportPlan plan;
  std::vector<double> dual_u;
  std::vector<double> dual_v;
  SinkhornDiagnostics diagnostics;

  bool converged() const noexcept { return diagnostics.converged; }
};

struct UnbalancedDiagnostics : SinkhornDiagnostics {
  double transport_cost = 0.0;
  double kl_u = 0.0;
  double kl_v = 0.0;
};

struct UnbalancedResult {
  // <C,T> + rho KL(T 1|u) + rho KL(T^T 1|v) at the entropic optimum.
  double value = 0.0;
  TransportPlan plan;
  std::vector<double> dual_u;
  std::vector<double> dual_v;
  UnbalancedDiagnostics diagnostics;

  bool converged() const noexcept { return diagnostics.converged; }
};

// KL(a|b) = sum a log(a/b) - a + b, with 0 log 0 = 0.
inline double kl_divergence(std::span<const double> a,
                            std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > 0.0) {
      if (!(b[i] > 0.0)) return std::numeric_limits<double>::infinity();
      s += a[i] * std::log(a[i] / b[i]);
    }
    s += b[i] - a[i];
  }
  return s;
}

namespace detail {

inline double log_sum_exp(std::span<const double> x) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : x) m = std::max(m, v);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

inline std::vector<double> epsilon_schedule(double cost_scale, double target,
                                            double decay) {
  std::vector<double> levels;
  double e = std::max(cost_scale, target);
  while (e > target * (1.0 + 1e-12)) {
    levels.push_back(e);
    e *= decay;
  }
  levels.push_back(target);
  return levels;
}

inline double entropy(std::span<const double> t) {
  double h = 0.0;
  for (double x : t) {
    if (x > 0.0) h -= x * std::log(x);
  }
  return h;
}

inline std::vector<std::size_t> support(std::span<const double> p) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) idx.push_back(i);
  }
  return idx;
}

inline void check_measure(std::span<const double> p, std::size_t n,
                          const char* name) {
  if (p.size() != n) {
    throw InvalidArgument(std::string(name) + " has " +
                          std::to_string(p.size()) + " entries, expected " +
                          std::to_string(n));
  }
  for (double x : p) {
    if (!std::isfinite(x) || x < 0.0) {
      throw InvalidArgument(std::string(name) +
                            " entries must be finite and >= 0");
    }
  }
}

// In-place Cholesky solve of a dense SPD system. Pivots that collapse
// (a support graph that is numerically disconnected) are floored, which
// freezes the corresponding direction.
inline void solve_spd(std::vector<double>& a, std::vector<double>& x,
                      std::size_t dim) {
  double scale = 0.0;
  for (std::size_t i = 0; i < dim; ++i) scale = std::max(scale, a[i * dim + i]);
  const double floor = std::max(scale, 1e-300) * 1e-14;
  for (std::size_t j = 0; j < dim; ++j) {
    double d = a[j * dim + j];
    for (std::size_t p = 0; p < j; ++p) d -= a[j * dim + p] * a[j * dim + p];
    d = std::sqrt(std::max(d, floor));
    a[j * dim + j] = d;
    for (std::size_t i = j + 1; i < dim; ++i) {
      double s = a[i * dim + j];
      for (std::size_t p = 0; p < j; ++p) s -= a[i * dim + p] * a[j * dim + p];
      a[i * dim + j] = s / d;
    }
  }
  for (std::size_t i = 0; i < dim; ++i) {
    double s = x[i];
    for (std::size_t p = 0; p < i; ++p) s -= a[i * dim + p] * x[p];
    x[i] = s / a[i * dim + i];
  }
  for (std::size_t i = dim; i-- > 0;) {
    double s = x[i];
    for (std::size_t p = i + 1; p < dim; ++p) s -= a[p * dim + i] * x[p];
    x[i] = s / a[i * dim + i];
  }
}

// Solver restricted to the supports of u and v (m rows, k columns, all
// masses positive). rho = +inf selects balanced mode.
class EntropicSolver {
 public:
  EntropicSolver(std::vector<double> u, std::vector<double> v,
                 std::vector<double> cost, const SinkhornConfig& cfg,
                 double rho)
      : m_(u.size()),
        k_(v.size()),
        u_(std::move(u)),
        v_(std::move(v)),
        cost_(std::move(cost)),
        cfg_(cfg),
        rho_(rho),
        alpha_(m_, 0.0),
        beta_(k_, 0.0),
        a_(m_, 1.0),
        b_(k_, 1.0),
        kernel_(m_ * k_),
        kb_(m_),
        kta_(k_) {
    log_u_.resize(m_);
    log_v_.resize(k_);
    for (std::size_t i = 0; i < m_; ++i) log_u_[i] = std::log(u_[i]);
    for (std::size_t j = 0; j < k_; ++j) log_v_[j] = std::log(v_[j]);
  }

  void run() {
    const double scale = *std::max_element(cost_.begin(), cost_.end());
    const auto levels =
        epsilon_schedule(scale, cfg_.epsilon, cfg_.epsilon_decay);
    for (std::size_t l = 0; l < levels.size(); ++l) {
      const bool last = l + 1 == levels.size();
      eps_ = levels[l];
      absorb();
      // Coarse levels only need a warm start for the next one.
      const double tol = last ? cfg_.tolerance : std::max(cfg_.tolerance, 1e-6);
      converged_ = sweep(tol, kSinkhornWarmup);
      if (!converged_) converged_ = newton(tol);
      if (!converged_) converged_ = sweep(tol, cfg_.max_iterations);
      if (!converged_) break;
      // Newton is quadratic near the optimum, so a few more steps make the
      // result much less sensitive to where the stopping test happened to
      // trigger. Only improving steps are accepted.
      if (last) newton(cfg_.tolerance * kPolish);
    }
  }

  bool converged() const { return converged_; }
  std::size_t iterations() const { return iterations_; }
  double error() const { return error_; }

  std::vector<double> f() const {
    std::vector<double> out(m_);
    for (std::size_t i = 0; i < m_; ++i) out[i] = f_at(i);
    return out;
  }
  std::vector<double> g() const {
    std::vector<double> out(k_);
    for (std::size_t j = 0; j < k_; ++j) out[j] = g_at(j);
    return out;
  }
  std::vector<double> plan() const {
    std::vector<double> t(m_ * k_);
    for (std::size_t i = 0; i < m_; ++i) {
      for (std::size_t j = 0; j < k_; ++j) {
        t[i * k_ + j] = a_[i] * kernel_[i * k_ + j] * b_[j];
      }
    }
    return t;
  }

 private:
  static constexpr std::size_t kSinkhornWarmup = 200;
  static constexpr std::size_t kNewtonSteps = 60;
  static constexpr double kMaxStep = 20.0;
  static constexpr double kPolish = 1e-3;

  bool balanced() const { return !std::isfinite(rho_); }
  // The unbalanced primal-dual relation carries an extra e^-1 because the
  // entropy is sum T log T without the linear term.
  double offset() const { return balanced() ? 0.0 : 1.0; }
  double damping() const { return balanced() ? 1.0 : rho_ / (rho_ + eps_); }
  double f_at(std::size_t i) const { return alpha_[i] + eps_ * std::log(a_[i]); }
  double g_at(std::size_t j) const { return beta_[j] + eps_ * std::log(b_[j]); }

  // Row target of the optimality condition: u (balanced) or u e^{-f/rho}.
  double row_target(std::size_t i, double f) const {
    return balanced() ? u_[i] : std::exp(log_u_[i] - f / rho_);
  }
  double col_target(std::size_t j, double g) const {
    return balanced() ? v_[j] : std::exp(log_v_[j] - g / rho_);
  }

  void absorb() {
    for (std::size_t i = 0; i < m_; ++i) {
      alpha_[i] += eps_old_ * std::log(a_[i]);
      a_[i] = 1.0;
    }
    for (std::size_t j = 0; j < k_; ++j) {
      beta_[j] += eps_old_ * std::log(b_[j]);
      b_[j] = 1.0;
    }
    eps_old_ = eps_;
    build_kernel(alpha_, beta_, kernel_);
  }

  void build_kernel(std::span<const double> alpha, std::span<const double> beta,
                    std::span<double> out) const {
    const double off = offset();
    for (std::size_t i = 0; i < m_; ++i) {
      for (std::size_t j = 0; j < k_; ++j) {
        out[i * k_ + j] =
            std::exp((alpha[i] + beta[j] - cost_[i * k_ + j]) / eps_ - off);
      }
    }
  }

  // Exact log-domain half steps, used when a kernel row or column has
  // underflowed. Expects a = b = 1.
  void log_update_rows() {
    std::vector<double> buf(k_);
    for (std::size_t i = 0; i < m_; ++i) {
      for (std::size_t j = 0; j < k_; ++j) {
        buf[j] = (beta_[j] - cost_[i * k_ + j]) / eps_ - offset();
      }
      alpha_[i] = damping() * eps_ * (log_u_[i] - log_sum_exp(buf));
    }
    build_kernel(alpha_, beta_, kernel_);
  }

  void log_update_cols() {
    std::vector<double> buf(m_);
    for (std::size_t j = 0; j < k_; ++j) {
      for (std::size_t i = 0; i < m_; ++i) {
        buf[i] = (alpha_[i] - cost_[i * k_ + j]) / eps_ - offset();
      }
      beta_[j] = damping() * eps_ * (log_v_[j] - log_sum_exp(buf));
    }
    build_kernel(alpha_, beta_, kernel_);
  }

  static bool usable(double x) { return x > 1e-200 && x < 1e200; }

  static bool drifted(std::span<const double> s) {
    return std::any_of(s.begin(), s.end(),
                       [](double x) { return x > 1e50 || x < 1e-50; });
  }

  void mult_kernel(std::span<const double> b, std::span<double> out) const {
    for (std::size_t i = 0; i < m_; ++i) {
      const double* row = &kernel_[i * k_];
      double s = 0.0;
      for (std::size_t j = 0; j < k_; ++j) s += row[j] * b[j];
      out[i] = s;
    }
  }

  void mult_kernel_t(std::span<const double> a, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < m_; ++i) {
      const double* row = &kernel_[i * k_];
      const double ai = a[i];
      for (std::size_t j = 0; j < k_; ++j) out[j] += row[j] * ai;
    }
  }

  // Optimal (f + t, g - t) for the KL terms; leaves the plan unchanged.
  void translate() {
    std::vector<double> ta(m_), tb(k_);
    for (std::size_t i = 0; i < m_; ++i) ta[i] = log_u_[i] - f_at(i) / rho_;
    for (std::size_t j = 0; j < k_; ++j) tb[j] = log_v_[j] - g_at(j) / rho_;
    const double t = 0.5 * rho_ * (log_sum_exp(ta) - log_sum_exp(tb));
    for (double& x : alpha_) x += t;
    for (double& x : beta_) x -= t;
  }

  // a_i = (u_i / (K b)_i)^kappa * exp(-alpha_i / (rho + eps)), the kernel
  // form of f = kappa * eps * (log u - log sum exp((g - C)/eps - 1)).
  void rescale(std::span<double> s, std::span<const double> marginal,
               std::span<const double> target, std::span<const double> pot) {
    const double kappa = damping();
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (balanced()) {
        s[i] = target[i] / marginal[i];
      } else {
        s[i] = std::pow(target[i] / marginal[i], kappa) *
               std::exp(-pot[i] / (rho_ + eps_));
      }
    }
  }

  // Sweeps until the error drops below tol, the global iteration cap is hit,
  // or `budget` sweeps have run in this call.
  bool sweep(double tol, std::size_t budget) {
    const std::size_t stop =
        std::min(cfg_.max_iterations, iterations_ + budget);
    bool fresh = true;
    while (true) {
      mult_kernel(b_, kb_);
      if (!std::all_of(kb_.begin(), kb_.end(), usable)) {
        absorb();
        log_update_rows();
        mult_kernel(b_, kb_);
        fresh = true;
      }
      if (!fresh) {
        // Columns are stationary right after the b update.
        double err = 0.0;
        for (std::size_t i = 0; i < m_; ++i) {
          err += std::abs(a_[i] * kb_[i] - row_target(i, f_at(i)));
        }
        error_ = err;
        if (err <= tol) return true;
      }
      if (iterations_ >= stop) return false;
      if (!balanced()) {
        absorb();
        translate();
        build_kernel(alpha_, beta_, kernel_);
        mult_kernel(b_, kb_);
      }
      rescale(a_, kb_, u_, alpha_);

      mult_kernel_t(a_, kta_);
      if (!std::all_of(kta_.begin(), kta_.end(), usable)) {
        absorb();
        log_update_cols();
        mult_kernel_t(a_, kta_);
      }
      rescale(b_, kta_, v_, beta_);
      ++iterations_;
      fresh = false;
      if (drifted(a_) || drifted(b_)) absorb();
    }
  }

  // L1 violation of the optimality conditions for the given potentials and
  // their kernel (a = b = 1).
  double kernel_error(std::span<const double> alpha,
                      std::span<const double> beta,
                      std::span<const double> kernel) const {
    double err = 0.0;
    std::vector<double> cols(k_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) {
      double r = 0.0;
      for (std::size_t j = 0; j < k_; ++j) {
        r += kernel[i * k_ + j];
        cols[j] += kernel[i * k_ + j];
      }
      err += std::abs(r - row_target(i, alpha[i]));
    }
    for (std::size_t j = 0; j < k_; ++j) {
      err += std::abs(cols[j] - col_target(j, beta[j]));
    }
    return err;
  }

  // Newton ascent on the dual. With P_i, Q_j the row/column targets the
  // (eps-scaled, negated) Hessian is
  //   [ diag(r + eps P/rho)   T                   ]
  //   [ T^T                   diag(c + eps Q/rho) ]
  // (the eps/rho terms vanish in balanced mode). The row block is
  // eliminated; the Schur complement in the column block is a graph
  // Laplacian with weights w_jl = sum_i T_ij T_il / R_i plus a diagonal,
  // assembled term by term so that no cancellation occurs. In balanced mode
  // the last column potential is pinned to remove the translation null space.
  bool newton(double tol) {
    absorb();
    const double ridge = balanced() ? 0.0 : eps_ / rho_;
    std::vector<double> r(m_), c(k_), grad_f(m_), grad_g(k_), big_r(m_);
    std::vector<double> ridge_row(m_), extra(k_), rhs(k_), dg(k_), df(m_);
    std::vector<double> w(k_ * k_);
    std::vector<double> trial_alpha(m_), trial_beta(k_), trial_kernel(m_ * k_);
    double err = kernel_error(alpha_, beta_, kernel_);
    for (std::size_t step = 0; step < kNewtonSteps; ++step) {
      error_ = err;
      if (err <= tol) return true;
      if (iterations_ >= cfg_.max_iterations) return false;
      ++iterations_;
      std::fill(c.begin(), c.end(), 0.0);
      for (std::size_t i = 0; i < m_; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < k_; ++j) {
          s += kernel_[i * k_ + j];
          c[j] += kernel_[i * k_ + j];
        }
        r[i] = s;
      }
      if (!std::all_of(r.begin(), r.end(), usable) ||
          !std::all_of(c.begin(), c.end(), usable)) {
        return false;
      }
      for (std::size_t i = 0; i < m_; ++i) {
        const double p = row_target(i, alpha_[i]);
        grad_f[i] = eps_ * (p - r[i]);
        ridge_row[i] = ridge * p;
        big_r[i] = r[i] + ridge_row[i];
      }
      for (std::size_t j = 0; j < k_; ++j) {
        const double q = col_target(j, beta_[j]);
        grad_g[j] = eps_ * (q - c[j]);
        extra[j] = ridge * q;
      }

      std::fill(w.begin(), w.end(), 0.0);
      std::copy(grad_g.begin(), grad_g.end(), rhs.begin());
      for (std::size_t i = 0; i < m_; ++i) {
        const double* t = &kernel_[i * k_];
        const double inv_r = 1.0 / big_r[i];
        for (std::size_t j = 0; j < k_; ++j) {
          if (t[j] == 0.0) continue;
          const double tj = t[j] * inv_r;
          rhs[j] -= tj * grad_f[i];
          extra[j] += tj * ridge_row[i];
          for (std::size_t l = j + 1; l < k_; ++l) w[j * k_ + l] += tj * t[l];
        }
      }
      const std::size_t dim = balanced() ? k_ - 1 : k_;
      std::vector<double> schur(dim * dim, 0.0);
      for (std::size_t j = 0; j < dim; ++j) schur[j * dim + j] = extra[j];
      for (std::size_t j = 0; j < k_; ++j) {
        for (std::size_t l = j + 1; l < k_; ++l) {
          const double x = w[j * k_ + l];
          if (j < dim) schur[j * dim + j] += x;
          if (l < dim) {
            schur[l * dim + l] += x;
            schur[j * dim + l] -= x;
            schur[l * dim + j] -= x;
          }
        }
      }
      std::fill(dg.begin(), dg.end(), 0.0);
      if (dim > 0) {
        std::vector<double> sol(rhs.begin(), rhs.begin() + dim);
        solve_spd(schur, sol, dim);
        std::copy(sol.begin(), sol.end(), dg.begin());
      }
      for (std::size_t i = 0; i < m_; ++i) {
        double s = grad_f[i];
        for (std::size_t j = 0; j < k_; ++j) s -= kernel_[i * k_ + j] * dg[j];
        df[i] = s / big_r[i];
      }

      // A nearly disconnected block of the support makes the system almost
      // singular and the raw step huge; cap it at kMaxStep * eps per
      // potential, i.e. a factor of at most exp(kMaxStep) on any entry.
      double largest = 0.0;
      for (double x : df) largest = std::max(largest, std::abs(x));
      for (double x : dg) largest = std::max(largest, std::abs(x));
      const double t0 =
          largest > kMaxStep * eps_ ? kMaxStep * eps_ / largest : 1.0;
      bool accepted = false;
      for (double t = t0; t > t0 * 1e-6; t *= 0.5) {
        for (std::size_t i = 0; i < m_; ++i) {
          trial_alpha[i] = alpha_[i] + t * df[i];
        }
        for (std::size_t j = 0; j < k_; ++j) {
          trial_beta[j] = beta_[j] + t * dg[j];
        }
        build_kernel(trial_alpha, trial_beta, trial_kernel);
        const double trial_err =
            kernel_error(trial_alpha, trial_beta, trial_kernel);
        if (std::isfinite(trial_err) && trial_err < err) {
          alpha_.swap(trial_alpha);
          beta_.swap(trial_beta);
          kernel_.swap(trial_kernel);
          err = trial_err;
          accepted = true;
          break;
        }
      }
      if (!accepted) break;
    }
    error_ = err;
    return err <= tol;
  }

  std::size_t m_;
  std::size_t k_;
  std::vector<double> u_;
  std::vector<double> v_;
  std::vector<double> log_u_;
  std::vector<double> log_v_;
  std::vector<double> cost_;
  SinkhornConfig cfg_;
  double rho_;
  std::vector<double> alpha_;
  std::vector<double> beta_;
  std::vector<double> a_;
  std::vector<double> b_;
  std::vector<double> kernel_;
  std::vector<double> kb_;
  std::vector<double> kta_;
  double eps_ = 1.0;
  double eps_old_ = 1.0;
  std::size_t iterations_ = 0;
  double error_ = std::numeric_limits<double>::infinity();
  bool converged_ = false;
};

// Restriction of a square problem to the supports of u and v.
struct Restriction {
  std::vector<std::size_t> rows;
  std::vector<std::size_t> cols;
  std::vector<double> u;
  std::vector<double> v;
  std::vector<double> cost;

  Restriction(std::span<const double> u_full, std::span<const double> v_full,
              const CostMatrix& c, double u_scale, double v_scale)
      : rows(support(u_full)), cols(support(v_full)) {
    for (std::size_t i : rows) u.push_back(u_full[i] * u_scale);
    for (std::size_t j : cols) v.push_back(v_full[j] * v_scale);
    for (std::size_t i : rows) {
      for (std::size_t j : cols) cost.push_back(c(i, j));
    }
  }

  TransportPlan expand_plan(std::size_t n, std::span<const double> t) const {
    std::vector<double> full(n * n, 0.0);
    const std::size_t k = cols.size();
    for (std::size_t a = 0; a < rows.size(); ++a) {
      for (std::size_t b = 0; b < k; ++b) {
        full[rows[a] * n + cols[b]] = t[a * k + b];
      }
    }
    return TransportPlan(n, std::move(full));
  }
};

// Symmetric potential of OT_eps(u, u) for a symmetric cost: the fixed point
// f = S(f) with S(f)_i = eps log u_i - eps log sum_j exp((f_j - C_ij)/eps),
// so that T_ij = exp((f_i + f_j - C_ij)/eps) has marginals u. Reached by
// the averaged iteration f <- (f + S(f))/2. Unlike alternating updates this
// converges even when the kernel is numerically block diagonal, where the
// relative offsets of the blocks are otherwise left arbitrary.
inline std::vector<double> symmetric_potential(std::span<const double> u,
                                               std::span<const double> cost,
                                               double eps,
                                               std::vector<double> f,
                                               std::size_t max_iterations) {
  const std::size_t m = u.size();
  std::vector<double> next(m);
  std::vector<double> buf(m);
  for (std::size_t it = 0; it < max_iterations; ++it) {
    double change = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        buf[j] = (f[j] - cost[i * m + j]) / eps;
      }
      next[i] = 0.5 * (f[i] + eps * (std::log(u[i]) - log_sum_exp(buf)));
      change = std::max(change, std::abs(next[i] - f[i]));
    }
    f.swap(next);
    if (change <= 1e-15 * eps) break;
  }
  return f;
}

inline bool symmetric_instance(const Restriction& red) {
  if (red.rows != red.cols || red.u != red.v) return false;
  const std::size_t m = red.rows.size();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      if (red.cost[i * m + j] != red.cost[j * m + i]) return false;
    }
  }
  return true;
}

}  // namespace detail

// Entropic GML between two distributions on the same anchors. Zero-mass
// entries are dropped from the solve; their potentials are reported as the
// soft c-transform -eps log sum_j exp((g_j - C_ij)/eps).
inline SinkhornResult sinkhorn_gml(std::span<const double> u,
                                   std::span<const double> v,
                                   const CostMatrix& c,
                                   const SinkhornConfig& cfg = {}) {
  cfg.validate();
  const std::size_t n = c.size();
  detail::check_distribution(u, n, "u", 1e-6);
  detail::check_distribution(v, n, "v", 1e-6);
  // Masses within 1e-6 of one are renormalised so the marginals are
  // exactly compatible.
  const double su = std::accumulate(u.begin(), u.end(), 0.0);
  const double sv = std::accumulate(v.begin(), v.end(), 0.0);
  const detail::Restriction red(u, v, c, 1.0 / su, 1.0 / sv);

  detail::EntropicSolver solver(red.u, red.v, red.cost, cfg,
                                std::numeric_limits<double>::infinity());
  solver.run();

  const double eps = cfg.epsilon;
  auto fr = solver.f();
  auto gr = solver.g();
  auto plan = solver.plan();
  if (detail::symmetric_instance(red)) {
    // u = v with a symmetric cost: the dual is symmetric, f = g.
    const std::size_t m = red.rows.size();
    std::vector<double> f0(m);
    for (std::size_t i = 0; i < m; ++i) f0[i] = 0.5 * (fr[i] + gr[i]);
    auto f = detail::symmetric_potential(red.u, red.cost, eps, std::move(f0),
                                         cfg.max_iterations);
    std::vector<double> t(m * m);
    double err = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        t[i * m + j] = std::exp((f[i] + f[j] - red.cost[i * m + j]) / eps);
        row += t[i * m + j];
      }
      err += std::abs(row - red.u[i]);
    }
    if (err <= cfg.tolerance) {
      fr = f;
      gr = std::move(f);
      plan = std::move(t);
    }
  }

  SinkhornResult r;
  r.plan = red.expand_plan(n, plan);
  r.value = transport_cost(c, r.plan);
  r.dual_u.assign(n, 0.0);
  r.dual_v.assign(n, 0.0);
  for (std::size_t a = 0; a < red.rows.size(); ++a) r.dual_u[red.rows[a]] = fr[a];
  for (std::size_t b = 0; b < red.cols.size(); ++b) r.dual_v[red.cols[b]] = gr[b];
  std::vector<double> buf;
  for (std::size_t i = 0; i < n; ++i) {
    if (u[i] > 0.0) continue;
    buf.clear();
    for (std::size_t b = 0; b < red.cols.size(); ++b) {
      buf.push_back((gr[b] - c(i, red.cols[b])) / eps);
    }
    r.dual_u[i] = -eps * detail::log_sum_exp(buf);
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (v[j] > 0.0) continue;
    buf.clear();
    for (std::size_t a = 0; a < red.rows.size(); ++a) {
      buf.push_back((fr[a] - c(red.rows[a], j)) / eps);
    }
    r.dual_v[j] = -eps * detail::log_sum_exp(buf);
  }

  auto& d = r.diagnostics;
  d.iterations = solver.iterations();
  const auto rs = r.plan.row_sums();
  const auto cs = r.plan.col_sums();
  double row_err = 0.0;
  double col_err = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    row_err += std::abs(rs[i] - u[i] / su);
    col_err += std::abs(cs[i] - v[i] / sv);
  }
  d.marginal_error = std::max(row_err, col_err);
  d.converged = solver.converged() && d.marginal_error <= cfg.tolerance;
  d.entropy = detail::entropy(r.plan.entries());
  d.entropic_objective = r.value - cfg.epsilon * d.entropy;
  return r;
}

// Gradient of the entropic objective with respect to u, projected onto the
// tangent space of the simplex (zero mean). This is the converged row
// potential, centred.
inline std::vector<double> gml_gradient(std::span<const double> u,
                                        std::span<const double> v,
                                        const CostMatrix& c,
                                        const SinkhornConfig& cfg = {}) {
  for (double x : u) {
    if (!(x > 0.0)) {
      throw InvalidArgument(
          "gml_gradient needs strictly positive u; the entropic objective is "
          "not differentiable on the simplex boundary");
    }
  }
  const auto r = sinkhorn_gml(u, v, c, cfg);
  if (!r.converged()) {
    throw NotConverged("sinkhorn_gml did not converge after " +
                       std::to_string(r.diagnostics.iterations) +
                       " iterations (marginal error " +
                       std::to_string(r.diagnostics.marginal_error) + ")");
  }
  std::vector<double> g = r.dual_u;
  const double mean =
      std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(g.size());
  for (double& x : g) x -= mean;
  return g;
}

// Unbalanced entropic GML between nonnegative measures.
inline UnbalancedResult sinkhorn_unbalanced_gml(std::span<const double> u,
                                                std::span<const double> v,
                                                const CostMatrix& c,
                                                const SinkhornConfig& cfg = {}) {
  cfg.validate();
  const std::size_t n = c.size();
  detail::check_measure(u, n, "u");
  detail::check_measure(v, n, "v");
  const detail::Restriction red(u, v, c, 1.0, 1.0);
  if (red.rows.empty() && red.cols.empty()) {
    throw InvalidArgument("u and v are both zero");
  }

  UnbalancedResult r;
  r.dual_u.assign(n, 0.0);
  r.dual_v.assign(n, 0.0);
  auto& d = r.diagnostics;
  if (!red.rows.empty() && !red.cols.empty()) {
    detail::EntropicSolver solver(red.u, red.v, red.cost, cfg, cfg.kl_weight);
    solver.run();
    r.plan = red.expand_plan(n, solver.plan());
    const auto fr = solver.f();
    const auto gr = solver.g();
    for (std::size_t a = 0; a < red.rows.size(); ++a) {
      r.dual_u[red.rows[a]] = fr[a];
    }
    for (std::size_t b = 0; b < red.cols.size(); ++b) {
      r.dual_v[red.cols[b]] = gr[b];
    }
    d.iterations = solver.iterations();
    d.converged = solver.converged();
    d.marginal_error = solver.error();
  } else {
    // One side carries no mass; the empty plan is optimal.
    r.plan = TransportPlan(n);
    d.converged = true;
  }

  const auto rs = r.plan.row_sums();
  const auto cs = r.plan.col_sums();
  d.transport_cost = transport_cost(c, r.plan);
  d.kl_u = kl_divergence(rs, u);
  d.kl_v = kl_divergence(cs, v);
  d.entropy = detail::entropy(r.plan.entries());
  r.value = d.transport_cost + cfg.kl_weight * (d.kl_u + d.kl_v);
  d.entropic_objective = r.value - cfg.epsilon * d.entropy;
  return r;
}

}  // namespace gmlight
