#pragma once

// Small dense second-order cone solver for the stability feasibility problem
//
//   minimize t   subject to   ‖G_m x + h_m‖₂ <= t   (m = 1..M)
//                             x_j >= lower_j        (bounded j only)
//
// with G_m ∈ R^{2×n}. Log-barrier interior point method: damped Newton on
// t/μ - Σ log(t² - ‖G_m x + h_m‖²) - Σ log(x_j - lower_j), μ from 1 down to
// 1e-10 in factors of 10. Columns are normalized internally.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "perk/linalg.hpp"

namespace perk::socp {

struct Cone {
  std::vector<double> g_re;  // first row of G_m (length n)
  std::vector<double> g_im;  // second row
  double h_re = 0.0;
  double h_im = 0.0;
};

struct Problem {
  std::size_t num_vars = 0;
  std::vector<Cone> cones;
  std::vector<std::optional<double>> lower;  // per variable; empty = unbounded
};

struct Options {
  double mu_start = 1.0;
  double mu_end = 1e-10;
  double mu_factor = 0.1;
  int max_newton = 500;
  double centering_tol = 1e-10;  // stop centering when λ²/2 falls below
  // stop once a centered point proves the optimum exceeds this value
  double certify_above = std::numeric_limits<double>::infinity();
};

enum class Status { optimal, stopped_early, infeasible_certified, iteration_limit };

struct Result {
  Status status = Status::iteration_limit;
  std::vector<double> x;    // in the caller's (unscaled) variables
  double objective = 0.0;   // t at the returned point (upper bound on the optimum)
  double lower_bound = 0.0; // t - 2ν·μ at the last centered point
  int newton_steps = 0;
};

/// Early-termination callback: receives the current x (unscaled) and
/// returns true to stop (e.g. once a direct evaluation certifies |P| <= 1).
using Monitor = std::function<bool(const std::vector<double>&)>;

namespace detail {

inline bool cholesky_solve(std::vector<double>& h, std::size_t n, std::vector<double>& rhs) {
  for (std::size_t j = 0; j < n; ++j) {
    double d = h[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= h[j * n + k] * h[j * n + k];
    if (!(d > 0.0)) return false;
    d = std::sqrt(d);
    h[j * n + j] = d;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = h[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= h[i * n + k] * h[j * n + k];
      h[i * n + j] = s / d;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = rhs[i];
    for (std::size_t k = 0; k < i; ++k) s -= h[i * n + k] * rhs[k];
    rhs[i] = s / h[i * n + i];
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = rhs[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= h[k * n + i] * rhs[k];
    rhs[i] = s / h[i * n + i];
  }
  return true;
}

}  // namespace detail

inline Result solve(const Problem& prob, const Options& opt = {}, const Monitor& monitor = {}) {
  const std::size_t n = prob.num_vars;
  const std::size_t dim = n + 1;  // y = (t, ξ)
  const std::size_t m_cones = prob.cones.size();
  require(m_cones > 0, ErrorCode::invalid_argument, "cone problem has no constraints");
  require(prob.lower.empty() || prob.lower.size() == n, ErrorCode::dimension_mismatch, "lower-bound vector size mismatch");

  // column normalization: x_j = scale_j·ξ_j
  std::vector<double> col_scale(n, 1.0);
  for (std::size_t j = 0; j < n; ++j) {
    double mx = 0.0;
    for (const auto& c : prob.cones) mx = std::max(mx, std::hypot(c.g_re[j], c.g_im[j]));
    col_scale[j] = mx > 0.0 ? 1.0 / mx : 1.0;
  }
  std::vector<Cone> cones = prob.cones;
  for (auto& c : cones)
    for (std::size_t j = 0; j < n; ++j) {
      c.g_re[j] *= col_scale[j];
      c.g_im[j] *= col_scale[j];
    }
  std::vector<double> lower(n, -std::numeric_limits<double>::infinity());
  std::vector<bool> bounded(n, false);
  for (std::size_t j = 0; j < n && !prob.lower.empty(); ++j)
    if (prob.lower[j]) {
      bounded[j] = true;
      lower[j] = *prob.lower[j] / col_scale[j];
    }
  const double nu = 2.0 * double(m_cones) + double(std::count(bounded.begin(), bounded.end(), true));

  auto residual = [&](const Cone& c, const std::vector<double>& y) {
    double re = c.h_re, im = c.h_im;
    for (std::size_t j = 0; j < n; ++j) {
      re += c.g_re[j] * y[j + 1];
      im += c.g_im[j] * y[j + 1];
    }
    return std::array<double, 2>{re, im};
  };
  auto strictly_feasible = [&](const std::vector<double>& y) {
    if (!(y[0] > 0.0)) return false;
    for (std::size_t j = 0; j < n; ++j)
      if (bounded[j] && !(y[j + 1] > lower[j])) return false;
    for (const auto& c : cones) {
      const auto u = residual(c, y);
      if (!(y[0] * y[0] - u[0] * u[0] - u[1] * u[1] > 0.0)) return false;
    }
    return true;
  };
  auto barrier_value = [&](const std::vector<double>& y, double mu) {
    double f = y[0] / mu;
    for (std::size_t j = 0; j < n; ++j)
      if (bounded[j]) f -= std::log(y[j + 1] - lower[j]);
    for (const auto& c : cones) {
      const auto u = residual(c, y);
      f -= std::log(y[0] * y[0] - u[0] * u[0] - u[1] * u[1]);
    }
    return f;
  };
  auto unscale = [&](const std::vector<double>& y) {
    std::vector<double> x(n);
    for (std::size_t j = 0; j < n; ++j) x[j] = y[j + 1] * col_scale[j];
    return x;
  };

  // strictly feasible start
  std::vector<double> y(dim, 0.0);
  for (std::size_t j = 0; j < n; ++j) y[j + 1] = bounded[j] ? std::max(lower[j], 0.0) + 1.0 : 0.0;
  double tmax = 0.0;
  for (const auto& c : cones) {
    const auto u = residual(c, y);
    tmax = std::max(tmax, std::hypot(u[0], u[1]));
  }
  y[0] = 1.1 * tmax + 1.0;

  Result res;
  std::vector<double> grad(dim), hess(dim * dim), step(dim), trial(dim);
  double mu = opt.mu_start;
  while (true) {
    // centering
    for (;;) {
      if (res.newton_steps >= opt.max_newton) {
        res.status = Status::iteration_limit;
        res.x = unscale(y);
        res.objective = y[0];
        return res;
      }
      std::fill(grad.begin(), grad.end(), 0.0);
      std::fill(hess.begin(), hess.end(), 0.0);
      grad[0] = 1.0 / mu;
      for (std::size_t j = 0; j < n; ++j)
        if (bounded[j]) {
          const double d = y[j + 1] - lower[j];
          grad[j + 1] -= 1.0 / d;
          hess[(j + 1) * dim + (j + 1)] += 1.0 / (d * d);
        }
      std::vector<double> ds(dim);
      for (const auto& c : cones) {
        const auto u = residual(c, y);
        const double s = y[0] * y[0] - u[0] * u[0] - u[1] * u[1];
        ds[0] = 2.0 * y[0];
        for (std::size_t j = 0; j < n; ++j) ds[j + 1] = -2.0 * (c.g_re[j] * u[0] + c.g_im[j] * u[1]);
        const double inv_s = 1.0 / s;
        for (std::size_t a = 0; a < dim; ++a) grad[a] -= ds[a] * inv_s;
        const double inv_s2 = inv_s * inv_s;
        for (std::size_t a = 0; a < dim; ++a)
          for (std::size_t b = 0; b <= a; ++b) hess[a * dim + b] += ds[a] * ds[b] * inv_s2;
        // -∇²s / s with ∇²s = diag(2, -2 GᵀG)
        hess[0] -= 2.0 * inv_s;
        for (std::size_t a = 0; a < n; ++a)
          for (std::size_t b = 0; b <= a; ++b)
            hess[(a + 1) * dim + (b + 1)] += 2.0 * (c.g_re[a] * c.g_re[b] + c.g_im[a] * c.g_im[b]) * inv_s;
      }
      for (std::size_t a = 0; a < dim; ++a)
        for (std::size_t b = 0; b < a; ++b) hess[b * dim + a] = hess[a * dim + b];

      for (std::size_t a = 0; a < dim; ++a) step[a] = -grad[a];
      std::vector<double> hcopy = hess;
      if (!detail::cholesky_solve(hcopy, dim, step)) {
        // barrier Hessian lost definiteness numerically: regularize
        double diag = 0.0;
        for (std::size_t a = 0; a < dim; ++a) diag = std::max(diag, hess[a * dim + a]);
        hcopy = hess;
        for (std::size_t a = 0; a < dim; ++a) hcopy[a * dim + a] += 1e-12 * diag;
        for (std::size_t a = 0; a < dim; ++a) step[a] = -grad[a];
        if (!detail::cholesky_solve(hcopy, dim, step)) {
          res.status = Status::iteration_limit;
          res.x = unscale(y);
          res.objective = y[0];
          return res;
        }
      }
      double lambda2 = 0.0;
      for (std::size_t a = 0; a < dim; ++a) lambda2 -= grad[a] * step[a];
      ++res.newton_steps;
      if (!(lambda2 >= 0.0) || lambda2 / 2.0 <= opt.centering_tol) break;

      const double lambda = std::sqrt(lambda2);
      double alpha = lambda > 0.25 ? 1.0 / (1.0 + lambda) : 1.0;
      const double f0 = barrier_value(y, mu);
      bool moved = false;
      for (int ls = 0; ls < 60; ++ls) {
        for (std::size_t a = 0; a < dim; ++a) trial[a] = y[a] + alpha * step[a];
        if (strictly_feasible(trial) && barrier_value(trial, mu) <= f0 - 0.25 * alpha * lambda2) {
          moved = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!moved) break;  // no progress possible at this precision
      y = trial;
      if (monitor && monitor(unscale(y))) {
        res.status = Status::stopped_early;
        res.x = unscale(y);
        res.objective = y[0];
        return res;
      }
    }
    res.lower_bound = y[0] - 2.0 * nu * mu;  // factor 2 covers inexact centering
    if (res.lower_bound > opt.certify_above) {
      res.status = Status::infeasible_certified;
      res.x = unscale(y);
      res.objective = y[0];
      return res;
    }
    if (monitor && monitor(unscale(y))) {
      res.status = Status::stopped_early;
      res.x = unscale(y);
      res.objective = y[0];
      return res;
    }
    if (mu <= opt.mu_end * (1.0 + 1e-12)) break;
    mu *= opt.mu_factor;
  }
  res.status = Status::optimal;
  res.x = unscale(y);
  res.objective = y[0];
  return res;
}

}  // namespace perk::socp
