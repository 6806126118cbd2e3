#pragma once

// Partitioned P-ERK time stepping with two stage registers, plus a plain
// explicit RK stepper used as the standalone reference.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "perk/linalg.hpp"
#include "perk/tableau.hpp"

namespace perk {

/// Writes dU/dt for every component whose level is flagged in `active`.
/// Entries of inactive components in `out` must be left untouched; the
/// evaluator may read any entry of `u`.
using RhsFunction =
    std::function<void(double t, std::span<const double> u, const std::vector<bool>& active, std::span<double> out)>;

struct LinearData {
  DenseMatrix lambda;
  std::vector<DenseMatrix> masks;  // one diagonal 0/1 matrix per level
};

struct PartitionedSystem {
  std::size_t dim = 0;
  std::size_t levels = 1;
  std::vector<std::size_t> level_of;  // zero-based level per component
  RhsFunction rhs;
  std::optional<LinearData> linear;

  std::size_t components_on(std::size_t level) const {
    return static_cast<std::size_t>(std::count(level_of.begin(), level_of.end(), level));
  }

  void validate() const {
    require(level_of.size() == dim, ErrorCode::dimension_mismatch, "level map length differs from system dimension");
    require(levels >= 1, ErrorCode::invalid_argument, "system needs at least one level");
    for (std::size_t l : level_of) require(l < levels, ErrorCode::invalid_argument, "component level out of range");
    require(static_cast<bool>(rhs), ErrorCode::invalid_argument, "system has no right-hand side");
    if (!linear) return;
    require(linear->lambda.rows() == dim && linear->lambda.cols() == dim, ErrorCode::dimension_mismatch,
            "linear operator shape differs from system dimension");
    require(linear->masks.size() == levels, ErrorCode::dimension_mismatch, "one mask per level required");
    for (std::size_t r = 0; r < levels; ++r) {
      const DenseMatrix& m = linear->masks[r];
      require(m.rows() == dim && m.cols() == dim, ErrorCode::dimension_mismatch, "mask shape differs from system dimension");
      for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j) {
          const double v = m(i, j);
          if (i != j) require(v == 0.0, ErrorCode::invalid_argument, "mask must be diagonal");
          else require(v == (level_of[i] == r ? 1.0 : 0.0), ErrorCode::invalid_argument, "mask disagrees with level map");
        }
    }
  }
};

/// Diagonal 0/1 masks from a level map; they sum to the identity.
inline std::vector<DenseMatrix> level_masks(const std::vector<std::size_t>& level_of, std::size_t levels) {
  std::vector<DenseMatrix> masks(levels, DenseMatrix(level_of.size(), level_of.size()));
  for (std::size_t i = 0; i < level_of.size(); ++i) masks[level_of[i]](i, i) = 1.0;
  return masks;
}

/// u' = Λu with the given partition.
inline PartitionedSystem linear_system(DenseMatrix lambda, std::vector<std::size_t> level_of, std::size_t levels) {
  require(lambda.square() && lambda.rows() == level_of.size(), ErrorCode::dimension_mismatch,
          "operator shape differs from level map length");
  PartitionedSystem sys;
  sys.dim = level_of.size();
  sys.levels = levels;
  sys.linear = LinearData{lambda, level_masks(level_of, levels)};
  sys.rhs = [a = std::move(lambda), lv = level_of](double, std::span<const double> u, const std::vector<bool>& active,
                                                   std::span<double> out) {
    const std::size_t n = a.rows();
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[lv[i]]) continue;
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += a(i, j) * u[j];
      out[i] = s;
    }
  };
  sys.level_of = std::move(level_of);
  sys.validate();
  return sys;
}

/// The same system with every component on level 0, for single-member
/// families. The wrapped evaluator sees all of its levels switched together.
inline PartitionedSystem single_level(PartitionedSystem sys) {
  sys.validate();
  sys.rhs = [f = std::move(sys.rhs), n = sys.levels](double t, std::span<const double> u, const std::vector<bool>& active,
                                                      std::span<double> out) { f(t, u, std::vector<bool>(n, active[0]), out); };
  sys.levels = 1;
  sys.level_of.assign(sys.dim, 0);
  if (sys.linear) sys.linear->masks = level_masks(sys.level_of, 1);
  return sys;
}

/// Low-storage working set: the stage argument and exactly two stage
/// derivative registers (first stage and most recent stage).
struct StepWorkspace {
  std::vector<double> u_arg;
  std::vector<double> k_first;
  std::vector<double> k_prev;
  std::vector<std::uint64_t> rhs_evals;  // per level, scalar evaluations

  void resize(std::size_t dim, std::size_t levels) {
    u_arg.assign(dim, 0.0);
    k_first.assign(dim, 0.0);
    k_prev.assign(dim, 0.0);
    if (rhs_evals.size() != levels) rhs_evals.assign(levels, 0);
  }
};

namespace detail {

inline void require_finite_stage(std::span<const double> k, const std::vector<std::size_t>& level_of,
                                 const std::vector<bool>& active, std::size_t stage) {
  for (std::size_t m = 0; m < k.size(); ++m)
    if (active[level_of[m]] && !std::isfinite(k[m]))
      fail(ErrorCode::non_finite, "non-finite stage derivative at stage " + std::to_string(stage + 1) + ", component " +
                                      std::to_string(m));
}

inline void check_step_inputs(const PerkFamily& family, const PartitionedSystem& sys, std::span<const double> u, double dt) {
  require(u.size() == sys.dim, ErrorCode::dimension_mismatch, "state length differs from system dimension");
  require(family.levels() <= sys.levels, ErrorCode::dimension_mismatch, "family has more members than the system has levels");
  for (std::size_t l : sys.level_of)
    require(l < family.levels(), ErrorCode::dimension_mismatch, "a component's level has no family member");
  require(dt > 0.0 && std::isfinite(dt), ErrorCode::invalid_argument, "dt must be positive");
  for (std::size_t i = 0; i + 2 < family.stages(); ++i)
    require(family.b[i] == 0.0, ErrorCode::invalid_argument, "two-register stepping needs weights on the last two stages only");
}

}  // namespace detail

/// One partitioned step. Every stage forms the argument for all components;
/// the RHS runs only on levels active at that stage.
inline std::vector<double> step(const PerkFamily& family, const PartitionedSystem& sys, std::span<const double> u_n,
                                double t, double dt, StepWorkspace& ws) {
  detail::check_step_inputs(family, sys, u_n, dt);
  const std::size_t s = family.stages();
  const std::size_t dim = sys.dim;
  ws.resize(dim, sys.levels);
  std::vector<bool> active(sys.levels, false);
  auto activate = [&](std::size_t stage) {
    for (std::size_t r = 0; r < sys.levels; ++r) {
      active[r] = r < family.levels() && family.active(r, stage);
      if (active[r]) ws.rhs_evals[r] += sys.components_on(r);
    }
  };

  activate(0);
  sys.rhs(t, u_n, active, ws.k_first);
  detail::require_finite_stage(ws.k_first, sys.level_of, active, 0);

  for (std::size_t i = 1; i < s; ++i) {
    for (std::size_t m = 0; m < dim; ++m) {
      const auto& mem = family.members[sys.level_of[m]];
      ws.u_arg[m] = u_n[m] + dt * (mem.first_column[i] * ws.k_first[m] + mem.subdiagonal[i] * ws.k_prev[m]);
    }
    activate(i);
    // the last stage lands in k_first: stage 1 is no longer referenced
    // (with two stages, stage 1 is itself weighted and moves to k_prev)
    if (s == 2) std::copy(ws.k_first.begin(), ws.k_first.end(), ws.k_prev.begin());
    std::vector<double>& target = (i + 1 == s) ? ws.k_first : ws.k_prev;
    sys.rhs(t + family.c[i] * dt, ws.u_arg, active, target);
    detail::require_finite_stage(target, sys.level_of, active, i);
  }

  std::vector<double> u_next(dim);
  if (s == 1) {
    for (std::size_t m = 0; m < dim; ++m) u_next[m] = u_n[m] + dt * (family.b[0] * ws.k_first[m]);
    return u_next;
  }
  const double b_prev = family.b[s - 2];
  const double b_last = family.b[s - 1];
  for (std::size_t m = 0; m < dim; ++m) u_next[m] = u_n[m] + dt * (b_prev * ws.k_prev[m] + b_last * ws.k_first[m]);
  return u_next;
}

inline std::vector<double> step(const PerkFamily& family, const PartitionedSystem& sys, std::span<const double> u_n,
                                double t, double dt) {
  StepWorkspace ws;
  return step(family, sys, u_n, t, dt, ws);
}

/// Plain explicit RK step with a full stage array (standalone reference).
/// Sums run over j in ascending order including zero coefficients.
inline std::vector<double> rk_step(const ButcherTableau& tab, const PartitionedSystem& sys, std::span<const double> u_n,
                                   double t, double dt) {
  require(u_n.size() == sys.dim, ErrorCode::dimension_mismatch, "state length differs from system dimension");
  const std::size_t s = tab.stages();
  const std::size_t dim = u_n.size();
  const std::vector<bool> all(sys.levels, true);
  std::vector<std::vector<double>> k(s, std::vector<double>(dim, 0.0));
  std::vector<double> arg(dim);
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t m = 0; m < dim; ++m) {
      double acc = 0.0;
      for (std::size_t j = 0; j < i; ++j) acc += tab.a(i, j) * k[j][m];
      arg[m] = i == 0 ? u_n[m] : u_n[m] + dt * acc;
    }
    sys.rhs(t + tab.c[i] * dt, arg, all, k[i]);
  }
  std::vector<double> u_next(dim);
  for (std::size_t m = 0; m < dim; ++m) {
    double acc = 0.0;
    for (std::size_t i = 0; i < s; ++i) acc += tab.b[i] * k[i][m];
    u_next[m] = u_n[m] + dt * acc;
  }
  return u_next;
}

struct IntegrationStats {
  std::size_t steps = 0;
  std::vector<std::uint64_t> rhs_evals;  // per level
  std::uint64_t total_rhs_evals() const { return std::accumulate(rhs_evals.begin(), rhs_evals.end(), std::uint64_t{0}); }
};

struct IntegrationResult {
  std::vector<double> u;
  IntegrationStats stats;
};

/// Number of steps of size dt covering [t0, tf]; the last one is truncated.
inline std::size_t step_count(double t0, double tf, double dt) {
  require(tf >= t0, ErrorCode::invalid_argument, "final time precedes initial time");
  require(dt > 0.0 && std::isfinite(dt), ErrorCode::invalid_argument, "dt must be positive");
  if (tf == t0) return 0;
  const double n = (tf - t0) / dt;
  const double rounded = std::round(n);
  // a ratio within round-off of an integer needs no sliver step
  if (std::abs(n - rounded) <= 1e-12 * std::max(1.0, n)) return static_cast<std::size_t>(std::max(1.0, rounded));
  return static_cast<std::size_t>(std::ceil(n));
}

template <class Stepper>
inline std::vector<double> march(std::vector<double> u, double t0, double tf, double dt, std::size_t& steps, Stepper&& one) {
  const std::size_t n = step_count(t0, tf, dt);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = t0 + static_cast<double>(k) * dt;
    const double h = k + 1 == n ? tf - t : dt;
    u = one(u, t, h);
  }
  steps = n;
  return u;
}

inline IntegrationResult integrate(const PerkFamily& family, const PartitionedSystem& sys, std::vector<double> u0,
                                   double t0, double tf, double dt) {
  require(u0.size() == sys.dim, ErrorCode::dimension_mismatch, "state length differs from system dimension");
  StepWorkspace ws;
  ws.resize(sys.dim, sys.levels);
  IntegrationResult out;
  out.u = march(std::move(u0), t0, tf, dt, out.stats.steps,
                [&](const std::vector<double>& u, double t, double h) { return step(family, sys, u, t, h, ws); });
  out.stats.rhs_evals = ws.rhs_evals;
  return out;
}

/// Constant-CFL timestep dt = cfl·h_min/ν_max.
struct CflSpec {
  double cfl = 1.0;
  double min_cell_size = 1.0;
  double max_speed = 1.0;

  double timestep() const {
    require(cfl > 0.0 && min_cell_size > 0.0 && max_speed > 0.0, ErrorCode::invalid_argument, "CFL inputs must be positive");
    return cfl * min_cell_size / max_speed;
  }
};

inline IntegrationResult integrate(const PerkFamily& family, const PartitionedSystem& sys, std::vector<double> u0,
                                   double t0, double tf, const CflSpec& cfl) {
  return integrate(family, sys, std::move(u0), t0, tf, cfl.timestep());
}

/// Standalone single-scheme integration with the plain RK stepper.
inline std::vector<double> integrate_rk(const ButcherTableau& tab, const PartitionedSystem& sys, std::vector<double> u0,
                                        double t0, double tf, double dt) {
  std::size_t steps = 0;
  return march(std::move(u0), t0, tf, dt, steps,
               [&](const std::vector<double>& u, double t, double h) { return rk_step(tab, sys, u, t, h); });
}

/// Level per component: the smallest-E member whose stable dt, rescaled from
/// the reference speed to the component's speed, still admits base_dt.
/// member_dt must be ordered by increasing E.
inline std::vector<std::size_t> assign_levels(std::span<const double> speed_over_h, std::span<const double> member_dt,
                                              double base_dt, std::optional<double> reference = std::nullopt) {
  require(!speed_over_h.empty(), ErrorCode::invalid_argument, "no components to assign");
  require(!member_dt.empty(), ErrorCode::invalid_argument, "no family members supplied");
  require(base_dt > 0.0, ErrorCode::invalid_argument, "base dt must be positive");
  for (double v : speed_over_h) require(v > 0.0 && std::isfinite(v), ErrorCode::invalid_argument, "speeds must be positive");
  const double ref = reference.value_or(*std::min_element(speed_over_h.begin(), speed_over_h.end()));
  std::vector<std::size_t> level(speed_over_h.size());
  for (std::size_t m = 0; m < speed_over_h.size(); ++m) {
    std::size_t r = 0;
    while (r < member_dt.size() && member_dt[r] * ref / speed_over_h[m] < base_dt) ++r;
    if (r == member_dt.size())
      fail(ErrorCode::no_feasible_member, "component " + std::to_string(m) + " exceeds the stable timestep of every member");
    level[m] = r;
  }
  return level;
}

/// One-step propagator D with step(u) = D·u, assembled column by column.
inline DenseMatrix build_fully_discrete(const PerkFamily& family, const PartitionedSystem& sys, double dt) {
  require(sys.linear.has_value(), ErrorCode::invalid_argument, "fully discrete matrix needs a linear system");
  const std::size_t n = sys.dim;
  DenseMatrix d(n, n);
  StepWorkspace ws;
  std::vector<double> e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    const auto col = step(family, sys, e, 0.0, dt, ws);
    for (std::size_t i = 0; i < n; ++i) d(i, j) = col[i];
    e[j] = 0.0;
  }
  return d;
}

/// Kahan-compensated weighted sum.
inline double weighted_sum(std::span<const double> w, std::span<const double> u) {
  double sum = 0.0, comp = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double y = w[i] * u[i] - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum;
}

/// |Σ w u_0 - Σ w u_f| per conserved variable; the state holds `variables`
/// consecutive blocks, each the length of `weights`.
inline std::vector<double> conservation_error(std::span<const double> u0, std::span<const double> uf,
                                              std::span<const double> weights, std::size_t variables = 1) {
  require(variables >= 1, ErrorCode::invalid_argument, "need at least one variable");
  require(u0.size() == uf.size(), ErrorCode::dimension_mismatch, "states differ in length");
  require(u0.size() == weights.size() * variables, ErrorCode::dimension_mismatch, "weights do not match the state blocks");
  for (double w : weights) require(w > 0.0, ErrorCode::invalid_argument, "weights must be positive");
  std::vector<double> err(variables);
  const std::size_t n = weights.size();
  for (std::size_t v = 0; v < variables; ++v)
    err[v] = std::abs(weighted_sum(weights, u0.subspan(v * n, n)) - weighted_sum(weights, uf.subspan(v * n, n)));
  return err;
}

}  // namespace perk
