#pragma once

// Maximum stable timestep search: bisection in dt around a cone feasibility
// problem in the free polynomial coefficients.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "perk/socp.hpp"
#include "perk/spectra.hpp"
#include "perk/stabpoly.hpp"

namespace perk {

enum class Parametrization { monomial, perk_constrained };

using PolynomialCoefficients = std::variant<MonomialPolynomial, ConstrainedParams>;

struct OptimizationProblem {
  Spectrum spectrum;
  int degree_e = 1;
  int order_p = 1;
  Parametrization parametrization = Parametrization::monomial;
  Abscissae abscissae = Abscissae::constant;  // PerkConstrained only
  double bisect_rel_tol = 1e-4;
  double feas_tol = 1e-9;
  double gamma_floor = 1e-12;  // on gamma_j·max_m|∂P(z_m)/∂gamma_j|

  void validate() const {
    require(order_p >= 1 && order_p <= 4, ErrorCode::invalid_argument, "order must lie in 1..4");
    if (parametrization == Parametrization::perk_constrained)
      require(order_p == 4 && degree_e >= 5, ErrorCode::invalid_argument, "constrained parametrization needs p = 4 and E >= 5");
    else
      require(degree_e >= order_p, ErrorCode::invalid_argument, "degree must be at least the linear order");
    require(bisect_rel_tol > 0.0 && bisect_rel_tol < 1.0, ErrorCode::invalid_argument, "bisection tolerance must lie in (0,1)");
    require(feas_tol >= 0.0, ErrorCode::invalid_argument, "feasibility tolerance must be non-negative");
  }
};

struct FeasibilityResult {
  bool feasible = false;
  bool solver_failed = false;  // inner solver hit its cap: feasibility unknown
  PolynomialCoefficients coefficients;
  double residual = 0.0;  // max_m |P(dt·λ_m)| by direct evaluation
  int newton_steps = 0;
};

struct OptimizationResult {
  double dt_opt = 0.0;
  PolynomialCoefficients coefficients;
  double max_modulus = 0.0;
  int bisection_iterations = 0;
  int inner_solves = 0;
  int newton_steps = 0;
};

inline std::vector<double> polynomial_coefficients(const PolynomialCoefficients& pc) {
  if (const auto* m = std::get_if<MonomialPolynomial>(&pc)) return m->coefficients();
  return constrained_coefficients(std::get<ConstrainedParams>(pc));
}

/// max_m |P(dt·λ_m)| evaluated directly from the coefficient representation.
inline double max_modulus(const PolynomialCoefficients& pc, const Spectrum& s, double dt) {
  double worst = 0.0;
  for (const Complex& lam : s.points()) {
    const Complex z = dt * lam;
    const Complex v = std::holds_alternative<MonomialPolynomial>(pc) ? eval_monomial(std::get<MonomialPolynomial>(pc), z)
                                                                     : eval_constrained(std::get<ConstrainedParams>(pc), z);
    worst = std::max(worst, std::abs(v));
  }
  return worst;
}

namespace detail {

inline LinearPolynomialModel monomial_model(int p, int e) {
  LinearPolynomialModel m;
  m.base.assign(static_cast<std::size_t>(e) + 1, 0.0);
  for (int j = 0; j <= p; ++j) m.base[static_cast<std::size_t>(j)] = 1.0 / factorial(j);
  for (int j = p + 1; j <= e; ++j) {
    std::vector<double> col(static_cast<std::size_t>(e) + 1, 0.0);
    col[static_cast<std::size_t>(j)] = 1.0;
    m.basis.push_back(std::move(col));
  }
  return m;
}

/// One SOC constraint per spectrum point: [Re; Im] of basis values and base.
inline void append_cones(socp::Problem& prob, const LinearPolynomialModel& model, const Spectrum& s, double dt) {
  for (const Complex& lam : s.points()) {
    const Complex z = dt * lam;
    socp::Cone cone;
    const Complex base = horner(model.base, z);
    cone.h_re = base.real();
    cone.h_im = base.imag();
    for (const auto& col : model.basis) {
      const Complex v = horner(col, z);
      cone.g_re.push_back(v.real());
      cone.g_im.push_back(v.imag());
    }
    prob.cones.push_back(std::move(cone));
  }
}

/// Runs the cone solver with early exit once `direct(x)` certifies |P| <= bound.
template <class Direct>
inline socp::Result solve_feasibility(const socp::Problem& prob, double bound, Direct&& direct) {
  socp::Options opt;
  opt.certify_above = bound;
  return socp::solve(prob, opt, [&](const std::vector<double>& x) { return direct(x) <= bound; });
}

struct Bisection {
  double dt = 0.0;
  int iterations = 0;
  int solves = 0;
  int newton_steps = 0;
};

/// dt_hi doubles from dt_start until infeasible (cap 60), then bisects until
/// (hi - lo)/hi <= rel_tol. `probe(dt)` returns true when dt is feasible and
/// keeps its own record of the latest feasible coefficients.
template <class Probe>
inline Bisection bisect_timestep(double dt_start, double rel_tol, Probe&& probe) {
  Bisection out;
  double lo = 0.0, hi = dt_start;
  int doublings = 0;
  while (probe(hi)) {
    ++out.solves;
    lo = hi;
    hi *= 2.0;
    require(++doublings <= 60, ErrorCode::no_convergence, "feasible timestep bracket did not close after 60 doublings");
  }
  ++out.solves;
  while ((hi - lo) / hi > rel_tol) {
    require(out.iterations < 200, ErrorCode::no_convergence, "no linearly stable timestep found for this spectrum");
    const double mid = 0.5 * (lo + hi);
    if (probe(mid))
      lo = mid;
    else
      hi = mid;
    ++out.iterations;
    ++out.solves;
  }
  require(lo > 0.0, ErrorCode::no_convergence, "no linearly stable timestep found for this spectrum");
  out.dt = lo;
  return out;
}

inline void require_usable_spectrum(const Spectrum& s) {
  require(s.size() > 0, ErrorCode::empty_spectrum, "spectrum has no points");
  require(s.radius() > 0.0, ErrorCode::zero_radius, "all eigenvalues are zero: every timestep is stable");
}

}  // namespace detail

/// Feasibility of |P(dt·λ_m)| <= 1 for some admissible coefficients.
inline FeasibilityResult feasibility(const OptimizationProblem& problem, double dt) {
  problem.validate();
  require(dt > 0.0 && std::isfinite(dt), ErrorCode::invalid_argument, "dt must be positive");
  const bool constrained = problem.parametrization == Parametrization::perk_constrained;
  const int e = problem.degree_e;
  const double bound = 1.0 + problem.feas_tol;

  ConstrainedParams cp;
  LinearPolynomialModel model;
  if (constrained) {
    cp = make_constrained(e, std::vector<double>(static_cast<std::size_t>(e - 5), 1.0), problem.abscissae);
    model = constrained_model(cp);
  } else {
    model = detail::monomial_model(problem.order_p, e);
  }
  auto coefficients_for = [&](const std::vector<double>& x) -> PolynomialCoefficients {
    if (constrained) {
      ConstrainedParams out = cp;
      out.gamma = x;
      return out;
    }
    return MonomialPolynomial(problem.order_p, e, x);
  };
  auto direct = [&](const std::vector<double>& x) { return max_modulus(coefficients_for(x), problem.spectrum, dt); };

  FeasibilityResult res;
  const std::size_t nvars = model.basis.size();
  if (nvars == 0) {
    res.coefficients = coefficients_for({});
    res.residual = direct({});
    res.feasible = res.residual <= bound;
    return res;
  }

  socp::Problem prob;
  prob.num_vars = nvars;
  detail::append_cones(prob, model, problem.spectrum, dt);
  if (constrained) {
    // the floor acts on column-normalized variables: raw gamma_j shrinks
    // like dt^-j and would otherwise hit any fixed floor for large E
    prob.lower.resize(nvars);
    for (std::size_t j = 0; j < nvars; ++j) {
      double mx = 0.0;
      for (const auto& cone : prob.cones) mx = std::max(mx, std::hypot(cone.g_re[j], cone.g_im[j]));
      prob.lower[j] = problem.gamma_floor / (mx > 0.0 ? mx : 1.0);
    }
  }

  const socp::Result sol = detail::solve_feasibility(prob, bound, direct);
  res.newton_steps = sol.newton_steps;
  res.coefficients = coefficients_for(sol.x);
  res.residual = direct(sol.x);
  res.solver_failed = sol.status == socp::Status::iteration_limit;
  const bool objective_ok = sol.status != socp::Status::infeasible_certified && std::min(sol.objective, res.residual) <= bound;
  res.feasible = !res.solver_failed && objective_ok && res.residual <= bound;
  return res;
}

inline OptimizationResult optimize_timestep(const OptimizationProblem& problem) {
  problem.validate();
  detail::require_usable_spectrum(problem.spectrum);

  OptimizationResult out;
  std::optional<FeasibilityResult> best;
  double best_dt = 0.0;
  const double start = 2.0 * problem.degree_e / problem.spectrum.radius();
  const auto b = detail::bisect_timestep(start, problem.bisect_rel_tol, [&](double dt) {
    FeasibilityResult f = feasibility(problem, dt);
    out.newton_steps += f.newton_steps;
    if (f.feasible && dt > best_dt) {
      best_dt = dt;
      best = std::move(f);
      return true;
    }
    return f.feasible;
  });
  out.dt_opt = b.dt;
  out.bisection_iterations = b.iterations;
  out.inner_solves = b.solves;
  out.coefficients = best->coefficients;
  out.max_modulus = max_modulus(out.coefficients, problem.spectrum, out.dt_opt);
  require(out.max_modulus <= 1.0 + problem.feas_tol, ErrorCode::internal_consistency,
          "optimized polynomial fails the direct stability check");
  return out;
}

struct OptimalityRow {
  int degree_e = 0;
  double dt_free = 0.0;
  double dt_perk = 0.0;
  double ratio = 0.0;
};

/// Loss of optimality of the constrained fourth-order parametrization
/// relative to the unconstrained one, per degree E (each E >= 6).
inline std::vector<OptimalityRow> optimality_report(const Spectrum& spectrum, const std::vector<int>& degrees,
                                                    Abscissae kind = Abscissae::constant) {
  std::vector<OptimalityRow> rows;
  for (int e : degrees) {
    require(e >= 6, ErrorCode::invalid_argument, "optimality report needs E >= 6");
    OptimizationProblem free{spectrum, e, 4, Parametrization::monomial};
    OptimizationProblem perk{spectrum, e, 4, Parametrization::perk_constrained, kind};
    const double dt_free = optimize_timestep(free).dt_opt;
    const double dt_perk = optimize_timestep(perk).dt_opt;
    rows.push_back({e, dt_free, dt_perk, dt_perk / dt_free});
  }
  return rows;
}

/// One polynomial of degree E whose truncations to lower degrees must also be
/// stable on their own spectra at the same dt. This is the shared-stage
/// design: truncating after degree E_r keeps exactly the coefficients a
/// member with E_r evaluations inherits from the shared final stages.
struct SharedBlock {
  Spectrum spectrum;
  int truncation_degree = 0;
};

struct SharedProblem {
  int order_p = 2;
  int degree_e = 2;
  std::vector<SharedBlock> blocks;
  double bisect_rel_tol = 1e-4;
  double feas_tol = 1e-9;
};

struct SharedResult {
  double dt_opt = 0.0;
  MonomialPolynomial polynomial;           // full degree-E polynomial
  std::vector<MonomialPolynomial> members;  // truncation per block
  double max_modulus = 0.0;                 // worst block
  int inner_solves = 0;
};

inline MonomialPolynomial truncate(const MonomialPolynomial& p, int degree) {
  require(degree >= p.order_p && degree <= p.degree_e, ErrorCode::invalid_argument, "truncation degree out of range");
  std::vector<double> alpha(p.alpha.begin(), p.alpha.begin() + (degree - p.order_p));
  return MonomialPolynomial(p.order_p, degree, std::move(alpha));
}

inline SharedResult optimize_shared(const SharedProblem& problem) {
  require(!problem.blocks.empty(), ErrorCode::invalid_argument, "shared problem needs at least one block");
  const int p = problem.order_p, e = problem.degree_e;
  MonomialPolynomial(p, e, std::vector<double>(static_cast<std::size_t>(e - p), 0.0));  // validates p, e
  double radius = 0.0;
  for (const auto& blk : problem.blocks) {
    detail::require_usable_spectrum(blk.spectrum);
    require(blk.truncation_degree >= p && blk.truncation_degree <= e, ErrorCode::invalid_argument,
            "block truncation degree out of range");
    radius = std::max(radius, blk.spectrum.radius());
  }
  const double bound = 1.0 + problem.feas_tol;
  const std::size_t nvars = static_cast<std::size_t>(e - p);

  auto direct = [&](const std::vector<double>& x, double dt) {
    const MonomialPolynomial full(p, e, x);
    double worst = 0.0;
    for (const auto& blk : problem.blocks)
      worst = std::max(worst, max_modulus(truncate(full, blk.truncation_degree), blk.spectrum, dt));
    return worst;
  };

  SharedResult out;
  std::vector<double> best_x;
  double best_dt = 0.0;
  const auto b = detail::bisect_timestep(2.0 * e / radius, problem.bisect_rel_tol, [&](double dt) {
    std::vector<double> x(nvars, 0.0);
    double residual = 0.0;
    if (nvars == 0) {
      residual = direct(x, dt);
    } else {
      socp::Problem prob;
      prob.num_vars = nvars;
      for (const auto& blk : problem.blocks) {
        LinearPolynomialModel m = detail::monomial_model(p, e);
        // coefficients above the truncation degree do not reach this block
        for (int d = blk.truncation_degree + 1; d <= e; ++d) m.basis[static_cast<std::size_t>(d - p - 1)].assign(m.base.size(), 0.0);
        detail::append_cones(prob, m, blk.spectrum, dt);
      }
      const auto sol = detail::solve_feasibility(prob, bound, [&](const std::vector<double>& v) { return direct(v, dt); });
      if (sol.status == socp::Status::iteration_limit || sol.status == socp::Status::infeasible_certified) return false;
      x = sol.x;
      residual = direct(x, dt);
    }
    if (residual > bound) return false;
    if (dt > best_dt) {
      best_dt = dt;
      best_x = x;
    }
    return true;
  });
  out.dt_opt = b.dt;
  out.inner_solves = b.solves;
  out.polynomial = MonomialPolynomial(p, e, best_x);
  for (const auto& blk : problem.blocks) out.members.push_back(truncate(out.polynomial, blk.truncation_degree));
  out.max_modulus = direct(best_x, out.dt_opt);
  require(out.max_modulus <= bound, ErrorCode::internal_consistency, "shared polynomial fails the direct stability check");
  return out;
}

}  // namespace perk
