#pragma once

// Error norms, convergence tables and run configuration for experiments.

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "perk/integrator.hpp"
#include "perk/text_io.hpp"

namespace perk {

struct ErrorNorms {
  double l1 = 0.0;          // Σ w|e| / Σ w
  double linf = 0.0;        // max |e|
  double mean_error = 0.0;  // |Σ e| / n, signed errors averaged before the modulus
};

inline ErrorNorms error_norms(std::span<const double> u_h, std::span<const double> u_ref, std::span<const double> weights) {
  require(u_h.size() == u_ref.size(), ErrorCode::dimension_mismatch, "solution and reference differ in length");
  require(weights.size() == u_h.size(), ErrorCode::dimension_mismatch, "weights differ in length from the solution");
  require(!u_h.empty(), ErrorCode::invalid_argument, "empty solution");
  ErrorNorms n;
  double wsum = 0.0, signed_sum = 0.0;
  for (std::size_t i = 0; i < u_h.size(); ++i) {
    require(weights[i] > 0.0, ErrorCode::invalid_argument, "weights must be positive");
    const double e = u_h[i] - u_ref[i];
    n.l1 += weights[i] * std::abs(e);
    wsum += weights[i];
    n.linf = std::max(n.linf, std::abs(e));
    signed_sum += e;
  }
  n.l1 /= wsum;
  n.mean_error = std::abs(signed_sum) / double(u_h.size());
  return n;
}

inline ErrorNorms error_norms(std::span<const double> u_h, std::span<const double> u_ref) {
  return error_norms(u_h, u_ref, std::vector<double>(u_h.size(), 1.0));
}

struct ConvergenceRow {
  double dt = 0.0;
  ErrorNorms error;
  std::optional<double> eoc_l1, eoc_linf, eoc_mean;  // empty for the first row or zero errors
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;

  std::string to_csv() const {
    auto cell = [](const std::optional<double>& v) { return v ? text::format(*v) : std::string(); };
    std::ostringstream os;
    os << "dt,error_l1,error_linf,error_mean,eoc_l1,eoc_linf,eoc_mean\n";
    for (const auto& r : rows)
      os << text::format(r.dt) << ',' << text::format(r.error.l1) << ',' << text::format(r.error.linf) << ','
         << text::format(r.error.mean_error) << ',' << cell(r.eoc_l1) << ',' << cell(r.eoc_linf) << ','
         << cell(r.eoc_mean) << '\n';
    return os.str();
  }
};

/// log(e_prev/e)/log(dt_prev/dt); log2 of the error ratio when dt halves.
inline std::optional<double> observed_order(double e_prev, double e, double dt_prev, double dt) {
  if (!(e_prev > 0.0) || !(e > 0.0) || dt_prev == dt) return std::nullopt;
  return std::log(e_prev / e) / std::log(dt_prev / dt);
}

inline ConvergenceTable fill_eoc(std::vector<ConvergenceRow> rows) {
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const auto &a = rows[k - 1].error, &b = rows[k].error;
    rows[k].eoc_l1 = observed_order(a.l1, b.l1, rows[k - 1].dt, rows[k].dt);
    rows[k].eoc_linf = observed_order(a.linf, b.linf, rows[k - 1].dt, rows[k].dt);
    rows[k].eoc_mean = observed_order(a.mean_error, b.mean_error, rows[k - 1].dt, rows[k].dt);
  }
  return ConvergenceTable{std::move(rows)};
}

/// Integrates to tf for each dt and measures the error against u_ref.
inline ConvergenceTable eoc_study(const PerkFamily& family, const PartitionedSystem& sys, const std::vector<double>& u0,
                                  double t0, double tf, const std::vector<double>& u_ref, const std::vector<double>& dts,
                                  std::optional<std::vector<double>> weights = std::nullopt) {
  require(!dts.empty(), ErrorCode::invalid_argument, "convergence study needs at least one dt");
  const std::vector<double> w = weights.value_or(std::vector<double>(sys.dim, 1.0));
  std::vector<ConvergenceRow> rows;
  for (double dt : dts) {
    const auto res = integrate(family, sys, u0, t0, tf, dt);
    rows.push_back({dt, error_norms(res.u, u_ref, w), {}, {}, {}});
  }
  return fill_eoc(std::move(rows));
}

enum class ProblemId { advection_appendix_b, lotka_volterra, linear_file };

inline ProblemId parse_problem_id(const std::string& s) {
  if (s == "advection-appendix-b") return ProblemId::advection_appendix_b;
  if (s == "lotka-volterra") return ProblemId::lotka_volterra;
  if (s == "linear-file") return ProblemId::linear_file;
  fail(ErrorCode::invalid_argument, "unknown problem '" + s + "' (expected advection-appendix-b, lotka-volterra or linear-file)");
}

inline const char* to_string(ProblemId p) {
  switch (p) {
    case ProblemId::advection_appendix_b: return "advection-appendix-b";
    case ProblemId::lotka_volterra: return "lotka-volterra";
    case ProblemId::linear_file: return "linear-file";
  }
  return "unknown";
}

/// One integration run as driven by the command line.
struct RunConfig {
  ProblemId problem = ProblemId::lotka_volterra;
  std::string family_path;
  std::optional<double> dt;
  std::optional<double> cfl;
  double t0 = 0.0;
  double tf = 1.0;
  std::string matrix_path;  // linear-file only
  std::string state_path;   // linear-file only: initial state
  std::string output_path;  // empty: stdout

  void validate() const {
    require(!family_path.empty(), ErrorCode::invalid_argument, "a family file is required");
    require(dt.has_value() != cfl.has_value(), ErrorCode::invalid_argument, "give exactly one of dt and cfl");
    if (dt) require(*dt > 0.0 && std::isfinite(*dt), ErrorCode::invalid_argument, "dt must be positive");
    if (cfl) require(*cfl > 0.0 && std::isfinite(*cfl), ErrorCode::invalid_argument, "cfl must be positive");
    require(tf >= t0, ErrorCode::invalid_argument, "final time precedes initial time");
    if (problem == ProblemId::linear_file)
      require(!matrix_path.empty() && !state_path.empty(), ErrorCode::invalid_argument,
              "linear-file needs a matrix and an initial state");
    if (problem == ProblemId::lotka_volterra)
      require(!cfl.has_value(), ErrorCode::invalid_argument, "Lotka-Volterra has no CFL condition: pass dt");
  }
};

}  // namespace perk
