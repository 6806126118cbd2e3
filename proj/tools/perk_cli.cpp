// perk: command-line driver for spectra, optimization, tableau construction,
// checking and integration. Exit codes are listed in README.md.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "perk/perk.hpp"

namespace {

using perk::ErrorCode;
namespace text = perk::text;

enum Exit : int { ok = 0, internal = 1, usage = 2, io = 3, validation = 4, numerical = 5, check_failed = 6 };

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::io:
    case ErrorCode::parse:
      return io;
    case ErrorCode::invalid_argument:
    case ErrorCode::dimension_mismatch:
    case ErrorCode::positive_real_part:
    case ErrorCode::empty_spectrum:
    case ErrorCode::zero_radius:
    case ErrorCode::nonpositive_gamma:
    case ErrorCode::no_feasible_member:
    case ErrorCode::internal_consistency:
      return validation;
    case ErrorCode::singular_matrix:
    case ErrorCode::no_convergence:
    case ErrorCode::non_finite:
    case ErrorCode::zero_division:
    case ErrorCode::richardson_disagreement:
    case ErrorCode::oracle_mismatch:
    case ErrorCode::order_condition:
    case ErrorCode::coupling_condition:
      return numerical;
  }
  return internal;
}

void emit(const std::string& content, const std::string& path) {
  if (path.empty()) {
    std::cout << content;
  } else {
    text::write_file(path, content);
  }
}

perk::Abscissae parse_abscissae(const std::string& s) {
  if (s == "constant") return perk::Abscissae::constant;
  if (s == "linear") return perk::Abscissae::linear;
  perk::fail(ErrorCode::invalid_argument, "abscissae must be 'constant' or 'linear'");
}

/// Dense matrix file: one row per line, whitespace or comma separated;
/// blank lines and '#' comments are skipped.
perk::DenseMatrix read_matrix(const std::string& path) {
  std::istringstream in(text::read_file(path));
  std::string line;
  std::vector<double> entries;
  std::size_t cols = 0, rows = 0;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto row = text::parse_list(t, path + ":" + std::to_string(number));
    if (rows == 0) cols = row.size();
    perk::require(row.size() == cols && cols > 0, ErrorCode::parse, path + ":" + std::to_string(number) + ": ragged matrix row");
    entries.insert(entries.end(), row.begin(), row.end());
    ++rows;
  }
  perk::require(rows > 0, ErrorCode::parse, path + ": empty matrix");
  return perk::DenseMatrix(rows, cols, std::move(entries));
}

/// State file for linear-file runs: `u0 = ...` and optional `levels = ...`.
struct LinearState {
  std::vector<double> u0;
  std::vector<std::size_t> levels;
};

LinearState read_state(const std::string& path, std::size_t dim) {
  const auto doc = text::parse_document(text::read_file(path));
  LinearState st;
  st.u0 = text::parse_list(doc.front().get("u0"), path + ": u0");
  perk::require(st.u0.size() == dim, ErrorCode::dimension_mismatch, "initial state length differs from matrix size");
  st.levels.assign(dim, 0);
  if (const auto* lv = doc.front().find("levels")) {
    const auto raw = text::parse_list(*lv, path + ": levels");
    perk::require(raw.size() == dim, ErrorCode::dimension_mismatch, "level list length differs from matrix size");
    for (std::size_t i = 0; i < dim; ++i) {
      perk::require(raw[i] >= 0 && raw[i] == std::floor(raw[i]), ErrorCode::parse, "levels must be non-negative integers");
      st.levels[i] = static_cast<std::size_t>(raw[i]);
    }
  }
  return st;
}

std::size_t level_count(const std::vector<std::size_t>& lv) { return *std::max_element(lv.begin(), lv.end()) + 1; }

/// A named problem with its initial state, conservation weights and the
/// characteristic scales needed for CFL timesteps.
struct ProblemSetup {
  perk::PartitionedSystem sys;
  std::vector<double> u0;
  std::vector<double> weights;  // empty: no conserved quantity
  std::optional<perk::CflSpec> cfl_base;
  std::optional<perk::Mesh1D> mesh;
};

/// Single-member families run everything on level 0.
ProblemSetup make_problem(perk::ProblemId id, const perk::PerkFamily& fam, const std::string& matrix_path,
                          const std::string& state_path) {
  ProblemSetup p;
  switch (id) {
    case perk::ProblemId::advection_appendix_b: {
      const auto lm = perk::appendix_b_mesh();
      p.sys = perk::advection_fv_system(lm, 1.0);
      p.u0 = perk::sine_ic(lm.mesh);
      p.weights = lm.mesh.cell_sizes();
      p.cfl_base = perk::CflSpec{1.0, *std::min_element(p.weights.begin(), p.weights.end()), 1.0};
      p.mesh = lm.mesh;
      break;
    }
    case perk::ProblemId::lotka_volterra:
      p.sys = perk::lotka_volterra_system();
      p.u0 = {1.0, 2.0};
      break;
    case perk::ProblemId::linear_file: {
      const auto lambda = read_matrix(matrix_path);
      auto st = read_state(state_path, lambda.rows());
      p.sys = perk::linear_system(lambda, st.levels, level_count(st.levels));
      p.u0 = std::move(st.u0);
      p.weights.assign(p.u0.size(), 1.0);
      break;
    }
  }
  if (fam.levels() == 1) p.sys = perk::single_level(std::move(p.sys));
  return p;
}

double resolve_dt(const perk::RunConfig& cfg, const ProblemSetup& p) {
  if (cfg.dt) return *cfg.dt;
  perk::require(p.cfl_base.has_value(), ErrorCode::invalid_argument, "this problem has no CFL condition: pass --dt");
  perk::CflSpec c = *p.cfl_base;
  c.cfl = *cfg.cfl;
  return c.timestep();
}

std::string coefficient_report(const perk::PolynomialCoefficients& pc) {
  std::string out;
  if (const auto* m = std::get_if<perk::MonomialPolynomial>(&pc)) {
    out += "parametrization = monomial\norder = " + std::to_string(m->order_p) + "\ndegree = " + std::to_string(m->degree_e) +
           "\nalpha = " + text::join(m->alpha) + "\n";
  } else {
    const auto& c = std::get<perk::ConstrainedParams>(pc);
    out += "parametrization = perk\norder = 4\ndegree = " + std::to_string(c.degree_e) + "\ngamma = " + text::join(c.gamma) +
           "\nabscissae = " + text::join(c.c) + "\n";
  }
  out += "coefficients = " + text::join(perk::polynomial_coefficients(pc)) + "\n";
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Paired explicit Runge-Kutta toolkit"};
  app.require_subcommand(1);

  // spectrum
  auto* spec_cmd = app.add_subcommand("spectrum", "generate or inspect an eigenvalue spectrum");
  std::vector<double> circ;
  std::string spec_matrix, spec_in, spec_out;
  auto* circ_opt = spec_cmd->add_option("--circulant", circ, "N DX: periodic upwind spectrum")->expected(2);
  auto* mat_opt = spec_cmd->add_option("--matrix", spec_matrix, "dense matrix file");
  auto* in_opt = spec_cmd->add_option("--in", spec_in, "existing spectrum file");
  circ_opt->excludes(mat_opt, in_opt);
  mat_opt->excludes(in_opt);
  spec_cmd->add_option("--out", spec_out, "output file (default stdout)");

  // optimize
  auto* opt_cmd = app.add_subcommand("optimize", "maximize the stable timestep of a stability polynomial");
  std::string opt_spectrum, opt_param = "monomial", opt_absc = "constant", opt_out;
  int opt_degree = 0, opt_order = 0;
  double opt_btol = 1e-4, opt_ftol = 1e-9;
  opt_cmd->add_option("--spectrum", opt_spectrum)->required();
  opt_cmd->add_option("--degree", opt_degree)->required();
  opt_cmd->add_option("--order", opt_order)->required();
  opt_cmd->add_option("--parametrization", opt_param)->check(CLI::IsMember({"monomial", "perk"}));
  opt_cmd->add_option("--abscissae", opt_absc)->check(CLI::IsMember({"constant", "linear"}));
  opt_cmd->add_option("--bisect-tol", opt_btol);
  opt_cmd->add_option("--feas-tol", opt_ftol);
  opt_cmd->add_option("--out", opt_out);

  // optimality-report
  auto* rep_cmd = app.add_subcommand("optimality-report", "constrained vs unconstrained timestep per degree");
  std::string rep_spectrum, rep_absc = "constant", rep_out;
  std::vector<int> rep_degrees;
  rep_cmd->add_option("--spectrum", rep_spectrum)->required();
  rep_cmd->add_option("--degrees", rep_degrees)->required()->delimiter(',');
  rep_cmd->add_option("--abscissae", rep_absc)->check(CLI::IsMember({"constant", "linear"}));
  rep_cmd->add_option("--out", rep_out);

  // build-family
  auto* fam_cmd = app.add_subcommand("build-family", "optimize one member per spectrum and emit the family");
  int fam_order = 4;
  std::vector<int> fam_evals;
  std::vector<std::string> fam_spectra;
  std::string fam_out;
  fam_cmd->add_option("--order", fam_order)->check(CLI::IsMember({2, 4}));
  fam_cmd->add_option("--evals", fam_evals)->required()->delimiter(',');
  fam_cmd->add_option("--spectra", fam_spectra, "one spectrum file per member")->required()->delimiter(',');
  fam_cmd->add_option("--out", fam_out);

  // check
  auto* chk_cmd = app.add_subcommand("check", "order, consistency and coupling residuals of a tableau or family");
  std::string chk_file;
  std::optional<int> chk_order;
  double chk_tol = 1e-12;
  chk_cmd->add_option("file", chk_file)->required();
  chk_cmd->add_option("--order", chk_order, "order to check (default: declared order)");
  chk_cmd->add_option("--tol", chk_tol, "failure threshold");

  // amplification
  auto* amp_cmd = app.add_subcommand("amplification", "internal amplification factor on a spectrum");
  std::string amp_family, amp_spectrum, amp_absc = "constant";
  std::optional<double> amp_dt;
  std::optional<int> amp_degree;
  amp_cmd->add_option("--spectrum", amp_spectrum)->required();
  auto* amp_fam_opt = amp_cmd->add_option("--family", amp_family, "family or tableau file");
  auto* amp_deg_opt = amp_cmd->add_option("--degree", amp_degree, "optimize a fourth-order tableau of this E first");
  amp_fam_opt->excludes(amp_deg_opt);
  amp_cmd->add_option("--dt", amp_dt, "timestep (default: the optimized one with --degree)");
  amp_cmd->add_option("--abscissae", amp_absc)->check(CLI::IsMember({"constant", "linear"}));

  // integrate and converge share the problem options
  perk::RunConfig run;
  std::string problem_name = "lotka-volterra";
  auto add_problem_options = [&](CLI::App* cmd) {
    cmd->add_option("--problem", problem_name)->check(CLI::IsMember({"advection-appendix-b", "lotka-volterra", "linear-file"}));
    cmd->add_option("--family", run.family_path)->required();
    cmd->add_option("--t0", run.t0);
    cmd->add_option("--tf", run.tf);
    cmd->add_option("--matrix", run.matrix_path, "linear-file: dense operator");
    cmd->add_option("--state", run.state_path, "linear-file: 'u0 = ...' and optional 'levels = ...'");
    cmd->add_option("--out", run.output_path);
  };
  auto* int_cmd = app.add_subcommand("integrate", "integrate a named problem");
  add_problem_options(int_cmd);
  auto* int_dt = int_cmd->add_option("--dt", run.dt);
  auto* int_cfl = int_cmd->add_option("--cfl", run.cfl);
  int_dt->excludes(int_cfl);

  auto* conv_cmd = app.add_subcommand("converge", "convergence study over halved timesteps");
  add_problem_options(conv_cmd);
  double conv_dt0 = 0.125;
  int conv_halvings = 6;
  std::string conv_cache;
  conv_cmd->add_option("--dt0", conv_dt0, "largest timestep");
  conv_cmd->add_option("--halvings", conv_halvings)->check(CLI::Range(0, 30));
  conv_cmd->add_option("--reference-cache", conv_cache, "lotka-volterra: cached reference file");

  // stability-matrix
  auto* sm_cmd = app.add_subcommand("stability-matrix", "assemble the one-step matrix and report its spectral radius");
  std::string sm_family, sm_matrix, sm_state;
  double sm_dt = 0.0;
  sm_cmd->add_option("--family", sm_family)->required();
  sm_cmd->add_option("--dt", sm_dt)->required();
  sm_cmd->add_option("--matrix", sm_matrix, "dense operator (default: upwind advection on the non-uniform mesh)");
  sm_cmd->add_option("--state", sm_state, "with --matrix: file giving 'levels = ...'");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? ok : usage;
  }

  try {
    if (*spec_cmd) {
      std::optional<perk::Spectrum> s;
      if (!circ.empty()) {
        perk::require(circ[0] >= 1 && circ[0] == std::floor(circ[0]), ErrorCode::invalid_argument, "N must be a positive integer");
        s = perk::circulant_upwind_spectrum(static_cast<std::size_t>(circ[0]), circ[1]);
      } else if (!spec_matrix.empty()) {
        s = perk::operator_spectrum(read_matrix(spec_matrix), spec_matrix);
      } else if (!spec_in.empty()) {
        s = perk::load_spectrum(spec_in);
      } else {
        perk::fail(ErrorCode::invalid_argument, "give one of --circulant, --matrix, --in");
      }
      std::fprintf(stderr, "points %zu radius %s\n", s->size(), text::format(s->radius()).c_str());
      emit(perk::format_spectrum(*s), spec_out);
    } else if (*opt_cmd) {
      perk::OptimizationProblem prob{perk::load_spectrum(opt_spectrum), opt_degree, opt_order,
                                     opt_param == "perk" ? perk::Parametrization::perk_constrained : perk::Parametrization::monomial,
                                     parse_abscissae(opt_absc), opt_btol, opt_ftol};
      const auto res = perk::optimize_timestep(prob);
      std::string out = "# optimized stability polynomial\ndt_opt = " + text::format(res.dt_opt) +
                        "\nmax_modulus = " + text::format(res.max_modulus) + "\n" + coefficient_report(res.coefficients) +
                        "bisection_iterations = " + std::to_string(res.bisection_iterations) +
                        "\ninner_solves = " + std::to_string(res.inner_solves) + "\n";
      emit(out, opt_out);
    } else if (*rep_cmd) {
      const auto rows = perk::optimality_report(perk::load_spectrum(rep_spectrum), rep_degrees, parse_abscissae(rep_absc));
      std::string out = "E,dt_free,dt_perk,ratio\n";
      for (const auto& r : rows)
        out += std::to_string(r.degree_e) + "," + text::format(r.dt_free) + "," + text::format(r.dt_perk) + "," +
               text::format(r.ratio) + "\n";
      emit(out, rep_out);
    } else if (*fam_cmd) {
      perk::require(fam_evals.size() == fam_spectra.size(), ErrorCode::dimension_mismatch, "one spectrum per member required");
      perk::PerkFamily fam;
      std::vector<std::vector<double>> gammas;
      std::vector<perk::MonomialPolynomial> polys;
      for (std::size_t r = 0; r < fam_evals.size(); ++r) {
        const auto par = fam_order == 4 ? perk::Parametrization::perk_constrained : perk::Parametrization::monomial;
        const auto res = perk::optimize_timestep({perk::load_spectrum(fam_spectra[r]), fam_evals[r], fam_order, par});
        std::fprintf(stderr, "member E=%d dt_opt %s\n", fam_evals[r], text::format(res.dt_opt).c_str());
        if (fam_order == 4) {
          gammas.push_back(std::get<perk::ConstrainedParams>(res.coefficients).gamma);
        } else {
          polys.push_back(std::get<perk::MonomialPolynomial>(res.coefficients));
        }
      }
      fam = fam_order == 4 ? perk::build_p4_family(fam_evals, gammas) : perk::build_p2_family(fam_evals, polys);
      emit(perk::serialize_family(fam), fam_out);
    } else if (*chk_cmd) {
      // a plain tableau (possibly dense) is checked on its own, a family jointly
      const auto content = text::read_file(chk_file);
      const bool is_tableau = text::parse_document(content).front().get("kind") == "tableau";
      std::optional<perk::ButcherTableau> tab;
      std::optional<perk::PerkFamily> fam;
      if (is_tableau) {
        tab = perk::parse_tableau(content);
      } else {
        fam = perk::parse_family(content);
      }
      const int p = chk_order.value_or(tab ? tab->order_p : fam->order_p);
      const auto rep = tab ? perk::check_order_conditions(*tab, p) : perk::check_order_conditions(*fam, p);
      bool failed = false;
      std::printf("condition,r1,r2,value,target,residual\n");
      for (const auto& e : rep.entries) {
        std::printf("%s,%d,%d,%s,%s,%s\n", e.condition.c_str(), e.r1, e.r2, text::format(e.value).c_str(),
                    text::format(e.target).c_str(), text::format(e.residual()).c_str());
        failed = failed || !(e.residual() <= chk_tol);
      }
      const auto cons = tab ? std::vector<double>{perk::check_internal_consistency(*tab)} : perk::check_internal_consistency(*fam);
      for (std::size_t r = 0; r < cons.size(); ++r) {
        std::printf("row sums,%zu,%zu,,,%s\n", r, r, text::format(cons[r]).c_str());
        failed = failed || !(cons[r] <= chk_tol);
      }
      std::printf("max_residual = %s\nstatus = %s\n", text::format(rep.max_residual()).c_str(), failed ? "FAIL" : "OK");
      return failed ? check_failed : ok;
    } else if (*amp_cmd) {
      const auto spectrum = perk::load_spectrum(amp_spectrum);
      std::printf("member,E,dt,amplification\n");
      if (amp_degree) {
        const auto kind = parse_abscissae(amp_absc);
        const auto res = perk::optimize_timestep({spectrum, *amp_degree, 4, perk::Parametrization::perk_constrained, kind});
        const auto t = perk::build_p4_tableau(*amp_degree, std::get<perk::ConstrainedParams>(res.coefficients).gamma, kind);
        const double dt = amp_dt.value_or(res.dt_opt);
        std::printf("0,%d,%s,%s\n", *amp_degree, text::format(dt).c_str(), text::format(perk::amplification_factor(t, spectrum, dt)).c_str());
      } else {
        perk::require(!amp_family.empty(), ErrorCode::invalid_argument, "give --family or --degree");
        perk::require(amp_dt.has_value(), ErrorCode::invalid_argument, "--dt is required with --family");
        const auto fam = perk::deserialize_family(amp_family);
        for (std::size_t r = 0; r < fam.levels(); ++r)
          std::printf("%zu,%d,%s,%s\n", r, fam.members[r].evals_e, text::format(*amp_dt).c_str(),
                      text::format(perk::amplification_factor(fam.member_tableau(r), spectrum, *amp_dt)).c_str());
      }
    } else if (*int_cmd) {
      run.problem = perk::parse_problem_id(problem_name);
      run.validate();
      const auto fam = perk::deserialize_family(run.family_path);
      auto p = make_problem(run.problem, fam, run.matrix_path, run.state_path);
      const double dt = resolve_dt(run, p);
      const auto res = perk::integrate(fam, p.sys, p.u0, run.t0, run.tf, dt);
      std::string out = "# integration of " + std::string(perk::to_string(run.problem)) + "\ndt = " + text::format(dt) +
                        "\nt_final = " + text::format(run.tf) + "\nsteps = " + std::to_string(res.stats.steps) + "\n";
      for (std::size_t r = 0; r < res.stats.rhs_evals.size(); ++r)
        out += "rhs_evals_level_" + std::to_string(r) + " = " + std::to_string(res.stats.rhs_evals[r]) + "\n";
      out += "rhs_evals_total = " + std::to_string(res.stats.total_rhs_evals()) + "\n";
      if (!p.weights.empty()) out += "conservation_error = " + text::join(perk::conservation_error(p.u0, res.u, p.weights)) + "\n";
      if (run.problem == perk::ProblemId::lotka_volterra)
        out += "invariant_drift = " + text::format(perk::lv_invariant({res.u[0], res.u[1]}) - perk::lv_invariant({p.u0[0], p.u0[1]})) + "\n";
      out += "u = " + text::join(res.u) + "\n";
      emit(out, run.output_path);
    } else if (*conv_cmd) {
      run.problem = perk::parse_problem_id(problem_name);
      run.dt = conv_dt0;
      run.validate();
      const auto fam = perk::deserialize_family(run.family_path);
      auto p = make_problem(run.problem, fam, run.matrix_path, run.state_path);
      std::vector<double> ref;
      switch (run.problem) {
        case perk::ProblemId::lotka_volterra: {
          perk::require(run.t0 == 0.0, ErrorCode::invalid_argument, "the Lotka-Volterra reference starts at t = 0");
          const perk::LotkaVolterraState s0{p.u0[0], p.u0[1]};
          const auto r = conv_cache.empty() ? perk::lv_reference(run.tf, s0) : perk::lv_reference_cached(conv_cache, run.tf, s0);
          ref = {r.u, r.v};
          break;
        }
        case perk::ProblemId::advection_appendix_b:
          perk::require(run.t0 == 0.0, ErrorCode::invalid_argument, "the advection reference starts at t = 0");
          ref = perk::sine_exact(*p.mesh, 1.0, run.tf);
          break;
        case perk::ProblemId::linear_file:
          perk::fail(ErrorCode::invalid_argument, "linear-file has no reference solution");
      }
      std::vector<double> dts;
      for (int k = 0; k <= conv_halvings; ++k) dts.push_back(std::ldexp(conv_dt0, -k));
      std::optional<std::vector<double>> w;
      if (run.problem == perk::ProblemId::advection_appendix_b) w = p.weights;
      emit(perk::eoc_study(fam, p.sys, p.u0, run.t0, run.tf, ref, dts, w).to_csv(), run.output_path);
    } else if (*sm_cmd) {
      const auto fam = perk::deserialize_family(sm_family);
      perk::PartitionedSystem sys;
      if (sm_matrix.empty()) {
        sys = make_problem(perk::ProblemId::advection_appendix_b, fam, {}, {}).sys;
      } else {
        const auto lambda = read_matrix(sm_matrix);
        std::vector<std::size_t> lv(lambda.rows(), 0);
        if (!sm_state.empty()) {
          const auto doc = text::parse_document(text::read_file(sm_state));
          const auto raw = text::parse_list(doc.front().get("levels"), sm_state + ": levels");
          perk::require(raw.size() == lv.size(), ErrorCode::dimension_mismatch, "level list length differs from matrix size");
          for (std::size_t i = 0; i < lv.size(); ++i) lv[i] = static_cast<std::size_t>(raw[i]);
        }
        sys = perk::linear_system(lambda, lv, level_count(lv));
        if (fam.levels() == 1) sys = perk::single_level(std::move(sys));
      }
      const auto d = perk::build_fully_discrete(fam, sys, sm_dt);
      const double rho = perk::spectral_radius(d);
      std::printf("dimension = %zu\ndt = %s\nspectral_radius = %s\nexcess = %s\n", sys.dim, text::format(sm_dt).c_str(),
                  text::format(rho).c_str(), text::format(rho - 1.0).c_str());
    }
  } catch (const perk::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return internal;
  }
  return ok;
}
