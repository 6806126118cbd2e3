#include <gtest/gtest.h>

#include <filesystem>
#include <numbers>

#include "perk/butcher.hpp"
#include "perk/problems.hpp"
#include "perk/spectra.hpp"

namespace {

const std::string golden = std::string(PERK_TEST_DATA) + "/lv_reference_tf5_u1_v2.txt";

perk::PerkFamily lv_family() {
  // E=9 gamma of moderate size; any positive gamma gives a valid scheme
  const std::vector<int> ev{5, 9};
  return perk::build_p4_family(ev, {{}, perk::subdiagonal_to_gamma(std::vector<double>{0.6, 0.4, 0.3, 0.2}, 9)});
}

}  // namespace

TEST(AdvectionFv, UniformStencil) {
  const auto mesh = perk::Mesh1D::uniform(4, 0.0, 4.0);
  const auto sys = perk::advection_fv_system(mesh, 1.0, {0, 0, 0, 0}, 1);
  const auto& lam = sys.linear->lambda;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      const double want = i == j ? -1.0 : (j == (i + 3) % 4 ? 1.0 : 0.0);
      EXPECT_EQ(lam(i, j), want);
    }
}

TEST(AdvectionFv, ConstantStateIsSteady) {
  const auto lm = perk::appendix_b_mesh();
  const auto sys = perk::advection_fv_system(lm, 1.0);
  const std::vector<double> ones(lm.mesh.cells(), 1.0);
  std::vector<double> out(ones.size(), 7.0);
  sys.rhs(0.0, ones, {true, true}, out);
  for (double d : out) EXPECT_EQ(d, 0.0);
  for (std::size_t i = 0; i < sys.dim; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < sys.dim; ++j) row += sys.linear->lambda(i, j);
    EXPECT_EQ(row, 0.0);
  }
}

TEST(AdvectionFv, UniformSpectrumIsCirculant) {
  const std::size_t n = 16;
  const auto mesh = perk::Mesh1D::uniform(n, 0.0, 1.0);
  const auto sys = perk::advection_fv_system(mesh, 1.0, std::vector<std::size_t>(n, 0), 1);
  const auto got = perk::operator_spectrum(sys.linear->lambda);
  const auto want = perk::circulant_upwind_spectrum(n, 1.0 / n);
  ASSERT_EQ(got.size(), want.size());
  for (const auto& z : want.points()) {
    double best = 1e300;
    for (const auto& w : got.points()) best = std::min(best, std::abs(z - w));
    EXPECT_LT(best, 1e-10 * want.radius());
  }
}

TEST(AdvectionFv, InactiveEntriesUntouched) {
  const auto lm = perk::appendix_b_mesh();
  const auto sys = perk::advection_fv_system(lm, 1.0);
  std::vector<double> u(sys.dim);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::sin(0.1 * double(i));
  std::vector<double> out(sys.dim, 42.0);
  sys.rhs(0.0, u, {false, true}, out);
  for (std::size_t i = 0; i < sys.dim; ++i) {
    if (lm.level_of[i] == 0) {
      EXPECT_EQ(out[i], 42.0);
    } else {
      EXPECT_NE(out[i], 42.0);
    }
  }
}

TEST(AdvectionFv, RejectsBadInput) {
  const auto mesh = perk::Mesh1D::uniform(4, 0.0, 1.0);
  EXPECT_THROW(perk::advection_fv_system(mesh, -1.0, {0, 0, 0, 0}, 1), perk::Error);
  EXPECT_THROW(perk::advection_fv_system(mesh, 1.0, {0, 0, 0}, 1), perk::Error);
  EXPECT_THROW(perk::Mesh1D(std::vector<double>{0.0, 1.0}), perk::Error);
  EXPECT_THROW(perk::Mesh1D(std::vector<double>{0.0, 1.0, 1.0}), perk::Error);
}

TEST(NonUniformMesh, Layout) {
  const auto lm = perk::appendix_b_mesh();
  EXPECT_EQ(lm.mesh.cells(), 96u);
  EXPECT_EQ(lm.mesh.length(), 2.0);
  EXPECT_EQ(lm.mesh.cell_edges.front(), -1.0);
  EXPECT_EQ(lm.mesh.cell_edges.back(), 1.0);
  EXPECT_EQ(std::count(lm.level_of.begin(), lm.level_of.end(), 1u), 64);
  for (std::size_t i = 0; i < 96; ++i) {
    const bool fine = i >= 16 && i < 80;
    EXPECT_EQ(lm.level_of[i], fine ? 1u : 0u);
    EXPECT_DOUBLE_EQ(lm.mesh.size(i), fine ? 1.0 / 64.0 : 1.0 / 32.0);
  }
}

TEST(SineIc, Examples) {
  const auto two = perk::sine_ic(perk::Mesh1D::uniform(2, -1.0, 1.0));
  EXPECT_NEAR(two[0], 1.0 - 1.0 / std::numbers::pi, 1e-15);
  EXPECT_NEAR(two[1], 1.0 + 1.0 / std::numbers::pi, 1e-15);

  const auto sym = perk::sine_ic(perk::Mesh1D(std::vector<double>{-1.0, -0.05, 0.05, 1.0}));
  EXPECT_NEAR(sym[1], 1.0, 1e-15);

  const auto lm = perk::appendix_b_mesh();
  const auto u = perk::sine_ic(lm.mesh);
  double mass = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) mass += u[i] * lm.mesh.size(i);
  EXPECT_NEAR(mass / lm.mesh.length(), 1.0, 1e-15);
}

TEST(SineIc, ExactSolutionIsPeriodicShift) {
  const auto lm = perk::appendix_b_mesh();
  const auto u0 = perk::sine_ic(lm.mesh);
  const auto u2 = perk::sine_exact(lm.mesh, 1.0, 2.0);
  for (std::size_t i = 0; i < u0.size(); ++i) EXPECT_NEAR(u2[i], u0[i], 1e-14);
}

TEST(LotkaVolterra, Examples) {
  const auto sys = perk::lotka_volterra_system();
  EXPECT_EQ(sys.levels, 2u);
  EXPECT_EQ(sys.level_of, (std::vector<std::size_t>{0, 1}));
  std::vector<double> out(2);
  sys.rhs(0.0, std::vector<double>{1.0, 1.0}, {true, true}, out);
  EXPECT_EQ(out, (std::vector<double>{0.0, 0.0}));
  sys.rhs(0.0, std::vector<double>{2.0, 1.0}, {true, true}, out);
  EXPECT_EQ(out, (std::vector<double>{0.0, 1.0}));
  out = {9.0, 9.0};
  sys.rhs(0.0, std::vector<double>{2.0, 3.0}, {false, true}, out);
  EXPECT_EQ(out, (std::vector<double>{9.0, 3.0}));
  EXPECT_DOUBLE_EQ(perk::lv_invariant({1.0, 1.0}), 2.0);
  EXPECT_THROW(perk::lv_invariant({-1.0, 1.0}), perk::Error);
}

TEST(LvReference, ZeroTimeIsInitialState) {
  const auto s = perk::lv_reference(0.0, {1.0, 2.0});
  EXPECT_EQ(s.u, 1.0);
  EXPECT_EQ(s.v, 2.0);
}

TEST(LvReference, MatchesGoldenFileAndConservesInvariant) {
  const auto doc = perk::text::parse_document(perk::text::read_file(golden));
  const double gu = perk::text::parse_double(doc.front().get("u"), "u");
  const double gv = perk::text::parse_double(doc.front().get("v"), "v");
  const auto s = perk::lv_reference(5.0, {1.0, 2.0});
  EXPECT_NEAR(s.u, gu, 1e-12);
  EXPECT_NEAR(s.v, gv, 1e-12);
  EXPECT_NEAR(perk::lv_invariant(s), perk::lv_invariant({1.0, 2.0}), 1e-11);
}

TEST(LvReference, CacheReadsMatchingKeyAndRewritesOtherwise) {
  const auto cached = perk::lv_reference_cached(golden, 5.0, {1.0, 2.0});
  EXPECT_EQ(cached.u, 1.8284606667577119);
  EXPECT_EQ(cached.v, 0.6479962865092872);

  const auto path = (std::filesystem::temp_directory_path() / "perk_lv_cache.txt").string();
  std::filesystem::copy_file(golden, path, std::filesystem::copy_options::overwrite_existing);
  const auto s = perk::lv_reference_cached(path, 0.5, {1.0, 2.0});  // key differs: recomputed
  const auto doc = perk::text::parse_document(perk::text::read_file(path));
  EXPECT_EQ(perk::text::parse_double(doc.front().get("t_f"), "t_f"), 0.5);
  EXPECT_EQ(perk::text::parse_double(doc.front().get("u"), "u"), s.u);
  std::filesystem::remove(path);
}

TEST(LotkaVolterra, InvariantDriftIsFourthOrder) {
  const auto fam = lv_family();
  const auto sys = perk::lotka_volterra_system();
  const double v0 = perk::lv_invariant({1.0, 2.0});
  std::vector<double> x, y;
  for (int k = 5; k <= 9; ++k) {
    const double dt = std::ldexp(1.0, -k);
    const auto u = perk::integrate(fam, sys, {1.0, 2.0}, 0.0, 5.0, dt).u;
    x.push_back(std::log(dt));
    y.push_back(std::log(std::abs(perk::lv_invariant({u[0], u[1]}) - v0)));
  }
  const double n = double(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  EXPECT_NEAR(slope, 4.0, 0.3);
}
