#include <gtest/gtest.h>

#include <filesystem>
#include <numbers>

#include "perk/spectra.hpp"

using perk::Complex;
using perk::DenseMatrix;
using perk::Spectrum;

namespace {

bool contains(const Spectrum& s, Complex z, double tol) {
  for (const auto& p : s.points())
    if (std::abs(p - z) <= tol) return true;
  return false;
}

perk::ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const perk::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no perk::Error thrown";
  return perk::ErrorCode::internal_consistency;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("perk_test_" + name)).string();
}

}  // namespace

TEST(Spectrum, ConstructionGates) {
  EXPECT_EQ(code_of([] { Spectrum(perk::ComplexList{}); }), perk::ErrorCode::empty_spectrum);
  EXPECT_EQ(code_of([] { Spectrum({Complex(0.5, 0)}); }), perk::ErrorCode::positive_real_part);
  EXPECT_NO_THROW(Spectrum({Complex(1e-13, 1.0)}));
}

TEST(Spectrum, KeepsOneRepresentativePerConjugatePair) {
  const Spectrum s({Complex(-1, -2), Complex(-1, 2), Complex(-3, 0)});
  ASSERT_EQ(s.size(), 2u);
  EXPECT_TRUE(contains(s, Complex(-1, 2), 0.0));
  EXPECT_TRUE(contains(s, Complex(-3, 0), 0.0));
}

TEST(CirculantSpectrum, TwoCells) {
  const auto s = perk::circulant_upwind_spectrum(2, 1.0);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_TRUE(contains(s, 0.0, 1e-15));
  EXPECT_TRUE(contains(s, -2.0, 1e-15));
}

TEST(CirculantSpectrum, FourCellsAndScaling) {
  const auto s = perk::circulant_upwind_spectrum(4, 1.0);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_TRUE(contains(s, 0.0, 1e-15));
  EXPECT_TRUE(contains(s, Complex(-1, 1), 1e-15));
  EXPECT_TRUE(contains(s, -2.0, 1e-15));
  const auto h = perk::circulant_upwind_spectrum(4, 0.5);
  for (const auto& p : s.points()) EXPECT_TRUE(contains(h, 2.0 * p, 1e-14));
}

TEST(CirculantSpectrum, PointsLieOnTheShiftedCircle) {
  for (double dx : {1.0, 0.125, 3.0}) {
    const auto s = perk::circulant_upwind_spectrum(37, dx);
    EXPECT_TRUE(contains(s, 0.0, 1e-15));
    for (const auto& p : s.points()) {
      EXPECT_NEAR(std::abs(p + 1.0 / dx), 1.0 / dx, 1e-13 / dx);
      EXPECT_GE(p.imag(), 0.0);
    }
  }
  EXPECT_THROW(perk::circulant_upwind_spectrum(1, 1.0), perk::Error);
  EXPECT_THROW(perk::circulant_upwind_spectrum(4, 0.0), perk::Error);
}

TEST(OperatorSpectrum, UpwindMatrixMatchesCirculantFormula) {
  for (std::size_t n : {8u, 17u, 64u}) {
    DenseMatrix a(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      a(i, i) = -1.0;
      a(i, (i + n - 1) % n) = 1.0;
    }
    const auto got = perk::operator_spectrum(a);
    const auto want = perk::circulant_upwind_spectrum(n, 1.0);
    EXPECT_EQ(got.size(), want.size());
    for (const auto& p : want.points()) EXPECT_TRUE(contains(got, p, 1e-8)) << "n=" << n << " " << p;
  }
}

TEST(OperatorSpectrum, DiagonalAndPositiveRealPart) {
  const auto s = perk::operator_spectrum(DenseMatrix::diagonal(std::vector<double>{-1, -2}));
  EXPECT_TRUE(contains(s, -1.0, 1e-15));
  EXPECT_TRUE(contains(s, -2.0, 1e-15));
  const auto bad = [] { perk::operator_spectrum(DenseMatrix::diagonal(std::vector<double>{-1, 0.5})); };
  EXPECT_EQ(code_of(bad), perk::ErrorCode::positive_real_part);
  try {
    bad();
  } catch (const perk::Error& e) {
    EXPECT_NE(std::string(e.what()).find("0.5"), std::string::npos);  // offender listed
  }
}

TEST(Scale, Examples) {
  EXPECT_EQ(perk::scale(Spectrum({Complex(-1, 0)}), 2.0)[0], Complex(-2, 0));
  EXPECT_EQ(perk::scale(Spectrum({Complex(-1, 1)}), 0.5)[0], Complex(-0.5, 0.5));
  const auto s = perk::circulant_upwind_spectrum(9, 1.0);
  const auto twice = perk::scale(Spectrum(perk::scale(s, 0.5)), 3.0);
  const auto once = perk::scale(s, 1.5);
  for (std::size_t i = 0; i < once.size(); ++i) EXPECT_LT(std::abs(twice[i] - once[i]), 1e-15);
  EXPECT_THROW(perk::scale(s, 0.0), perk::Error);
}

TEST(SpectrumFile, ParsesAndRoundTrips) {
  const auto s = perk::parse_spectrum("# comment\n-1.0,0.0\n");
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s.points()[0], Complex(-1, 0));

  const auto c = perk::circulant_upwind_spectrum(16, 0.25);
  const auto path = temp_path("spectrum.txt");
  perk::save_spectrum(c, path);
  const auto back = perk::load_spectrum(path);
  ASSERT_EQ(back.size(), c.size());
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_LE(std::abs(back.points()[i] - c.points()[i]), 1e-15);
  std::filesystem::remove(path);
}

TEST(SpectrumFile, Errors) {
  EXPECT_EQ(code_of([] { perk::parse_spectrum("0.5,0.0\n"); }), perk::ErrorCode::positive_real_part);
  try {
    perk::parse_spectrum("-1,0\n-2;0\n");
    FAIL();
  } catch (const perk::Error& e) {
    EXPECT_EQ(e.code(), perk::ErrorCode::parse);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  EXPECT_EQ(code_of([] { perk::parse_spectrum("-1,abc\n"); }), perk::ErrorCode::parse);
  EXPECT_EQ(code_of([] { perk::load_spectrum("/nonexistent/dir/spec.txt"); }), perk::ErrorCode::io);
}
