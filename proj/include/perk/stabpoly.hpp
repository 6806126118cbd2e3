#pragma once

// Stability polynomials: monomial form, the gamma-parametrized fourth-order
// P-ERK form, coefficient extraction from tableaus, and internal stability.

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "perk/spectra.hpp"
#include "perk/tableau.hpp"
#include "perk/text_io.hpp"

namespace perk {

namespace p4 {

// Coefficients shared by every fourth-order P-ERK scheme (c_{S-3} = 1).
inline constexpr double k1 = 0.001055026310046423;
inline constexpr double k2 = 0.03726406530405851;

inline constexpr double b_last_two = 0.5;
inline constexpr double c_s_minus_2 = 0.479274057836310;
inline constexpr double a_s_minus_2_numerator = 0.114851811257441;  // a_{S-2,S-3}·c_{S-3}
inline constexpr double a_s_minus_1 = 0.648906880894214;
inline constexpr double a_s = 0.0283121635129678;

inline double c_s_minus_1() { return 0.5 + std::sqrt(3.0) / 6.0; }
inline double c_s() { return 0.5 - std::sqrt(3.0) / 6.0; }

}  // namespace p4

inline double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

inline Complex horner(std::span<const double> coeffs, Complex z) {
  Complex acc = 0.0;
  for (std::size_t j = coeffs.size(); j-- > 0;) acc = acc * z + coeffs[j];
  return acc;
}

/// Degree-E polynomial with linear order p: the coefficients of z^0..z^p are
/// 1/j! implicitly; alpha holds the free coefficients of z^{p+1}..z^E.
struct MonomialPolynomial {
  int order_p = 1;
  int degree_e = 1;
  std::vector<double> alpha;

  MonomialPolynomial() = default;
  MonomialPolynomial(int p, int e, std::vector<double> free)
      : order_p(p), degree_e(e), alpha(std::move(free)) {
    require(p >= 1 && p <= 4, ErrorCode::invalid_argument, "linear order must lie in 1..4");
    require(e >= p, ErrorCode::invalid_argument, "degree must be at least the linear order");
    require(alpha.size() == static_cast<std::size_t>(e - p), ErrorCode::dimension_mismatch,
            "alpha length must equal degree - order");
  }

  std::vector<double> coefficients() const {
    std::vector<double> out(static_cast<std::size_t>(degree_e) + 1);
    for (int j = 0; j <= order_p; ++j) out[static_cast<std::size_t>(j)] = 1.0 / factorial(j);
    for (std::size_t k = 0; k < alpha.size(); ++k) out[static_cast<std::size_t>(order_p) + 1 + k] = alpha[k];
    return out;
  }
};

inline Complex eval_monomial(const MonomialPolynomial& p, Complex z) { return horner(p.coefficients(), z); }

/// Optimization variables of the fourth-order P-ERK polynomial: gamma_j is
/// the product of the last j free subdiagonal entries (a_{E-3}, a_{E-4}, ...).
struct ConstrainedParams {
  int degree_e = 5;
  std::vector<double> gamma;  // E - 5 entries, all positive
  std::vector<double> c;      // standalone abscissae c_1..c_E (zero-based storage)
  double k1 = p4::k1;
  double k2 = p4::k2;

  double c1(int i) const { return c[static_cast<std::size_t>(i - 1)]; }   // one-based accessor
  double g(int j) const { return gamma[static_cast<std::size_t>(j - 1)]; }
};

/// Standalone abscissae for a fourth-order scheme with E stages. Interior
/// entries c_2..c_{E-3} are 1.0 (constant) or (i-1)/(E-4) (linear); c_{E-3}
/// is 1 in both cases.
enum class Abscissae { constant, linear };

inline std::vector<double> p4_abscissae(int e, Abscissae kind = Abscissae::constant) {
  require(e >= 5, ErrorCode::invalid_argument, "fourth-order P-ERK needs E >= 5");
  std::vector<double> c(static_cast<std::size_t>(e));
  c[0] = 0.0;
  for (int i = 2; i <= e - 3; ++i)
    c[static_cast<std::size_t>(i - 1)] = kind == Abscissae::constant ? 1.0 : double(i - 1) / double(e - 4);
  c[static_cast<std::size_t>(e - 3)] = p4::c_s_minus_2;
  c[static_cast<std::size_t>(e - 2)] = p4::c_s_minus_1();
  c[static_cast<std::size_t>(e - 1)] = p4::c_s();
  return c;
}

inline ConstrainedParams make_constrained(int e, std::vector<double> gamma, Abscissae kind = Abscissae::constant) {
  require(gamma.size() + 5 == static_cast<std::size_t>(e), ErrorCode::dimension_mismatch, "gamma must have E-5 entries");
  return ConstrainedParams{e, std::move(gamma), p4_abscissae(e, kind)};
}

/// Polynomial linear in its parameters: P(z; x) = base(z) + Σ_j x_j·basis_j(z).
struct LinearPolynomialModel {
  std::vector<double> base;                // coefficients z^0..z^E
  std::vector<std::vector<double>> basis;  // one coefficient vector per parameter
};

/// Affine structure of the constrained fourth-order polynomial in gamma.
inline LinearPolynomialModel constrained_model(const ConstrainedParams& cp) {
  const int e = cp.degree_e;
  require(e >= 5, ErrorCode::invalid_argument, "constrained polynomial needs E >= 5");
  require(cp.c.size() == static_cast<std::size_t>(e), ErrorCode::dimension_mismatch, "abscissae must have E entries");
  LinearPolynomialModel m;
  m.base.assign(static_cast<std::size_t>(e) + 1, 0.0);
  for (int j = 0; j <= 4; ++j) m.base[static_cast<std::size_t>(j)] = 1.0 / factorial(j);
  m.base[5] = cp.k1;
  const double cs3 = cp.c1(e - 3);
  for (int j = 1; j <= e - 5; ++j) {
    std::vector<double> col(static_cast<std::size_t>(e) + 1, 0.0);
    const double cj = cp.c1(e - 3 - j);
    col[static_cast<std::size_t>(4 + j)] = cj * cp.k2 / cs3;
    col[static_cast<std::size_t>(5 + j)] = cj * cp.k1 / cs3;
    m.basis.push_back(std::move(col));
  }
  return m;
}

/// Monomial coefficients z^0..z^E of the constrained polynomial, written
/// term by term in the gamma parametrization.
inline std::vector<double> constrained_coefficients(const ConstrainedParams& cp) {
  const int e = cp.degree_e;
  require(e >= 5, ErrorCode::invalid_argument, "constrained polynomial needs E >= 5");
  require(cp.gamma.size() + 5 == static_cast<std::size_t>(e), ErrorCode::dimension_mismatch, "gamma must have E-5 entries");
  require(cp.c.size() == static_cast<std::size_t>(e), ErrorCode::dimension_mismatch, "abscissae must have E entries");
  std::vector<double> coef(static_cast<std::size_t>(e) + 1, 0.0);
  for (int j = 0; j <= 4; ++j) coef[static_cast<std::size_t>(j)] = 1.0 / factorial(j);
  if (e == 5) {
    coef[5] = cp.k1;
    return coef;
  }
  const double k2c = cp.k2 / cp.c1(e - 3);
  const double k1c = cp.k1 / cp.c1(e - 3);
  coef[5] = cp.k1 + cp.g(1) * k2c * cp.c1(e - 4);
  for (int k = 6; k <= e - 1; ++k)
    coef[static_cast<std::size_t>(k)] = cp.g(k - 4) * k2c * cp.c1(e - k + 1) + cp.g(k - 5) * k1c * cp.c1(e - k + 2);
  coef[static_cast<std::size_t>(e)] = cp.g(e - 5) * k1c * cp.c1(2);
  return coef;
}

inline Complex eval_constrained(const ConstrainedParams& cp, Complex z) { return horner(constrained_coefficients(cp), z); }

/// gamma -> free subdiagonal entries a_3 .. a_{E-3} (ascending stage order).
inline std::vector<double> gamma_to_subdiagonal(std::span<const double> gamma, int e) {
  require(gamma.size() + 5 == static_cast<std::size_t>(e), ErrorCode::dimension_mismatch, "gamma must have E-5 entries");
  for (double g : gamma) require(g > 0.0, ErrorCode::nonpositive_gamma, "gamma entries must be positive");
  const std::size_t n = gamma.size();
  std::vector<double> a(n);
  // a_{E-3-j+1} sits at ascending index n - j (j one-based).
  for (std::size_t j = 1; j <= n; ++j) a[n - j] = j == 1 ? gamma[0] : gamma[j - 1] / gamma[j - 2];
  return a;
}

/// Free subdiagonal entries a_3 .. a_{E-3} -> gamma.
inline std::vector<double> subdiagonal_to_gamma(std::span<const double> a, int e) {
  require(a.size() + 5 == static_cast<std::size_t>(e), ErrorCode::dimension_mismatch, "need E-5 subdiagonal entries");
  for (double v : a) require(v > 0.0, ErrorCode::nonpositive_gamma, "subdiagonal entries must be positive");
  const std::size_t n = a.size();
  std::vector<double> gamma(n);
  double prod = 1.0;
  for (std::size_t j = 1; j <= n; ++j) {
    prod *= a[n - j];
    gamma[j - 1] = prod;
  }
  return gamma;
}

/// All coefficients of 1 + z·bᵀ(I - zA)⁻¹·1 via the stage recurrence
/// w_i = 1 + z Σ_{j<i} a_ij w_j carried as coefficient sequences.
inline std::vector<double> stability_coefficients(const ButcherTableau& t) {
  const std::size_t s = t.stages();
  std::vector<std::vector<double>> w(s, std::vector<double>(s + 1, 0.0));
  for (std::size_t i = 0; i < s; ++i) {
    w[i][0] = 1.0;
    for (std::size_t j = 0; j < i; ++j) {
      const double aij = t.a(i, j);
      if (aij == 0.0) continue;
      for (std::size_t k = 0; k + 1 <= s; ++k)
        if (w[j][k] != 0.0) w[i][k + 1] += aij * w[j][k];
    }
  }
  std::vector<double> p(s + 1, 0.0);
  p[0] = 1.0;
  for (std::size_t i = 0; i < s; ++i) {
    if (t.b[i] == 0.0) continue;
    for (std::size_t k = 0; k < s; ++k) p[k + 1] += t.b[i] * w[i][k];
  }
  return p;
}

/// Stability polynomial of an explicit tableau with its leading 1/j! block
/// verified (to 1e-12) and stripped. Degree is the tableau's evals_e when
/// set; coefficients above it must vanish.
inline MonomialPolynomial polynomial_from_tableau(const ButcherTableau& t) {
  const auto all = stability_coefficients(t);
  const int p = t.order_p;
  const int e = t.evals_e > 0 ? t.evals_e : static_cast<int>(t.stages());
  require(p >= 1 && p <= 4 && e >= p, ErrorCode::invalid_argument, "tableau order/evals out of range");
  for (int j = 0; j <= p; ++j) {
    const double dev = std::abs(all[static_cast<std::size_t>(j)] - 1.0 / factorial(j));
    if (dev > 1e-12)
      fail(ErrorCode::order_condition, "coefficient of z^" + std::to_string(j) + " deviates from 1/j! by " + text::format(dev));
  }
  for (std::size_t j = static_cast<std::size_t>(e) + 1; j < all.size(); ++j)
    require(all[j] == 0.0, ErrorCode::order_condition, "stability polynomial exceeds the declared degree");
  std::vector<double> alpha(all.begin() + p + 1, all.begin() + e + 1);
  return MonomialPolynomial(p, e, std::move(alpha));
}

/// Q(z) = z·bᵀ(I - zA)⁻¹ by back substitution on (I - zA)ᵀ y = b.
inline ComplexList internal_stability_row(const ButcherTableau& t, Complex z) {
  const std::size_t s = t.stages();
  ComplexList y(s);
  for (std::size_t j = s; j-- > 0;) {
    Complex acc = t.b[j];
    for (std::size_t i = j + 1; i < s; ++i) {
      const double aij = t.a(i, j);
      if (aij != 0.0) acc += z * aij * y[i];
    }
    y[j] = acc;
  }
  for (auto& v : y) v *= z;
  return y;
}

/// Maximum over the scaled spectrum of Σ_{i>=2} |Q_i(z)|.
inline double amplification_factor(const ButcherTableau& t, const Spectrum& s, double dt) {
  double best = 0.0;
  for (const Complex& z : scale(s, dt)) {
    const auto q = internal_stability_row(t, z);
    double sum = 0.0;
    for (std::size_t i = 1; i < q.size(); ++i) sum += std::abs(q[i]);
    best = std::max(best, sum);
  }
  return best;
}

}  // namespace perk
