#pragma once

// Construction and verification of P-ERK Butcher tableaus and families.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "perk/stabpoly.hpp"
#include "perk/tableau.hpp"

namespace perk {

struct OrderResidual {
  std::string condition;  // e.g. "b^T A c"
  int r1 = -1;            // member indices (-1 when not member-dependent)
  int r2 = -1;
  double value = 0.0;
  double target = 0.0;
  double residual() const { return std::abs(value - target); }
};

struct OrderReport {
  std::vector<OrderResidual> entries;

  double max_residual() const {
    double m = 0.0;
    for (const auto& e : entries) m = std::max(m, e.residual());
    return m;
  }

  const OrderResidual* find(std::string_view condition, int r1 = -1, int r2 = -1) const {
    for (const auto& e : entries)
      if (e.condition == condition && e.r1 == r1 && e.r2 == r2) return &e;
    return nullptr;
  }
};

namespace detail {

inline std::vector<double> apply_a(const ButcherTableau& t, std::span<const double> v) {
  const std::size_t s = t.stages();
  std::vector<double> out(s, 0.0);
  for (std::size_t i = 0; i < s; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < i; ++j) acc += t.a(i, j) * v[j];
    out[i] = acc;
  }
  return out;
}

/// Compensated dot product (error-free products and sums): residuals of exact
/// textbook tableaus come out at zero instead of one ulp.
inline double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0, comp = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double p = x[i] * y[i];
    const double perr = std::fma(x[i], y[i], -p);
    const double t = s + p;
    const double z = t - s;
    comp += (s - (t - z)) + (p - z) + perr;
    s = t;
  }
  return s + comp;
}

inline std::vector<double> hadamard(std::span<const double> x, std::span<const double> y) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * y[i];
  return out;
}

inline OrderReport order_conditions(const std::vector<ButcherTableau>& members, int p) {
  require(!members.empty(), ErrorCode::invalid_argument, "no tableau to check");
  require(p >= 1 && p <= 4, ErrorCode::invalid_argument, "order must lie in 1..4");
  const auto& c = members.front().c;
  const auto& b = members.front().b;
  const std::vector<double> ones(c.size(), 1.0);
  const auto c2 = hadamard(c, c);
  const auto c3 = hadamard(c2, c);
  OrderReport rep;
  rep.entries.push_back({"b^T 1", -1, -1, dot(b, ones), 1.0});
  if (p >= 2) rep.entries.push_back({"b^T c", -1, -1, dot(b, c), 0.5});
  if (p >= 3) {
    rep.entries.push_back({"b^T c^2", -1, -1, dot(b, c2), 1.0 / 3.0});
    for (std::size_t r = 0; r < members.size(); ++r)
      rep.entries.push_back({"b^T A c", int(r), int(r), dot(b, apply_a(members[r], c)), 1.0 / 6.0});
  }
  if (p >= 4) {
    rep.entries.push_back({"b^T c^3", -1, -1, dot(b, c3), 0.25});
    for (std::size_t r = 0; r < members.size(); ++r) {
      const auto ac = apply_a(members[r], c);
      rep.entries.push_back({"b^T C A c", int(r), int(r), dot(b, hadamard(c, ac)), 1.0 / 8.0});
      rep.entries.push_back({"b^T A c^2", int(r), int(r), dot(b, apply_a(members[r], c2)), 1.0 / 12.0});
    }
    for (std::size_t r1 = 0; r1 < members.size(); ++r1)
      for (std::size_t r2 = 0; r2 < members.size(); ++r2) {
        const auto aac = apply_a(members[r1], apply_a(members[r2], c));
        rep.entries.push_back({"b^T A A c", int(r1), int(r2), dot(b, aac), 1.0 / 24.0});
      }
  }
  return rep;
}

inline std::vector<ButcherTableau> family_members(const PerkFamily& f) {
  std::vector<ButcherTableau> out;
  for (std::size_t r = 0; r < f.levels(); ++r) out.push_back(f.member_tableau(r));
  return out;
}

}  // namespace detail

/// Residuals of the classical (and, for families, coupling) order conditions
/// up to order p, evaluated in general vector form.
inline OrderReport check_order_conditions(const ButcherTableau& t, int p) {
  t.validate();
  return detail::order_conditions({t}, p);
}

inline OrderReport check_order_conditions(const PerkFamily& f, int p) {
  f.validate();
  return detail::order_conditions(detail::family_members(f), p);
}

/// max_i |Σ_j a_ij - c_i|.
inline double check_internal_consistency(const ButcherTableau& t) {
  double worst = 0.0;
  for (std::size_t i = 0; i < t.stages(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < i; ++j) row += t.a(i, j);
    worst = std::max(worst, std::abs(row - t.c[i]));
  }
  return worst;
}

inline std::vector<double> check_internal_consistency(const PerkFamily& f) {
  std::vector<double> out;
  for (std::size_t r = 0; r < f.levels(); ++r) out.push_back(check_internal_consistency(f.member_tableau(r)));
  return out;
}

namespace detail {

inline void require_coefficients_match(std::span<const double> got, std::span<const double> want, const std::string& what) {
  require(got.size() == want.size(), ErrorCode::oracle_mismatch, what + ": degree mismatch");
  for (std::size_t j = 0; j < got.size(); ++j) {
    const double scale = std::max(std::abs(got[j]), std::abs(want[j]));
    if (std::abs(got[j] - want[j]) > 1e-12 * scale)
      fail(ErrorCode::oracle_mismatch, what + ": coefficient of z^" + std::to_string(j) + " is " + text::format(got[j]) +
                                           ", expected " + text::format(want[j]));
  }
}

inline void require_order(const OrderReport& rep, double tol) {
  for (const auto& e : rep.entries)
    if (e.residual() > tol) {
      const bool coupling = e.condition == "b^T A A c" && e.r1 != e.r2;
      fail(coupling ? ErrorCode::coupling_condition : ErrorCode::order_condition,
           e.condition + " residual " + text::format(e.residual()));
    }
}

}  // namespace detail

/// Standalone fourth-order P-ERK tableau with S = E stages. The free
/// subdiagonal entries a_3..a_{E-3} come from gamma. The construction is
/// checked against the gamma-form polynomial and the order conditions.
inline ButcherTableau build_p4_tableau(int e, std::span<const double> gamma, Abscissae kind = Abscissae::constant) {
  require(e >= 5, ErrorCode::invalid_argument, "fourth-order P-ERK needs E >= 5");
  const auto free = gamma_to_subdiagonal(gamma, e);
  const std::size_t s = static_cast<std::size_t>(e);

  ButcherTableau t;
  t.order_p = 4;
  t.evals_e = e;
  t.c = p4_abscissae(e, kind);
  t.b.assign(s, 0.0);
  t.b[s - 2] = p4::b_last_two;
  t.b[s - 1] = p4::b_last_two;
  t.subdiagonal.assign(s, 0.0);
  for (std::size_t k = 0; k < free.size(); ++k) t.subdiagonal[2 + k] = free[k];
  t.subdiagonal[s - 3] = p4::a_s_minus_2_numerator / t.c[s - 4];
  t.subdiagonal[s - 2] = p4::a_s_minus_1;
  t.subdiagonal[s - 1] = p4::a_s;
  t.first_column.assign(s, 0.0);
  for (std::size_t i = 1; i < s; ++i) t.first_column[i] = t.c[i] - t.subdiagonal[i];

  ConstrainedParams cp{e, std::vector<double>(gamma.begin(), gamma.end()), t.c};
  detail::require_coefficients_match(stability_coefficients(t), constrained_coefficients(cp),
                                     "tableau polynomial vs gamma form (E=" + std::to_string(e) + ")");
  detail::require_order(check_order_conditions(t, 4), 1e-12);
  return t;
}

/// Embeds standalone tableaus into a family with S = max E: member stage j
/// (j >= 2) maps to family stage S - E_r + j; inactive stages carry
/// a_{i,1} = c_i only.
inline PerkFamily embed_family(std::vector<ButcherTableau> members) {
  require(!members.empty(), ErrorCode::invalid_argument, "family needs at least one member");
  std::sort(members.begin(), members.end(), [](const auto& x, const auto& y) { return x.evals_e < y.evals_e; });
  const auto& top = members.back();
  const std::size_t s = top.stages();
  PerkFamily f;
  f.c = top.c;
  f.b = top.b;
  f.order_p = top.order_p;
  for (const auto& m : members) {
    require(!m.dense, ErrorCode::invalid_argument, "dense tableaus cannot be embedded into a family");
    require(m.order_p == f.order_p, ErrorCode::invalid_argument, "members disagree on order");
    const std::size_t e = m.stages();
    const std::size_t shift = s - e;
    PerkFamily::Member mem;
    mem.evals_e = m.evals_e;
    mem.first_column = f.c;
    mem.first_column[0] = 0.0;
    mem.subdiagonal.assign(s, 0.0);
    for (std::size_t j = 1; j < e; ++j) {
      if (m.c[j] != f.c[shift + j])
        fail(ErrorCode::internal_consistency, "member abscissae do not match the family at stage " + std::to_string(shift + j + 1));
      mem.first_column[shift + j] = m.first_column[j];
      mem.subdiagonal[shift + j] = m.subdiagonal[j];
    }
    for (std::size_t j = 0; j < e; ++j)
      require(m.b[j] == f.b[shift + j], ErrorCode::invalid_argument, "members must share the weight vector");
    f.members.push_back(std::move(mem));
  }
  f.validate();
  return f;
}

/// Fourth-order family; `gammas[r]` belongs to `evals[r]`. Members are
/// reordered by ascending E. Coupling conditions are verified to 1e-12.
inline PerkFamily build_p4_family(std::span<const int> evals, const std::vector<std::vector<double>>& gammas) {
  require(!evals.empty() && evals.size() == gammas.size(), ErrorCode::dimension_mismatch, "one gamma vector per member required");
  std::vector<int> sorted(evals.begin(), evals.end());
  std::sort(sorted.begin(), sorted.end());
  require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(), ErrorCode::invalid_argument, "member evals must be distinct");
  std::vector<ButcherTableau> members;
  for (std::size_t r = 0; r < evals.size(); ++r) members.push_back(build_p4_tableau(evals[r], gammas[r]));
  PerkFamily f = embed_family(std::move(members));
  detail::require_order(check_order_conditions(f, 4), 1e-12);
  return f;
}

inline std::vector<double> p2_abscissae(std::size_t s) {
  require(s >= 2, ErrorCode::invalid_argument, "second-order P-ERK needs S >= 2");
  std::vector<double> c(s);
  for (std::size_t i = 0; i < s; ++i) c[i] = static_cast<double>(i) / (2.0 * static_cast<double>(s - 1));
  return c;
}

/// Second-order P-ERK scheme with S stages realizing the degree-E
/// polynomial `poly` (b = e_S, c_i = (i-1)/(2(S-1))). The subdiagonal is
/// recovered top-down from ratios of consecutive monomial coefficients:
/// a_{S-k} = (α_{k+3}/α_{k+2})·c_{S-k}/c_{S-k-1}, k = 0..E-3.
inline ButcherTableau build_p2_tableau(int e, int s, const MonomialPolynomial& poly) {
  require(poly.order_p == 2, ErrorCode::invalid_argument, "polynomial must have linear order 2");
  require(poly.degree_e == e, ErrorCode::invalid_argument, "polynomial degree must equal E");
  require(e >= 2 && e <= s, ErrorCode::invalid_argument, "need 2 <= E <= S");
  const std::size_t n = static_cast<std::size_t>(s);
  ButcherTableau t;
  t.order_p = 2;
  t.evals_e = e;
  t.c = p2_abscissae(n);
  t.b.assign(n, 0.0);
  t.b[n - 1] = 1.0;
  t.subdiagonal.assign(n, 0.0);
  const auto alpha = poly.coefficients();
  for (int k = 0; k <= e - 3; ++k) {
    const double denom = alpha[static_cast<std::size_t>(k + 2)];
    if (denom == 0.0)
      fail(ErrorCode::zero_division, "monomial coefficient of z^" + std::to_string(k + 2) + " vanishes");
    const std::size_t stage = n - 1 - static_cast<std::size_t>(k);  // zero-based index of stage S-k
    t.subdiagonal[stage] = alpha[static_cast<std::size_t>(k + 3)] / denom * t.c[stage] / t.c[stage - 1];
  }
  t.first_column.assign(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) t.first_column[i] = t.c[i] - t.subdiagonal[i];

  const auto got = polynomial_from_tableau(t);
  detail::require_coefficients_match(got.coefficients(), alpha, "second-order recovery round trip (E=" + std::to_string(e) + ")");
  return t;
}

inline PerkFamily build_p2_family(std::span<const int> evals, const std::vector<MonomialPolynomial>& polys) {
  require(!evals.empty() && evals.size() == polys.size(), ErrorCode::dimension_mismatch, "one polynomial per member required");
  std::vector<int> sorted(evals.begin(), evals.end());
  std::sort(sorted.begin(), sorted.end());
  require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(), ErrorCode::invalid_argument, "member evals must be distinct");
  const int s = sorted.back();
  std::vector<ButcherTableau> members;
  // built directly with S = max E, so no re-indexing is needed
  for (std::size_t r = 0; r < evals.size(); ++r) members.push_back(build_p2_tableau(evals[r], s, polys[r]));
  std::sort(members.begin(), members.end(), [](const auto& x, const auto& y) { return x.evals_e < y.evals_e; });
  PerkFamily f;
  f.c = members.front().c;
  f.b = members.front().b;
  f.order_p = 2;
  for (auto& t : members) f.members.push_back({t.evals_e, std::move(t.first_column), std::move(t.subdiagonal)});
  f.validate();
  detail::require_order(check_order_conditions(f, 2), 1e-12);
  return f;
}

/// Single-member family wrapping a standalone sparse tableau.
inline PerkFamily single_member_family(const ButcherTableau& t) {
  require(!t.dense, ErrorCode::invalid_argument, "dense tableaus cannot form a family");
  PerkFamily f;
  f.c = t.c;
  f.b = t.b;
  f.order_p = t.order_p;
  f.members.push_back({t.evals_e > 0 ? t.evals_e : int(t.stages()), t.first_column, t.subdiagonal});
  f.validate();
  return f;
}

inline ButcherTableau classical_rk4() {
  ButcherTableau t;
  t.c = {0.0, 0.5, 0.5, 1.0};
  t.b = {1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0};
  DenseMatrix a(4, 4);
  a(1, 0) = 0.5;
  a(2, 1) = 0.5;
  a(3, 2) = 1.0;
  t.dense = a;
  t.order_p = 4;
  t.evals_e = 4;
  return t;
}

inline ButcherTableau forward_euler() {
  ButcherTableau t;
  t.c = {0.0};
  t.b = {1.0};
  t.first_column = {0.0};
  t.subdiagonal = {0.0};
  t.order_p = 1;
  t.evals_e = 1;
  return t;
}

inline ButcherTableau explicit_midpoint() {
  ButcherTableau t;
  t.c = {0.0, 0.5};
  t.b = {0.0, 1.0};
  t.first_column = {0.0, 0.5};
  t.subdiagonal = {0.0, 0.0};
  t.order_p = 2;
  t.evals_e = 2;
  return t;
}

inline std::string serialize_tableau(const ButcherTableau& t) {
  std::string out = "# explicit Runge-Kutta tableau\nkind = tableau\n";
  out += "stages = " + std::to_string(t.stages()) + "\n";
  out += "order = " + std::to_string(t.order_p) + "\n";
  out += "evals = " + std::to_string(t.evals_e) + "\n";
  out += "c = " + text::join(t.c) + "\n";
  out += "b = " + text::join(t.b) + "\n";
  if (t.dense) {
    out += "[dense]\n";
    for (std::size_t i = 0; i < t.stages(); ++i) {
      const auto r = t.dense->row(i);
      out += text::join(std::vector<double>(r.begin(), r.end())) + "\n";
    }
  } else {
    out += "first_column = " + text::join(t.first_column) + "\n";
    out += "subdiagonal = " + text::join(t.subdiagonal) + "\n";
  }
  return out;
}

inline std::string serialize_family(const PerkFamily& f) {
  std::string out = "# P-ERK family\nkind = family\n";
  out += "stages = " + std::to_string(f.stages()) + "\n";
  out += "order = " + std::to_string(f.order_p) + "\n";
  out += "levels = " + std::to_string(f.levels()) + "\n";
  out += "c = " + text::join(f.c) + "\n";
  out += "b = " + text::join(f.b) + "\n";
  for (const auto& m : f.members) {
    out += "[member]\n";
    out += "evals = " + std::to_string(m.evals_e) + "\n";
    out += "first_column = " + text::join(m.first_column) + "\n";
    out += "subdiagonal = " + text::join(m.subdiagonal) + "\n";
  }
  return out;
}

namespace detail {

inline int parse_int(const std::string& s, const std::string& key) {
  const double v = text::parse_double(s, key);
  require(v == std::floor(v) && v >= 0 && v < 1e6, ErrorCode::parse, key + " must be a non-negative integer");
  return static_cast<int>(v);
}

inline std::vector<double> parse_sized(const text::Section& sec, const std::string& key, std::size_t n) {
  auto v = text::parse_list(sec.get(key), key);
  require(v.size() == n, ErrorCode::parse, key + ": expected " + std::to_string(n) + " values, got " + std::to_string(v.size()));
  return v;
}

inline void require_consistent_rows(const ButcherTableau& t) {
  const double dev = check_internal_consistency(t);
  if (dev > 1e-13) fail(ErrorCode::internal_consistency, "row sums deviate from c by " + text::format(dev));
}

}  // namespace detail

inline ButcherTableau parse_tableau(const std::string& content) {
  const auto doc = text::parse_document(content);
  const auto& head = doc.front();
  require(head.get("kind") == "tableau", ErrorCode::parse, "document kind is not 'tableau'");
  ButcherTableau t;
  const auto s = static_cast<std::size_t>(detail::parse_int(head.get("stages"), "stages"));
  require(s >= 1, ErrorCode::parse, "stages must be positive");
  t.order_p = detail::parse_int(head.get("order"), "order");
  t.evals_e = detail::parse_int(head.get("evals"), "evals");
  t.c = detail::parse_sized(head, "c", s);
  t.b = detail::parse_sized(head, "b", s);
  const text::Section* dense = nullptr;
  for (const auto& sec : doc)
    if (sec.name == "dense") dense = &sec;
  if (dense) {
    require(dense->raw_lines.size() == s, ErrorCode::parse, "dense block needs one row per stage");
    std::vector<double> entries;
    for (std::size_t i = 0; i < s; ++i) {
      auto row = text::parse_list(dense->raw_lines[i], "dense row line " + std::to_string(dense->raw_line_numbers[i]));
      require(row.size() == s, ErrorCode::parse, "dense row " + std::to_string(i + 1) + " has wrong length");
      entries.insert(entries.end(), row.begin(), row.end());
    }
    t.dense = DenseMatrix(s, s, std::move(entries));
  } else {
    t.first_column = detail::parse_sized(head, "first_column", s);
    t.subdiagonal = detail::parse_sized(head, "subdiagonal", s);
  }
  t.validate();
  detail::require_consistent_rows(t);
  return t;
}

inline PerkFamily parse_family(const std::string& content) {
  const auto doc = text::parse_document(content);
  const auto& head = doc.front();
  const std::string& kind = head.get("kind");
  if (kind == "tableau") return single_member_family(parse_tableau(content));
  require(kind == "family", ErrorCode::parse, "document kind must be 'family' or 'tableau'");
  PerkFamily f;
  const auto s = static_cast<std::size_t>(detail::parse_int(head.get("stages"), "stages"));
  require(s >= 1, ErrorCode::parse, "stages must be positive");
  f.order_p = detail::parse_int(head.get("order"), "order");
  const auto levels = static_cast<std::size_t>(detail::parse_int(head.get("levels"), "levels"));
  f.c = detail::parse_sized(head, "c", s);
  f.b = detail::parse_sized(head, "b", s);
  for (std::size_t k = 1; k < doc.size(); ++k) {
    const auto& sec = doc[k];
    require(sec.name == "member", ErrorCode::parse, "unexpected section [" + sec.name + "]");
    PerkFamily::Member m;
    m.evals_e = detail::parse_int(sec.get("evals"), "evals");
    m.first_column = detail::parse_sized(sec, "first_column", s);
    m.subdiagonal = detail::parse_sized(sec, "subdiagonal", s);
    f.members.push_back(std::move(m));
  }
  require(f.members.size() == levels, ErrorCode::parse, "member count differs from 'levels'");
  f.validate();
  for (std::size_t r = 0; r < f.levels(); ++r) detail::require_consistent_rows(f.member_tableau(r));
  return f;
}

inline void serialize_tableau(const ButcherTableau& t, const std::string& path) { text::write_file(path, serialize_tableau(t)); }
inline ButcherTableau deserialize_tableau(const std::string& path) { return parse_tableau(text::read_file(path)); }
inline void serialize_family(const PerkFamily& f, const std::string& path) { text::write_file(path, serialize_family(f)); }
inline PerkFamily deserialize_family(const std::string& path) { return parse_family(text::read_file(path)); }

}  // namespace perk
