#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "perk/linalg.hpp"

namespace perk {

/// Explicit Runge-Kutta scheme (c, b, A). P-ERK schemes only populate the
/// first column and the subdiagonal of A; reference schemes loaded from file
/// may instead carry a full strictly-lower-triangular A.
///
/// Stage indices are zero-based in code: stage i has first-column entry
/// a(i, 0) and subdiagonal entry a(i, i-1). For stage 1 both name the same
/// slot; it is held in first_column and subdiagonal[1] is always 0.
struct ButcherTableau {
  std::vector<double> c;
  std::vector<double> b;
  std::vector<double> first_column;
  std::vector<double> subdiagonal;
  std::optional<DenseMatrix> dense;  // overrides the sparse storage when set
  int order_p = 0;
  int evals_e = 0;

  std::size_t stages() const noexcept { return c.size(); }

  double a(std::size_t i, std::size_t j) const {
    if (dense) return (*dense)(i, j);
    if (j >= i) return 0.0;
    if (j == 0) return first_column[i];
    if (j + 1 == i) return subdiagonal[i];
    return 0.0;
  }

  DenseMatrix a_matrix() const {
    const std::size_t s = stages();
    DenseMatrix m(s, s);
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t j = 0; j < i; ++j) m(i, j) = a(i, j);
    return m;
  }

  /// Structural validation (sizes, finiteness, explicitness, c_1 = 0).
  void validate() const {
    const std::size_t s = stages();
    require(s >= 1, ErrorCode::invalid_argument, "tableau needs at least one stage");
    require(b.size() == s, ErrorCode::dimension_mismatch, "b length differs from stage count");
    if (!dense) {
      require(first_column.size() == s && subdiagonal.size() == s, ErrorCode::dimension_mismatch,
              "first_column/subdiagonal length differs from stage count");
      require(first_column[0] == 0.0 && subdiagonal[0] == 0.0, ErrorCode::invalid_argument,
              "stage 1 must have no coefficients");
      if (s >= 2) require(subdiagonal[1] == 0.0, ErrorCode::invalid_argument, "stage 2 stores its entry in the first column");
    } else {
      require(dense->rows() == s && dense->cols() == s, ErrorCode::dimension_mismatch, "dense A shape mismatch");
      for (std::size_t i = 0; i < s; ++i)
        for (std::size_t j = i; j < s; ++j)
          require((*dense)(i, j) == 0.0, ErrorCode::invalid_argument, "A must be strictly lower triangular");
    }
    require(c[0] == 0.0, ErrorCode::invalid_argument, "c_1 must be zero");
    for (double v : c) require(std::isfinite(v), ErrorCode::non_finite, "non-finite abscissa");
    for (double v : b) require(std::isfinite(v), ErrorCode::non_finite, "non-finite weight");
    for (double v : first_column) require(std::isfinite(v), ErrorCode::non_finite, "non-finite coefficient");
    for (double v : subdiagonal) require(std::isfinite(v), ErrorCode::non_finite, "non-finite coefficient");
  }
};

/// Level-indexed P-ERK family: members share c, b and the final stages and
/// differ only in how many intermediate stages they activate. Members are
/// ordered by strictly increasing evals_e; member r is the scheme for level r.
struct PerkFamily {
  struct Member {
    int evals_e = 0;
    std::vector<double> first_column;  // length S, family stage indexing
    std::vector<double> subdiagonal;   // length S, zero outside the active window
  };

  std::vector<double> c;
  std::vector<double> b;
  std::vector<Member> members;
  int order_p = 0;

  std::size_t stages() const noexcept { return c.size(); }
  std::size_t levels() const noexcept { return members.size(); }

  /// First zero-based stage (besides stage 0) at which member r evaluates.
  std::size_t first_active_stage(std::size_t r) const noexcept {
    return stages() - static_cast<std::size_t>(members[r].evals_e) + 1;
  }

  bool active(std::size_t r, std::size_t stage) const noexcept {
    return stage == 0 || stage >= first_active_stage(r);
  }

  /// Member r as a full S-stage tableau (inactive stages carry a_{i,1} = c_i).
  ButcherTableau member_tableau(std::size_t r) const {
    ButcherTableau t;
    t.c = c;
    t.b = b;
    t.first_column = members[r].first_column;
    t.subdiagonal = members[r].subdiagonal;
    t.order_p = order_p;
    t.evals_e = members[r].evals_e;
    return t;
  }

  void validate() const {
    const std::size_t s = stages();
    require(s >= 1 && b.size() == s, ErrorCode::dimension_mismatch, "family c/b length mismatch");
    require(!members.empty(), ErrorCode::invalid_argument, "family has no members");
    for (std::size_t r = 0; r < members.size(); ++r) {
      const auto& m = members[r];
      require(m.first_column.size() == s && m.subdiagonal.size() == s, ErrorCode::dimension_mismatch,
              "member coefficient length differs from family stage count");
      require(m.evals_e >= 1 && static_cast<std::size_t>(m.evals_e) <= s, ErrorCode::invalid_argument,
              "member evals out of range");
      if (r > 0)
        require(m.evals_e > members[r - 1].evals_e, ErrorCode::invalid_argument,
                "member evals must be strictly increasing");
      member_tableau(r).validate();
      for (std::size_t i = 1; i < s; ++i)
        if (!active(r, i) || i == first_active_stage(r))
          require(m.subdiagonal[i] == 0.0, ErrorCode::invalid_argument,
                  "member " + std::to_string(r) + " has a subdiagonal entry outside its active window");
    }
  }
};

}  // namespace perk
