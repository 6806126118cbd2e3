#pragma once

// Dense real linear algebra: LU solves with partial pivoting and a
// balanced Hessenberg / Francis double-shift QR eigenvalue solver.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "perk/error.hpp"

namespace perk {

using Complex = std::complex<double>;
using ComplexList = std::vector<Complex>;

/// Row-major dense matrix of finite reals.
class DenseMatrix {
 public:
  DenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {
    require(rows >= 1 && cols >= 1, ErrorCode::invalid_argument, "matrix dimensions must be positive");
  }

  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
      : rows_(rows), cols_(cols), data_(std::move(entries)) {
    require(rows >= 1 && cols >= 1, ErrorCode::invalid_argument, "matrix dimensions must be positive");
    require(data_.size() == rows * cols, ErrorCode::dimension_mismatch,
            "entry count " + std::to_string(data_.size()) + " != rows*cols");
    for (double v : data_) require(std::isfinite(v), ErrorCode::non_finite, "matrix entry is not finite");
  }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static DenseMatrix diagonal(std::span<const double> d) {
    DenseMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  static DenseMatrix column(std::span<const double> v) {
    return DenseMatrix(v.size(), 1, std::vector<double>(v.begin(), v.end()));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

  std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  const std::vector<double>& entries() const noexcept { return data_; }

  std::vector<double> column_vector(std::size_t j) const {
    std::vector<double> out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
    return out;
  }

  double norm_inf() const noexcept {
    double best = 0.0;
    for (std::size_t i = 0; i < rows_; ++i) {
      double s = 0.0;
      for (double v : row(i)) s += std::abs(v);
      best = std::max(best, s);
    }
    return best;
  }

  double norm_frobenius() const noexcept {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
  }

  double trace() const noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) s += (*this)(i, i);
    return s;
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

inline DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.cols() == b.rows(), ErrorCode::dimension_mismatch, "matrix product shape mismatch");
  DenseMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

inline std::vector<double> multiply(const DenseMatrix& a, std::span<const double> x) {
  require(a.cols() == x.size(), ErrorCode::dimension_mismatch, "matrix-vector shape mismatch");
  std::vector<double> y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    const auto r = a.row(i);
    for (std::size_t j = 0; j < x.size(); ++j) s += r[j] * x[j];
    y[i] = s;
  }
  return y;
}

/// Solves a·x = rhs for every column of rhs (LU with partial pivoting).
/// Throws singular_matrix when a pivot falls below 1e-14·‖a‖∞.
inline DenseMatrix solve_linear(const DenseMatrix& a, const DenseMatrix& rhs) {
  require(a.square(), ErrorCode::dimension_mismatch, "solve_linear needs a square matrix");
  require(rhs.rows() == a.rows(), ErrorCode::dimension_mismatch, "rhs row count differs from matrix size");
  const std::size_t n = a.rows();
  const std::size_t m = rhs.cols();
  const double tiny = 1e-14 * a.norm_inf();
  DenseMatrix lu = a;
  DenseMatrix x = rhs;

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(lu(i, k)) > std::abs(lu(piv, k))) piv = i;
    if (!(std::abs(lu(piv, k)) >= tiny) || lu(piv, k) == 0.0)
      fail(ErrorCode::singular_matrix, "pivot " + std::to_string(k) + " below threshold");
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu(k, j), lu(piv, j));
      for (std::size_t j = 0; j < m; ++j) std::swap(x(k, j), x(piv, j));
    }
    const double inv = 1.0 / lu(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = lu(i, k) * inv;
      if (f == 0.0) continue;
      lu(i, k) = f;
      for (std::size_t j = k + 1; j < n; ++j) lu(i, j) -= f * lu(k, j);
      for (std::size_t j = 0; j < m; ++j) x(i, j) -= f * x(k, j);
    }
  }
  for (std::size_t jj = 0; jj < m; ++jj) {
    for (std::size_t ii = n; ii-- > 0;) {
      double s = x(ii, jj);
      for (std::size_t j = ii + 1; j < n; ++j) s -= lu(ii, j) * x(j, jj);
      x(ii, jj) = s / lu(ii, ii);
    }
  }
  return x;
}

namespace detail {

// Parlett-Reinsch balancing with radix-2 scale factors (exact similarity).
inline void balance(DenseMatrix& a) {
  const std::size_t n = a.rows();
  constexpr double radix = 2.0;
  constexpr double sqrdx = radix * radix;
  bool done = false;
  while (!done) {
    done = true;
    for (std::size_t i = 0; i < n; ++i) {
      double r = 0.0, c = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) {
          c += std::abs(a(j, i));
          r += std::abs(a(i, j));
        }
      if (c == 0.0 || r == 0.0) continue;
      double g = r / radix;
      double f = 1.0;
      const double s = c + r;
      while (c < g) {
        f *= radix;
        c *= sqrdx;
      }
      g = r * radix;
      while (c > g) {
        f /= radix;
        c /= sqrdx;
      }
      if ((c + r) / f < 0.95 * s) {
        done = false;
        const double inv = 1.0 / f;
        for (std::size_t j = 0; j < n; ++j) a(i, j) *= inv;
        for (std::size_t j = 0; j < n; ++j) a(j, i) *= f;
      }
    }
  }
}

// Householder reduction to upper Hessenberg form (orthogonal similarity).
inline void hessenberg(DenseMatrix& a) {
  const std::size_t n = a.rows();
  if (n < 3) return;
  std::vector<double> v(n);
  for (std::size_t k = 0; k + 2 < n; ++k) {
    double alpha = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) alpha += a(i, k) * a(i, k);
    alpha = std::sqrt(alpha);
    if (alpha == 0.0) continue;
    if (a(k + 1, k) > 0.0) alpha = -alpha;
    for (std::size_t i = 0; i < n; ++i) v[i] = 0.0;
    v[k + 1] = a(k + 1, k) - alpha;
    for (std::size_t i = k + 2; i < n; ++i) v[i] = a(i, k);
    double vnorm2 = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) vnorm2 += v[i] * v[i];
    if (vnorm2 == 0.0) continue;
    const double beta = 2.0 / vnorm2;
    // left: A <- (I - beta v vᵀ) A
    for (std::size_t j = k; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = k + 1; i < n; ++i) s += v[i] * a(i, j);
      s *= beta;
      for (std::size_t i = k + 1; i < n; ++i) a(i, j) -= s * v[i];
    }
    // right: A <- A (I - beta v vᵀ)
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = k + 1; j < n; ++j) s += a(i, j) * v[j];
      s *= beta;
      for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= s * v[j];
    }
    for (std::size_t i = k + 2; i < n; ++i) a(i, k) = 0.0;
  }
}

inline double sign(double magnitude, double s) { return s >= 0.0 ? std::abs(magnitude) : -std::abs(magnitude); }

// Francis double-shift QR on an upper Hessenberg matrix (destroys a).
inline ComplexList hessenberg_qr(DenseMatrix& a) {
  const int n = static_cast<int>(a.rows());
  ComplexList w(static_cast<std::size_t>(n));
  constexpr double deflation = 1e-14;
  const long max_sweeps = 100L * n;
  long sweeps = 0;

  double anorm = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = std::max(i - 1, 0); j < n; ++j) anorm += std::abs(a(i, j));

  int nn = n - 1;
  double t = 0.0;
  int its = 0;
  while (nn >= 0) {
    int l = nn;
    for (; l > 0; --l) {
      double s = std::abs(a(l - 1, l - 1)) + std::abs(a(l, l));
      if (s == 0.0) s = anorm;
      if (std::abs(a(l, l - 1)) <= deflation * s) {
        a(l, l - 1) = 0.0;
        break;
      }
    }
    double x = a(nn, nn);
    if (l == nn) {
      w[static_cast<std::size_t>(nn)] = x + t;
      --nn;
      its = 0;
      continue;
    }
    double y = a(nn - 1, nn - 1);
    double ww = a(nn, nn - 1) * a(nn - 1, nn);
    if (l == nn - 1) {
      const double p = 0.5 * (y - x);
      const double q = p * p + ww;
      double z = std::sqrt(std::abs(q));
      x += t;
      if (q >= 0.0) {
        z = p + sign(z, p);
        w[static_cast<std::size_t>(nn - 1)] = w[static_cast<std::size_t>(nn)] = x + z;
        if (z != 0.0) w[static_cast<std::size_t>(nn)] = x - ww / z;
      } else {
        w[static_cast<std::size_t>(nn)] = Complex(x + p, -z);
        w[static_cast<std::size_t>(nn - 1)] = Complex(x + p, z);
      }
      nn -= 2;
      its = 0;
      continue;
    }

    if (++sweeps > max_sweeps) fail(ErrorCode::no_convergence, "QR iteration exceeded 100*n sweeps");
    if (its == 10 || its == 20) {
      // exceptional shift
      t += x;
      for (int i = 0; i <= nn; ++i) a(i, i) -= x;
      const double s = std::abs(a(nn, nn - 1)) + std::abs(a(nn - 1, nn - 2));
      y = x = 0.75 * s;
      ww = -0.4375 * s * s;
    }
    ++its;

    int m = nn - 2;
    double p = 0.0, q = 0.0, r = 0.0, z = 0.0;
    for (; m >= l; --m) {
      z = a(m, m);
      r = x - z;
      double s = y - z;
      p = (r * s - ww) / a(m + 1, m) + a(m, m + 1);
      q = a(m + 1, m + 1) - z - r - s;
      r = a(m + 2, m + 1);
      s = std::abs(p) + std::abs(q) + std::abs(r);
      p /= s;
      q /= s;
      r /= s;
      if (m == l) break;
      const double u = std::abs(a(m, m - 1)) * (std::abs(q) + std::abs(r));
      const double v = std::abs(p) * (std::abs(a(m - 1, m - 1)) + std::abs(z) + std::abs(a(m + 1, m + 1)));
      if (u <= std::numeric_limits<double>::epsilon() * v) break;
    }
    for (int i = m; i < nn - 1; ++i) {
      a(i + 2, i) = 0.0;
      if (i != m) a(i + 2, i - 1) = 0.0;
    }
    for (int k = m; k < nn; ++k) {
      if (k != m) {
        p = a(k, k - 1);
        q = a(k + 1, k - 1);
        r = 0.0;
        if (k + 1 != nn) r = a(k + 2, k - 1);
        if ((x = std::abs(p) + std::abs(q) + std::abs(r)) != 0.0) {
          p /= x;
          q /= x;
          r /= x;
        }
      }
      const double s = sign(std::sqrt(p * p + q * q + r * r), p);
      if (s == 0.0) continue;
      if (k == m) {
        if (l != m) a(k, k - 1) = -a(k, k - 1);
      } else {
        a(k, k - 1) = -s * x;
      }
      p += s;
      x = p / s;
      y = q / s;
      z = r / s;
      q /= p;
      r /= p;
      for (int j = k; j <= nn; ++j) {
        p = a(k, j) + q * a(k + 1, j);
        if (k + 1 != nn) {
          p += r * a(k + 2, j);
          a(k + 2, j) -= p * z;
        }
        a(k + 1, j) -= p * y;
        a(k, j) -= p * x;
      }
      const int mmin = nn < k + 3 ? nn : k + 3;
      for (int i = l; i <= mmin; ++i) {
        p = x * a(i, k) + y * a(i, k + 1);
        if (k + 1 != nn) {
          p += z * a(i, k + 2);
          a(i, k + 2) -= p * r;
        }
        a(i, k + 1) -= p * q;
        a(i, k) -= p;
      }
    }
  }
  return w;
}

}  // namespace detail

/// All eigenvalues of a real square matrix, with multiplicity.
inline ComplexList eigenvalues(const DenseMatrix& a) {
  require(a.square(), ErrorCode::dimension_mismatch, "eigenvalues needs a square matrix");
  require(a.rows() <= 4096, ErrorCode::invalid_argument, "matrix dimension exceeds 4096");
  DenseMatrix h = a;
  detail::balance(h);
  detail::hessenberg(h);
  return detail::hessenberg_qr(h);
}

inline double spectral_radius(const DenseMatrix& a) {
  double rho = 0.0;
  for (const Complex& l : eigenvalues(a)) rho = std::max(rho, std::abs(l));
  return rho;
}

}  // namespace perk
