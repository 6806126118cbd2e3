#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>

#include "perk/linalg.hpp"
#include "perk/text_io.hpp"

namespace perk {

/// Eigenvalue set targeted by the stability optimizer. Stores at most one
/// representative (Im >= 0) per conjugate pair; every point has Re <= 1e-12.
class Spectrum {
 public:
  static constexpr double max_real_part = 1e-12;

  Spectrum(const ComplexList& points, std::string label = {}) : label_(std::move(label)) {
    require(!points.empty(), ErrorCode::empty_spectrum, "spectrum has no points");
    std::string offenders;
    for (const Complex& p : points) {
      require(std::isfinite(p.real()) && std::isfinite(p.imag()), ErrorCode::non_finite, "spectrum point not finite");
      if (p.real() > max_real_part) {
        std::ostringstream os;
        os << " (" << text::format(p.real()) << "," << text::format(p.imag()) << ")";
        offenders += os.str();
      }
    }
    if (!offenders.empty()) fail(ErrorCode::positive_real_part, "eigenvalues with positive real part:" + offenders);
    points_ = dedupe_conjugates(points);
  }

  const ComplexList& points() const noexcept { return points_; }
  const std::string& label() const noexcept { return label_; }
  std::size_t size() const noexcept { return points_.size(); }

  double radius() const noexcept {
    double r = 0.0;
    for (const Complex& p : points_) r = std::max(r, std::abs(p));
    return r;
  }

 private:
  static ComplexList dedupe_conjugates(const ComplexList& in) {
    double scale = 0.0;
    for (const Complex& p : in) scale = std::max(scale, std::abs(p));
    const double tol = 1e-10 * std::max(scale, 1.0);
    ComplexList out;
    out.reserve(in.size());
    for (Complex p : in) {
      p = Complex(p.real(), std::abs(p.imag()));
      const bool seen = std::any_of(out.begin(), out.end(), [&](const Complex& q) { return std::abs(q - p) <= tol; });
      if (!seen) out.push_back(p);
    }
    return out;
  }

  ComplexList points_;
  std::string label_;
};

/// Eigenvalues (e^{-2πik/n} - 1)/dx of the periodic first-order upwind
/// operator on a uniform mesh.
inline Spectrum circulant_upwind_spectrum(std::size_t n_cells, double dx) {
  require(n_cells >= 2, ErrorCode::invalid_argument, "circulant spectrum needs at least 2 cells");
  require(dx > 0.0 && std::isfinite(dx), ErrorCode::invalid_argument, "dx must be positive");
  ComplexList pts;
  pts.reserve(n_cells);
  for (std::size_t k = 0; k < n_cells; ++k) {
    const double theta = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n_cells);
    pts.emplace_back((std::cos(theta) - 1.0) / dx, std::sin(theta) / dx);
  }
  return Spectrum(pts, "circulant-upwind n=" + std::to_string(n_cells) + " dx=" + text::format(dx));
}

inline Spectrum operator_spectrum(const DenseMatrix& a, std::string label = {}) {
  require(a.square(), ErrorCode::dimension_mismatch, "operator spectrum needs a square matrix");
  return Spectrum(eigenvalues(a), std::move(label));
}

/// z_m = dt·λ_m.
inline ComplexList scale(const Spectrum& s, double dt) {
  require(dt > 0.0, ErrorCode::invalid_argument, "dt must be positive");
  ComplexList out;
  out.reserve(s.size());
  for (const Complex& p : s.points()) out.push_back(dt * p);
  return out;
}

inline std::string format_spectrum(const Spectrum& s) {
  std::string out = "# re,im";
  if (!s.label().empty()) out += "  " + s.label();
  out += "\n";
  for (const Complex& p : s.points()) out += text::format(p.real()) + "," + text::format(p.imag()) + "\n";
  return out;
}

inline Spectrum parse_spectrum(const std::string& content, std::string label = {}) {
  ComplexList pts;
  std::istringstream in(content);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const std::string where = "line " + std::to_string(number);
    const auto comma = t.find(',');
    if (comma == std::string_view::npos || t.find(',', comma + 1) != std::string_view::npos)
      fail(ErrorCode::parse, where + ": expected 're,im'");
    pts.emplace_back(text::parse_double(t.substr(0, comma), where), text::parse_double(t.substr(comma + 1), where));
  }
  return Spectrum(pts, std::move(label));
}

inline void save_spectrum(const Spectrum& s, const std::string& path) { text::write_file(path, format_spectrum(s)); }

inline Spectrum load_spectrum(const std::string& path) { return parse_spectrum(text::read_file(path), path); }

}  // namespace perk
