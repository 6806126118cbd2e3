#pragma once

// Model problems: periodic first-order upwind finite volumes on non-uniform
// 1D meshes, and the Lotka-Volterra predator-prey system.

#include <array>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "perk/integrator.hpp"
#include "perk/text_io.hpp"

namespace perk {

struct Mesh1D {
  std::vector<double> cell_edges;
  bool periodic = true;

  Mesh1D() = default;
  explicit Mesh1D(std::vector<double> edges) : cell_edges(std::move(edges)) {
    require(cell_edges.size() >= 3, ErrorCode::invalid_argument, "mesh needs at least 2 cells");
    for (std::size_t i = 0; i < cell_edges.size(); ++i) {
      require(std::isfinite(cell_edges[i]), ErrorCode::non_finite, "mesh edge not finite");
      if (i > 0) require(cell_edges[i] > cell_edges[i - 1], ErrorCode::invalid_argument, "mesh edges must increase strictly");
    }
  }

  static Mesh1D uniform(std::size_t cells, double left, double right) {
    require(cells >= 2 && right > left, ErrorCode::invalid_argument, "uniform mesh needs >= 2 cells on a nonempty interval");
    std::vector<double> e(cells + 1);
    for (std::size_t i = 0; i <= cells; ++i) e[i] = left + (right - left) * double(i) / double(cells);
    e.back() = right;
    return Mesh1D(std::move(e));
  }

  std::size_t cells() const noexcept { return cell_edges.size() - 1; }
  double length() const noexcept { return cell_edges.back() - cell_edges.front(); }
  double size(std::size_t i) const { return cell_edges[i + 1] - cell_edges[i]; }
  std::vector<double> cell_sizes() const {
    std::vector<double> h(cells());
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = size(i);
    return h;
  }
};

struct LeveledMesh {
  Mesh1D mesh;
  std::vector<std::size_t> level_of;  // per cell
  std::size_t levels = 1;
};

/// 16 cells of 1/32, 64 of 1/64, 16 of 1/32 on (-1, 1); the 64 fine center
/// cells form level 1, the rest level 0.
inline LeveledMesh appendix_b_mesh() {
  std::vector<double> e{-1.0};
  std::vector<std::size_t> lv;
  auto add = [&](int n, int denom, std::size_t level) {
    for (int i = 0; i < n; ++i) {
      e.push_back(e.back() + 1.0 / denom);
      lv.push_back(level);
    }
  };
  add(16, 32, 0);
  add(64, 64, 1);
  add(16, 32, 0);
  e.back() = 1.0;  // exact in binary already; pins the periodic wrap
  return {Mesh1D(std::move(e)), std::move(lv), 2};
}

/// Periodic upwind FV: dU_i/dt = -a·(U_i - U_{i-1})/Δx_i (a > 0).
inline PartitionedSystem advection_fv_system(const Mesh1D& mesh, double speed, std::vector<std::size_t> level_of,
                                             std::size_t levels) {
  require(speed > 0.0 && std::isfinite(speed), ErrorCode::invalid_argument, "advection speed must be positive");
  const std::size_t n = mesh.cells();
  require(level_of.size() == n, ErrorCode::dimension_mismatch, "level map length differs from cell count");
  DenseMatrix lambda(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const double k = speed / mesh.size(i);
    lambda(i, i) -= k;
    lambda(i, (i + n - 1) % n) += k;
  }
  PartitionedSystem sys;
  sys.dim = n;
  sys.levels = levels;
  sys.linear = LinearData{lambda, level_masks(level_of, levels)};
  sys.rhs = [h = mesh.cell_sizes(), a = speed, lv = level_of](double, std::span<const double> u,
                                                                const std::vector<bool>& active, std::span<double> out) {
    const std::size_t m = h.size();
    for (std::size_t i = 0; i < m; ++i)
      if (active[lv[i]]) out[i] = -a * (u[i] - u[i == 0 ? m - 1 : i - 1]) / h[i];
  };
  sys.level_of = std::move(level_of);
  sys.validate();
  return sys;
}

inline PartitionedSystem advection_fv_system(const LeveledMesh& lm, double speed) {
  return advection_fv_system(lm.mesh, speed, lm.level_of, lm.levels);
}

/// Exact cell averages of 1 + sin(π(x - shift))/2.
inline std::vector<double> sine_cell_averages(const Mesh1D& mesh, double shift = 0.0) {
  std::vector<double> u(mesh.cells());
  const double pi = std::numbers::pi;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double xl = mesh.cell_edges[i] - shift, xr = mesh.cell_edges[i + 1] - shift;
    u[i] = 1.0 + (std::cos(pi * xl) - std::cos(pi * xr)) / (2.0 * pi * mesh.size(i));
  }
  return u;
}

inline std::vector<double> sine_ic(const Mesh1D& mesh) { return sine_cell_averages(mesh); }

/// Cell averages of the exact periodic solution at time t for speed a.
inline std::vector<double> sine_exact(const Mesh1D& mesh, double speed, double t) {
  return sine_cell_averages(mesh, speed * t);
}

struct LotkaVolterraState {
  double u = 1.0;  // prey
  double v = 1.0;  // predator
};

/// u' = u(1 - v), v' = v(u - 1); prey on level 0, predator on level 1.
inline PartitionedSystem lotka_volterra_system() {
  PartitionedSystem sys;
  sys.dim = 2;
  sys.levels = 2;
  sys.level_of = {0, 1};
  sys.rhs = [](double, std::span<const double> y, const std::vector<bool>& active, std::span<double> out) {
    if (active[0]) out[0] = y[0] * (1.0 - y[1]);
    if (active[1]) out[1] = y[1] * (y[0] - 1.0);
  };
  return sys;
}

inline double lv_invariant(const LotkaVolterraState& s) {
  require(s.u > 0.0 && s.v > 0.0, ErrorCode::invalid_argument, "populations must be positive");
  return s.u - std::log(s.u) + s.v - std::log(s.v);
}

namespace detail {

/// Classical RK4 with compensated accumulation of the state.
inline LotkaVolterraState lv_rk4(double tf, LotkaVolterraState s0, double dt) {
  const std::size_t n = step_count(0.0, tf, dt);
  auto f = [](double u, double v) { return std::array<double, 2>{u * (1.0 - v), v * (u - 1.0)}; };
  double u = s0.u, v = s0.v, cu = 0.0, cv = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double h = k + 1 == n ? tf - double(k) * dt : dt;
    const auto k1 = f(u, v);
    const auto k2 = f(u + 0.5 * h * k1[0], v + 0.5 * h * k1[1]);
    const auto k3 = f(u + 0.5 * h * k2[0], v + 0.5 * h * k2[1]);
    const auto k4 = f(u + h * k3[0], v + h * k3[1]);
    const double du = h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]) - cu;
    const double dv = h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]) - cv;
    const double un = u + du, vn = v + dv;
    cu = (un - u) - du;
    cv = (vn - v) - dv;
    u = un;
    v = vn;
  }
  return {u, v};
}

}  // namespace detail

/// Reference LV state at tf: RK4 at dt = 1e-6, confirmed by a dt = 5e-7 run
/// agreeing within 1e-12 per component.
inline LotkaVolterraState lv_reference(double tf, LotkaVolterraState s0) {
  require(tf >= 0.0 && std::isfinite(tf), ErrorCode::invalid_argument, "final time must be non-negative");
  if (tf == 0.0) return s0;
  const auto coarse = detail::lv_rk4(tf, s0, 1e-6);
  const auto fine = detail::lv_rk4(tf, s0, 5e-7);
  const double diff = std::max(std::abs(coarse.u - fine.u), std::abs(coarse.v - fine.v));
  if (diff > 1e-12) fail(ErrorCode::richardson_disagreement, "reference runs differ by " + text::format(diff));
  return fine;
}

inline std::string format_lv_reference(double tf, LotkaVolterraState s0, LotkaVolterraState s) {
  return "# Lotka-Volterra reference (RK4, dt = 5e-7, confirmed at 1e-6)\n"
         "t_f = " + text::format(tf) + "\nu0 = " + text::format(s0.u) + "\nv0 = " + text::format(s0.v) +
         "\nu = " + text::format(s.u) + "\nv = " + text::format(s.v) + "\n";
}

/// Cached reference: reads `path` when its key (t_f, u0, v0) matches,
/// otherwise computes and (re)writes it.
inline LotkaVolterraState lv_reference_cached(const std::string& path, double tf, LotkaVolterraState s0) {
  if (std::filesystem::exists(path)) {
    const auto doc = text::parse_document(text::read_file(path));
    const auto& sec = doc.front();
    auto num = [&](const char* key) { return text::parse_double(sec.get(key), path + ":" + key); };
    if (num("t_f") == tf && num("u0") == s0.u && num("v0") == s0.v) return {num("u"), num("v")};
  }
  const auto s = lv_reference(tf, s0);
  text::write_file(path, format_lv_reference(tf, s0, s));
  return s;
}

}  // namespace perk
