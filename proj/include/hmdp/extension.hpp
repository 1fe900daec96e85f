#pragma once

// Poisson extension of boundary data into H^m and the initial maps
// v = {f, phi(x^m)}, v_eps = {f, phi(x^m) + eps}.
//
// With y' = x' + x^m tan(theta) w, w in S^{m-2}, the Poisson kernel
// c_m x^m / (|x'-y'|^2 + (x^m)^2)^{m/2} dy' becomes c_m sin^{m-2}(theta) d theta dw,
// so v(x) = c_m int_{S^{m-2}} int_0^{pi/2} f(x' + x^m tan(theta) w) sin^{m-2}(theta) d theta dw.
// The lateral window |y' - x'| <= R corresponds to theta <= Theta = atan(R / x^m).

#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "hmdp/boundary.hpp"
#include "hmdp/geometry.hpp"
#include "hmdp/quadrature.hpp"
#include "hmdp/specialfn.hpp"

namespace hmdp {

// c_m fixed by unit kernel mass: c_m |S^{m-2}| int_0^{pi/2} sin^{m-2} = 1.
struct KernelNormalization {
  int m = 2;
  double c = 0.0;
  double sphere_area = 0.0;  // |S^{m-2}|, 2 for m = 2
  double theta_mass = 0.0;   // int_0^{pi/2} sin^{m-2}(theta) d theta
  // omega_m implied by c = 2/(m omega_m); equals the volume of the unit m-ball.
  double omega() const { return 2.0 / (double(m) * c); }
};

inline KernelNormalization kernel_normalization(int m) {
  if (m < 2) throw DomainError("kernel_normalization: m must be >= 2");
  KernelNormalization k;
  k.m = m;
  const double d = double(m - 1);
  k.sphere_area = 2.0 * std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0);
  quad::Options opt;
  opt.abs_tol = 1e-15;
  k.theta_mass = quad::integrate_or_throw([m](double t) { return std::pow(std::sin(t), m - 2); }, 0.0,
                                          std::numbers::pi / 2.0, {}, opt, "kernel_normalization");
  k.c = 1.0 / (k.sphere_area * k.theta_mass);
  return k;
}

// Mass of the normalized kernel outside the lateral window theta > Theta,
// bounded by c_m |S^{m-2}| (pi/2 - Theta).
inline double kernel_tail_bound(const KernelNormalization& k, double theta_cut) {
  return k.c * k.sphere_area * (std::numbers::pi / 2.0 - theta_cut);
}

namespace detail {

// int over S^{d-1} of F(w) dw via w = (cos a, sin a w'), dw = sin^{d-2}(a) da dw'.
inline double sphere_integral(std::size_t d, const std::function<double(std::span<const double>)>& F,
                              double tol, std::size_t& evaluations) {
  if (d == 1) {
    const double plus = 1.0, minus = -1.0;
    return F({&plus, 1}) + F({&minus, 1});
  }
  quad::Options opt;
  opt.abs_tol = tol;
  opt.max_panels = 2000;
  std::vector<double> w(d);
  auto r = quad::integrate(
      [&](double a) {
        const double ca = std::cos(a), sa = std::sin(a);
        auto inner = [&](std::span<const double> v) {
          w[0] = ca;
          for (std::size_t i = 0; i + 1 < d; ++i) w[i + 1] = sa * v[i];
          return F(w);
        };
        return std::pow(sa, double(d) - 2.0) * sphere_integral(d - 1, inner, tol / std::numbers::pi, evaluations);
      },
      0.0, std::numbers::pi, {}, opt);
  evaluations += r.evaluations;
  if (!r.converged) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "poisson_extend: angular quadrature tolerance %.3g unreachable", tol);
    throw NumericalError(buf);
  }
  return r.value;
}

}  // namespace detail

// Poisson integral of every component of f at x = (x', x^m). The lateral
// window is chosen so that sup|f| times the kernel tail mass is below 0.9 tol;
// the remaining 0.1 tol goes to the quadrature, which is cheap by comparison
// (a wide window matters for data that do not decay, like cos).
inline std::vector<double> poisson_extend(const BoundaryMap& f, std::span<const double> x, double tol = 1e-9) {
  const auto m = static_cast<std::size_t>(f.dims.m);
  const auto comps = static_cast<std::size_t>(f.dims.n - 1);
  if (x.size() != m) throw DomainError("poisson_extend: point dimension does not match m");
  const double height = x[m - 1];
  if (!(height > 0.0) || !std::isfinite(height)) throw DomainError("poisson_extend: x^m must be > 0");
  if (!(tol > 0.0)) throw DomainError("poisson_extend: tol must be > 0");
  static thread_local std::vector<KernelNormalization> cache;
  if (cache.size() <= m) cache.resize(m + 1);
  if (cache[m].c == 0.0) cache[m] = kernel_normalization(int(m));
  const KernelNormalization& k = cache[m];

  const double scale = k.c * k.sphere_area;
  const double theta_cut =
      f.sup_norm > 0.0 ? std::max(0.0, std::numbers::pi / 2.0 - 0.9 * tol / (f.sup_norm * scale))
                       : std::numbers::pi / 2.0;
  const double quad_tol = 0.1 * tol / scale;
  const std::span<const double> origin(x.data(), m - 1);

  std::vector<double> out(comps, 0.0);
  std::vector<double> y(m - 1), fy(comps);
  for (std::size_t c = 0; c < comps; ++c) {
    std::size_t evaluations = 0;
    auto along_ray = [&](std::span<const double> w) {
      std::vector<double> breaks;
      if (f.ray_breaks)
        for (double t : f.ray_breaks(origin, w)) breaks.push_back(std::atan(t / height));
      quad::Options opt;
      opt.abs_tol = quad_tol / std::max(1.0, k.sphere_area);
      opt.max_panels = 200000;
      auto r = quad::integrate(
          [&](double th) {
            const double t = height * std::tan(th);
            for (std::size_t a = 0; a + 1 < m; ++a) y[a] = origin[a] + t * w[a];
            f.eval(y, fy);
            return m == 2 ? fy[c] : fy[c] * std::pow(std::sin(th), double(m) - 2.0);
          },
          0.0, theta_cut, breaks, opt);
      evaluations += r.evaluations;
      if (!r.converged) {
        char buf[200];
        std::snprintf(buf, sizeof buf,
                      "poisson_extend: tolerance %.3g unreachable along a ray from x^m=%.6g (estimate %.3g)",
                      opt.abs_tol, height, r.error);
        throw NumericalError(buf);
      }
      return r.value;
    };
    out[c] = k.c * detail::sphere_integral(m - 1, along_ray, quad_tol, evaluations);
  }
  return out;
}

struct InitialMap {
  BoundaryMap boundary;
  ModulusOfContinuity modulus;
  double epsilon = 0.0;
  double tol = 1e-9;
  MapField field;  // (v^1, ..., v^{n-1}, phi(x^m) + eps)
};

// Samples v_eps on every node. phi is evaluated once per grid row.
inline InitialMap build_initial_map(const BoundaryMap& f, const ModulusOfContinuity& g, double epsilon,
                                    const SlabGrid& grid, double tol = 1e-9) {
  if (!(epsilon >= 0.0)) throw DomainError("build_initial_map: epsilon must be >= 0");
  if (!(grid.dims() == f.dims)) throw DomainError("build_initial_map: grid and boundary map dimensions differ");
  InitialMap v{f, g, epsilon, tol, MapField(grid)};
  const std::size_t n = v.field.components();
  const std::size_t rows = grid.nodes().back();
  std::vector<double> phi_row(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const double x = grid.coord(grid.nodes().size() - 1, i);
    phi_row[i] = g.is_zero() ? 0.0 : specialfn::phi(x, g, 1e-3 * tol);
  }
  std::vector<double> pos(grid.nodes().size());
  for (std::size_t node = 0; node < grid.node_count(); ++node) {
    grid.position(node, pos);
    std::vector<double> ext;
    try {
      ext = poisson_extend(f, pos, tol);
    } catch (const NumericalError& e) {
      std::string where = " at node (";
      for (std::size_t a = 0; a < pos.size(); ++a) where += (a ? ", " : "") + std::to_string(pos[a]);
      throw NumericalError(e.what() + where + ")");
    }
    auto out = v.field.at(node);
    for (std::size_t c = 0; c + 1 < n; ++c) out[c] = ext[c];
    out[n - 1] = phi_row[grid.row_of(node)] + epsilon;
  }
  return v;
}

// The same map with a different eps; only the last component changes.
inline InitialMap with_epsilon(const InitialMap& v, double epsilon) {
  InitialMap out = v;
  const std::size_t n = out.field.components();
  for (std::size_t node = 0; node < out.field.grid().node_count(); ++node)
    out.field.at(node)[n - 1] += epsilon - v.epsilon;
  out.epsilon = epsilon;
  return out;
}

// ---------------------------------------------------------------------------
// Scaled derivative bounds
// ---------------------------------------------------------------------------

struct DerivativeBounds {
  double gradient = 0.0;      // sup x^m |grad_0 v^alpha|
  double hessian = 0.0;       // sup (x^m)^2 |D^2 v^alpha|
  double third = 0.0;         // sup (x^m)^3 |D^3 v^alpha|
  double gradient_phi = 0.0;  // sup x^m |grad_0 v^alpha| / phi(x^m)
  std::size_t nodes = 0;
};

namespace detail {

// Multi-indices of total order k over m axes with their multinomial counts.
inline std::vector<std::pair<std::vector<int>, double>> multi_indices(std::size_t m, int k) {
  std::vector<std::pair<std::vector<int>, double>> out;
  std::vector<int> cur(m, 0);
  auto rec = [&](auto&& self, std::size_t axis, int left) -> void {
    if (axis + 1 == m) {
      cur[axis] = left;
      double count = std::tgamma(double(k) + 1.0);
      for (int c : cur) count /= std::tgamma(double(c) + 1.0);
      out.emplace_back(cur, count);
      return;
    }
    for (int c = 0; c <= left; ++c) {
      cur[axis] = c;
      self(self, axis + 1, left - c);
    }
  };
  rec(rec, 0, k);
  return out;
}

}  // namespace detail

// Suprema of the scaled derivatives of the lateral components over interior
// nodes at stencil margin 2 whose height is at most max_height. The Frobenius
// norm is used for D^2 and D^3 (sum over ordered index tuples).
inline DerivativeBounds check_derivative_bounds(const InitialMap& v,
                                                double max_height = std::numeric_limits<double>::infinity()) {
  const SlabGrid& g = v.field.grid();
  for (auto c : g.nodes())
    if (c < 5) throw DomainError("check_derivative_bounds: third differences need at least 5 nodes per axis");
  const std::size_t m = g.nodes().size();
  const std::size_t n = v.field.components();
  std::vector<std::vector<std::pair<std::vector<fd::Tap>, double>>> stencils(4);
  for (int k = 1; k <= 3; ++k)
    for (const auto& [orders, count] : detail::multi_indices(m, k))
      stencils[std::size_t(k)].emplace_back(fd::central_stencil(g, orders), count);

  DerivativeBounds b;
  std::vector<double> phi_row(g.nodes().back(), 0.0);
  if (!v.modulus.is_zero())
    for (std::size_t i = 0; i < phi_row.size(); ++i)
      phi_row[i] = specialfn::phi(g.coord(m - 1, i), v.modulus, 1e-10);
  for (std::size_t node : g.interior_nodes(2)) {
    const double x = g.height_of(node);
    if (x > max_height) continue;
    ++b.nodes;
    for (std::size_t c = 0; c + 1 < n; ++c) {
      double norms[4] = {0, 0, 0, 0};
      for (int k = 1; k <= 3; ++k)
        for (const auto& [taps, count] : stencils[std::size_t(k)]) {
          const double d = fd::apply(taps, v.field.data(), node, n, c);
          norms[k] += count * d * d;
        }
      const double grad = x * std::sqrt(norms[1]);
      b.gradient = std::max(b.gradient, grad);
      b.hessian = std::max(b.hessian, x * x * std::sqrt(norms[2]));
      b.third = std::max(b.third, x * x * x * std::sqrt(norms[3]));
      const double p = phi_row[g.row_of(node)];
      if (p > 0.0) b.gradient_phi = std::max(b.gradient_phi, grad / p);
    }
  }
  return b;
}

}  // namespace hmdp
