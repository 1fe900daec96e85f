#pragma once

// Numerical checks of the estimates behind the existence argument: the
// differential inequality for d(u, v_eps), the distance bound by psi, the
// psi supersolution identity, the derivative constants of the initial map and
// the boundary behaviour of the Poisson extension.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hmdp/boundary.hpp"
#include "hmdp/extension.hpp"
#include "hmdp/geometry.hpp"
#include "hmdp/solver.hpp"
#include "hmdp/specialfn.hpp"

namespace hmdp {

// Relative agreement |a - b| <= rel * max(|a|, |b|); two zeros agree.
inline bool stable_within(double a, double b, double rel) {
  if (!std::isfinite(a) || !std::isfinite(b)) return false;
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b));
}

// Each value at most (1 + slack) times its predecessor.
inline bool non_increasing(std::span<const double> v, double slack) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] <= (1.0 + slack) * v[i - 1])) return false;
  return true;
}

// Each value below (1 - slack) times its predecessor; all-zero sequences count.
inline bool strictly_decaying(std::span<const double> v, double slack, double zero = 1e-12) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i - 1] <= zero && v[i] <= zero) continue;
    if (!(v[i] < (1.0 - slack) * v[i - 1])) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Delta d >= -|tau(v_eps)|
// ---------------------------------------------------------------------------

struct SubharmonicReport {
  std::size_t nodes = 0;
  std::size_t raw_violations = 0;  // Delta d + |tau(v)| < 0
  std::size_t violations = 0;      // beyond the allowance
  double worst_margin = 0.0;       // min of Delta d + |tau(v)| (<= 0 when violated)
  double worst_scaled = 0.0;       // min of (Delta d + |tau(v)|) / allowance
  double allowance = 0.0;
};

// Laplace-Beltrami of d(u, v_eps) against -|tau(v_eps)| at interior nodes. The
// allowance per node is factor * h + |tau(u)|: d is only Lipschitz where it
// vanishes, and the discrete u is harmonic only up to its residual.
inline SubharmonicReport check_subharmonic_inequality(const SolverState& state, double allowance_factor) {
  const SlabGrid& g = state.grid();
  const auto d = distance_field(state.u, state.boundary);
  const auto lap = laplace_beltrami_scalar(d);
  const auto tv = tension_norm(tension_field(state.boundary), state.boundary);
  const auto tu = tension_norm(tension_field(state.u), state.u);
  double h = 0.0;
  for (double s : g.spacing()) h = std::max(h, s);
  SubharmonicReport r;
  r.allowance = allowance_factor * h;
  r.worst_scaled = std::numeric_limits<double>::infinity();
  for (std::size_t k : g.interior_nodes()) {
    ++r.nodes;
    const double margin = lap[k] + std::sqrt(tv[k]);
    r.worst_margin = std::min(r.worst_margin, margin);
    const double allow = r.allowance + std::sqrt(tu[k]);
    if (margin < 0.0) ++r.raw_violations;
    if (margin < -allow) ++r.violations;
    if (allow > 0.0) r.worst_scaled = std::min(r.worst_scaled, margin / allow);
  }
  if (!std::isfinite(r.worst_scaled)) r.worst_scaled = 0.0;
  return r;
}

// ---------------------------------------------------------------------------
// d(u, v_eps) <= (C / eps) psi(x^m)
// ---------------------------------------------------------------------------

struct DistanceBound {
  double epsilon = 0.0;
  double delta = 0.0;
  double c_bound = 0.0;  // max eps d / psi over interior nodes
  std::vector<double> argmax;
  // Per horizontal slice: height, sup d, psi.
  std::vector<double> height, sup_distance, psi;
};

inline DistanceBound check_distance_bound(const SolverState& state, const ModulusOfContinuity& g, double epsilon,
                                          double quad_tol) {
  const SlabGrid& G = state.grid();
  const std::size_t m = G.nodes().size();
  DistanceBound b;
  b.epsilon = epsilon;
  b.delta = state.delta;
  const std::size_t rows = G.nodes().back();
  b.height.resize(rows);
  b.sup_distance.assign(rows, 0.0);
  b.psi.resize(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    b.height[i] = G.coord(m - 1, i);
    b.psi[i] = g.is_zero() ? 0.0 : specialfn::psi(b.height[i], g, quad_tol);
  }
  for (std::size_t k = 0; k < G.node_count(); ++k) {
    const std::size_t row = G.row_of(k);
    const double d = hyperbolic_distance(state.u.at(k), state.boundary.at(k));
    b.sup_distance[row] = std::max(b.sup_distance[row], d);
    if (!G.is_interior(k) || d == 0.0) continue;  // 0/0 when psi vanishes too
    const double c = epsilon * d / b.psi[row];
    if (c > b.c_bound || !std::isfinite(c)) {
      b.c_bound = c;
      b.argmax = G.position(k);
    }
  }
  return b;
}

// ---------------------------------------------------------------------------
// Delta_{H^m}(-psi(x^m)) = phi + (m-2) x^m psi'
// ---------------------------------------------------------------------------

struct PsiLaplacianReport {
  int m = 2;
  double max_rel_error = 0.0;  // |Delta(-psi) - phi - (m-2) r psi'| / (phi + (m-2) r psi')
  double min_slack = std::numeric_limits<double>::infinity();  // min of Delta(-psi) - phi
  bool ok = false;
};

// Applies the grid Laplace-Beltrami to w = -psi(x^m) on a 3^m stencil of
// spacing eta * r around each abscissa point.
inline PsiLaplacianReport check_psi_laplacian(const specialfn::SpecialFunctionTable& t,
                                              const ModulusOfContinuity& g, int m, double rel_tol = 1e-3,
                                              double eta = 1e-2) {
  PsiLaplacianReport rep;
  rep.m = m;
  if (g.is_zero()) {
    rep.max_rel_error = 0.0;
    rep.min_slack = 0.0;
    rep.ok = true;
    return rep;
  }
  const double tol = std::min(t.quad_tol, 1e-10);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double r = t.r[i];
    const double h = eta * r;
    auto grid = SlabGrid::uniform(ModelDims(m, 2), h, r - h, r + h, 3, 3);
    ScalarField w(grid);
    const double rows[3] = {-specialfn::psi(r - h, g, tol), -specialfn::psi(r, g, tol),
                            -specialfn::psi(r + h, g, tol)};
    for (std::size_t k = 0; k < grid.node_count(); ++k) w[k] = rows[grid.row_of(k)];
    const auto lap = laplace_beltrami_scalar(w);
    const double centre = lap[grid.node_count() / 2];
    const double expected = t.phi[i] + double(m - 2) * r * t.psi_prime[i];
    rep.max_rel_error = std::max(rep.max_rel_error, std::abs(centre - expected) / std::abs(expected));
    rep.min_slack = std::min(rep.min_slack, centre - t.phi[i]);
  }
  // The slack is (m-2) r psi' >= 0; at m = 2 it must vanish to the same accuracy.
  rep.ok = rep.max_rel_error <= rel_tol &&
           (m == 2 || rep.min_slack > 0.0) &&
           (m != 2 || std::abs(rep.min_slack) <= rel_tol * *std::max_element(t.phi.begin(), t.phi.end()));
  return rep;
}

// ---------------------------------------------------------------------------
// Initial-map constants and boundary behaviour
// ---------------------------------------------------------------------------

// sup of tension_norm(tau(v), v) over interior nodes with x^m <= max_height.
inline double tension_constant(const MapField& v, double max_height) {
  const auto nrm = tension_norm(tension_field(v), v);
  const SlabGrid& g = v.grid();
  double c = 0.0;
  for (std::size_t k : g.interior_nodes())
    if (g.height_of(k) <= max_height) c = std::max(c, nrm[k]);
  return c;
}

struct FloorProfile {
  std::vector<double> heights;
  std::vector<double> trace_error;      // sup over lateral points of |v^alpha - f^alpha|
  std::vector<double> scaled_gradient;  // sup of x^m |grad_0 v^alpha|
};

// Boundary behaviour of the Poisson extension at each height: the distance to
// f and the scaled gradient, sampled at lateral points of `lateral` (at most
// max_per_axis per axis). Gradients use central differences of the extension
// with step 0.05 x^m, so the stencil scales with the height.
inline FloorProfile floor_profile(const BoundaryMap& f, const SlabGrid& lateral, std::span<const double> heights,
                                  double tol, std::size_t max_per_axis = 65) {
  const std::size_t m = lateral.nodes().size();
  const std::size_t comps = static_cast<std::size_t>(f.dims.n - 1);
  std::vector<std::vector<double>> axes(m - 1);
  for (std::size_t a = 0; a + 1 < m; ++a) {
    const std::size_t count = lateral.nodes()[a];
    const std::size_t stride = std::max<std::size_t>(1, (count + max_per_axis - 1) / max_per_axis);
    for (std::size_t i = 0; i < count; i += stride) axes[a].push_back(lateral.coord(a, i));
  }
  FloorProfile p;
  std::vector<double> x(m), xp(m), xm(m), fy(comps);
  std::vector<std::size_t> idx(m - 1, 0);
  for (double h : heights) {
    double trace = 0.0, grad = 0.0;
    std::fill(idx.begin(), idx.end(), 0);
    while (true) {
      for (std::size_t a = 0; a + 1 < m; ++a) x[a] = axes[a][idx[a]];
      x[m - 1] = h;
      const auto v = poisson_extend(f, x, tol);
      f.eval(std::span<const double>(x.data(), m - 1), fy);
      std::vector<double> g2(comps, 0.0);
      const double eta = 0.05 * h;
      for (std::size_t a = 0; a < m; ++a) {
        xp = x;
        xm = x;
        xp[a] += eta;
        xm[a] -= eta;
        const auto vp = poisson_extend(f, xp, tol);
        const auto vm = poisson_extend(f, xm, tol);
        for (std::size_t c = 0; c < comps; ++c) {
          const double d = (vp[c] - vm[c]) / (2.0 * eta);
          g2[c] += d * d;
        }
      }
      for (std::size_t c = 0; c < comps; ++c) {
        trace = std::max(trace, std::abs(v[c] - fy[c]));
        grad = std::max(grad, h * std::sqrt(g2[c]));
      }
      std::size_t a = 0;
      while (a + 1 < m && ++idx[a] == axes[a].size()) idx[a++] = 0;
      if (a + 1 == m) break;
    }
    p.heights.push_back(h);
    p.trace_error.push_back(trace);
    p.scaled_gradient.push_back(grad);
  }
  return p;
}

}  // namespace hmdp
