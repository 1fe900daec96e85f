#pragma once

// Harmonic maps u_{eps,delta} on the truncated slab with Dirichlet data v_eps,
// computed by the explicit tension flow du/dt = tau(u) and continued in delta.
//
// Time step: explicit diffusion in the metric |dx|^2/(x^m)^2 is stable for
// dt <= 1 / (2 (x^m)^2 sum_a h_a^{-2}). The global variant uses the largest
// height on the grid; the local variant (default) uses each row's own height,
// which changes the transient but not the fixed point.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "hmdp/errors.hpp"
#include "hmdp/extension.hpp"
#include "hmdp/geometry.hpp"

namespace hmdp {

struct SolverConfig {
  double epsilon = 0.1;
  std::vector<double> delta_schedule;  // strictly decreasing, each on a grid row
  double time_step_safety = 0.9;
  double residual_tol = 1e-4;  // on sup_x |tau(u)| in the target metric
  std::size_t max_steps = 2'000'000;
  bool log_coordinate = true;
  bool local_time_step = true;
  // Divergence: the residual rises for divergence_run consecutive steps while
  // above divergence_factor times its running minimum. Plain monotone growth
  // is normal in the first few thousand steps of the transient.
  std::size_t divergence_run = 50;
  double divergence_factor = 10.0;

  void validate() const {
    if (!(epsilon > 0.0)) throw ConfigError("solver: epsilon must be > 0");
    if (delta_schedule.empty()) throw ConfigError("solver: empty delta schedule");
    for (std::size_t i = 0; i < delta_schedule.size(); ++i) {
      if (!(delta_schedule[i] > 0.0)) throw ConfigError("solver: delta values must be > 0");
      if (i > 0 && !(delta_schedule[i] < delta_schedule[i - 1]))
        throw ConfigError("solver: delta schedule must be strictly decreasing");
    }
    if (!(time_step_safety > 0.0 && time_step_safety < 1.0))
      throw ConfigError("solver: time_step_safety must lie in (0, 1)");
    if (!(residual_tol > 0.0)) throw ConfigError("solver: residual_tol must be > 0");
    if (max_steps == 0) throw ConfigError("solver: max_steps must be > 0");
    if (!(divergence_factor > 1.0)) throw ConfigError("solver: divergence_factor must be > 1");
  }
};

struct SolverState {
  double delta = 0.0;
  MapField u;
  MapField boundary;  // v_eps on the same grid; boundary nodes of u copy it
  std::size_t steps = 0;
  std::vector<double> residual_history;  // sup residual before each step
  std::vector<double> wall_ms;           // cumulative wall clock after each step
  bool converged = false;

  const SlabGrid& grid() const { return u.grid(); }
  double residual() const {
    return residual_history.empty() ? std::numeric_limits<double>::infinity() : residual_history.back();
  }
};

// sup over interior nodes of |tau(u)| = sqrt(tension_norm).
inline double sup_residual(const MapField& u) {
  const auto nrm = tension_norm(tension_field(u), u);
  double r = 0.0;
  for (double v : nrm.values) r = std::max(r, v);
  return std::sqrt(r);
}

namespace detail {

struct FlowWork {
  std::vector<double> dt;  // per row
  std::vector<std::size_t> interior;
  std::vector<double> next, grad, lap, tau;
};

inline FlowWork make_work(const SlabGrid& g, std::size_t n, const SolverConfig& cfg) {
  FlowWork w;
  const std::size_t m = g.nodes().size();
  double inv = 0.0;
  for (double h : g.spacing()) inv += 1.0 / (h * h);
  const std::size_t rows = g.nodes().back();
  w.dt.resize(rows);
  const double xmax = g.top();
  for (std::size_t i = 0; i < rows; ++i) {
    const double x = cfg.local_time_step ? g.coord(m - 1, i) : xmax;
    w.dt[i] = cfg.time_step_safety / (2.0 * x * x * inv);
  }
  w.interior = g.interior_nodes();
  w.grad.resize(n * m);
  w.lap.resize(n);
  w.tau.resize(n);
  return w;
}

// One Jacobi sweep from u into w.next. Returns (sup residual, argmax node).
inline std::pair<double, std::size_t> sweep(const MapField& u, FlowWork& w, bool log_coordinate) {
  const SlabGrid& g = u.grid();
  const std::size_t n = u.components();
  const auto& src = u.data();
  if (w.next.size() != src.size()) w.next = src;
  double worst = 0.0;
  std::size_t where = 0;
  for (std::size_t k : w.interior) {
    tension_at(g, src, n, k, w.grad, w.lap, w.tau);
    const double yn = src[k * n + n - 1];
    double norm2 = 0.0;
    for (double t : w.tau) norm2 += t * t;
    norm2 /= yn * yn;
    if (norm2 > worst) {
      worst = norm2;
      where = k;
    }
    const double dt = w.dt[g.row_of(k)];
    const double* in = &src[k * n];
    double* out = &w.next[k * n];
    for (std::size_t s = 0; s + 1 < n; ++s) out[s] = in[s] + dt * w.tau[s];
    if (log_coordinate)
      out[n - 1] = yn * std::exp(dt * w.tau[n - 1] / yn);
    else
      out[n - 1] = yn + dt * w.tau[n - 1];
  }
  return {std::sqrt(worst), where};
}

inline std::string describe_node(const SlabGrid& g, std::size_t k) {
  std::string s = "(";
  const auto x = g.position(k);
  for (std::size_t a = 0; a < x.size(); ++a) s += (a ? ", " : "") + std::to_string(x[a]);
  return s + ")";
}

}  // namespace detail

// One explicit step of the tension flow; boundary nodes are left untouched.
// Appends the residual of the incoming state to the history.
inline void flow_step(SolverState& state, const SolverConfig& cfg) {
  auto w = detail::make_work(state.grid(), state.u.components(), cfg);
  const auto [res, where] = detail::sweep(state.u, w, cfg.log_coordinate);
  if (!std::isfinite(res))
    throw NumericalError("flow_step: non-finite residual at node " + detail::describe_node(state.grid(), where));
  state.u.data().swap(w.next);
  state.residual_history.push_back(res);
  ++state.steps;
}

// Runs the flow on one fixed grid until the sup residual drops below tol.
// A state that already meets the tolerance is returned unchanged.
inline void relax(SolverState& state, const SolverConfig& cfg,
                  const std::function<void(const SolverState&)>& progress = {}) {
  auto w = detail::make_work(state.grid(), state.u.components(), cfg);
  const auto start = std::chrono::steady_clock::now();
  std::size_t rising = 0;
  double prev = std::numeric_limits<double>::infinity();
  double lowest = std::numeric_limits<double>::infinity();
  for (std::size_t it = 0; it < cfg.max_steps; ++it) {
    const auto [res, where] = detail::sweep(state.u, w, cfg.log_coordinate);
    if (!std::isfinite(res))
      throw NumericalError("solver diverged: non-finite residual at node " +
                           detail::describe_node(state.grid(), where));
    state.residual_history.push_back(res);
    if (res < cfg.residual_tol) {
      state.converged = true;
      break;
    }
    lowest = std::min(lowest, res);
    rising = (res > prev && res > cfg.divergence_factor * lowest) ? rising + 1 : 0;
    prev = res;
    if (rising >= cfg.divergence_run)
      throw NumericalError("solver diverged: residual grew for " + std::to_string(rising) +
                           " consecutive steps, worst node " + detail::describe_node(state.grid(), where) +
                           " residual " + std::to_string(res));
    state.u.data().swap(w.next);
    ++state.steps;
    state.wall_ms.push_back(
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count());
    if (progress && state.steps % 10000 == 0) progress(state);
  }
  // y^n > 0 is structural in log coordinates; check it anyway.
  const std::size_t n = state.u.components();
  for (std::size_t k = 0; k < state.grid().node_count(); ++k)
    if (!(state.u.at(k)[n - 1] > 0.0))
      throw NumericalError("solver: target height lost positivity at node " +
                           detail::describe_node(state.grid(), k));
}

// Vertical row of the lattice at height delta; throws unless delta is on a row.
inline std::size_t row_at_height(const SlabGrid& g, double delta) {
  const double h = g.spacing().back();
  const double pos = (delta - g.floor()) / h;
  const double row = std::round(pos);
  if (row < 0.0 || std::abs(pos - row) > 1e-6 || row + 2.0 > double(g.nodes().back()))
    throw ConfigError("solver: delta = " + std::to_string(delta) + " is not a row of the grid (floor " +
                      std::to_string(g.floor()) + ", spacing " + std::to_string(h) + ")");
  return std::size_t(row);
}

struct StageRecord {
  double delta = 0.0;
  SolverState state;
};

// delta-continuation. Stage k solves on the part of v_eps's grid above
// delta_k; the previous stage's solution is extended downward by copying its
// floor row into the newly exposed rows, then every boundary node is reset
// to v_eps.
inline std::vector<StageRecord> solve(const InitialMap& v_eps, const SolverConfig& cfg,
                                      const std::function<void(std::size_t, const SolverState&)>& progress = {}) {
  cfg.validate();
  const SlabGrid& fine = v_eps.field.grid();
  if (std::abs(cfg.epsilon - v_eps.epsilon) > 1e-15)
    throw ConfigError("solver: config epsilon differs from the initial map's epsilon");
  std::vector<std::size_t> rows;
  for (double d : cfg.delta_schedule) rows.push_back(row_at_height(fine, d));

  std::vector<StageRecord> out;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const SlabGrid grid = rows[k] == 0 ? fine : fine.upper_part(rows[k]);
    SolverState st;
    st.delta = cfg.delta_schedule[k];
    st.boundary = v_eps.field.restricted_to(grid);
    st.u = st.boundary;
    if (k > 0) {
      const MapField& prev = out.back().state.u;
      const std::size_t shift = rows[k - 1] - rows[k];
      const std::size_t n = st.u.components();
      for (std::size_t node = 0; node < grid.node_count(); ++node) {
        auto idx = grid.multi_index(node);
        idx.back() = idx.back() < shift ? 0 : idx.back() - shift;
        const auto src = prev.at(prev.grid().linear_index(idx));
        std::copy(src.begin(), src.begin() + std::ptrdiff_t(n), st.u.at(node).begin());
      }
      for (std::size_t node = 0; node < grid.node_count(); ++node)
        if (grid.is_boundary(node)) {
          const auto b = st.boundary.at(node);
          std::copy(b.begin(), b.end(), st.u.at(node).begin());
        }
    }
    std::function<void(const SolverState&)> hook;
    if (progress) hook = [&, k](const SolverState& s) { progress(k, s); };
    relax(st, cfg, hook);
    if (!st.converged)
      throw NumericalError("solver: stage " + std::to_string(k) + " (delta = " + std::to_string(st.delta) +
                           ") did not reach residual " + std::to_string(cfg.residual_tol) + " in " +
                           std::to_string(cfg.max_steps) + " steps (last " + std::to_string(st.residual()) + ")");
    out.push_back({st.delta, std::move(st)});
  }
  return out;
}

// sup over the floor-adjacent row of d(u, v_eps).
inline double boundary_trace_error(const SolverState& state) {
  const SlabGrid& g = state.grid();
  double worst = 0.0;
  for (std::size_t k : g.interior_nodes())
    if (g.row_of(k) == 1) worst = std::max(worst, hyperbolic_distance(state.u.at(k), state.boundary.at(k)));
  return worst;
}

// sup over the nodes of the coarser stage of d(u_coarse, u_fine).
inline double stage_distance(const SolverState& coarse, const SolverState& fine) {
  const MapField restricted = fine.u.restricted_to(coarse.grid());
  double worst = 0.0;
  for (std::size_t k = 0; k < coarse.grid().node_count(); ++k)
    worst = std::max(worst, hyperbolic_distance(coarse.u.at(k), restricted.at(k)));
  return worst;
}

inline void write_residual_csv(std::ostream& os, const SolverState& s) {
  os << "step,sup_residual,wall_ms\n";
  os.precision(10);
  for (std::size_t i = 0; i < s.residual_history.size(); ++i)
    os << i << ',' << s.residual_history[i] << ',' << (i < s.wall_ms.size() ? s.wall_ms[i] : s.wall_ms.empty() ? 0.0 : s.wall_ms.back())
       << '\n';
}

}  // namespace hmdp
