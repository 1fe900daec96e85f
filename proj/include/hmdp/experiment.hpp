#pragma once

// Experiment driver: modulus -> special-function table -> initial map ->
// delta-continuation for every eps -> checks -> report and data files.

#include <algorithm>
#include <chrono>
#include <deque>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hmdp/boundary.hpp"
#include "hmdp/checks.hpp"
#include "hmdp/config.hpp"
#include "hmdp/extension.hpp"
#include "hmdp/snapshot.hpp"
#include "hmdp/solver.hpp"
#include "hmdp/specialfn.hpp"

namespace hmdp {

using json = nlohmann::ordered_json;

enum class CheckStatus { pass, fail, skipped };

inline const char* to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass: return "pass";
    case CheckStatus::fail: return "fail";
    default: return "skipped";
  }
}

struct CheckRecord {
  std::string name;
  CheckStatus status = CheckStatus::skipped;
  std::string detail;
  json measured = json::object();
  json tolerances = json::object();
  std::string oracle;  // where the reference value comes from
};

struct ConstantEstimates {
  double c_tension = 0.0;
  double c3 = 0.0;
  double c4 = 0.0;
  double c5 = 0.0;
  std::map<double, double> c_bound;  // eps -> value at the last delta stage
};

struct VerificationReport {
  std::string name;
  std::deque<CheckRecord> checks;  // add() hands out references that must stay valid
  ConstantEstimates constants;
  json metadata = json::object();
  json timing = json::array();  // wall clock; written to timing.json, never to the report

  bool passed() const {
    for (const auto& c : checks)
      if (c.status == CheckStatus::fail) return false;
    return true;
  }
  CheckRecord& add(std::string name, std::string oracle) {
    for (const auto& c : checks)
      if (c.name == name) throw std::logic_error("duplicate check " + name);
    checks.push_back({std::move(name), CheckStatus::skipped, "", json::object(), json::object(), std::move(oracle)});
    return checks.back();
  }
  const CheckRecord* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

inline json to_json(const VerificationReport& r) {
  json j;
  j["name"] = r.name;
  j["status"] = r.passed() ? "pass" : "fail";
  j["metadata"] = r.metadata;
  json constants;
  constants["C_tension"] = r.constants.c_tension;
  constants["C3"] = r.constants.c3;
  constants["C4"] = r.constants.c4;
  constants["C5"] = r.constants.c5;
  json cb = json::object();
  for (const auto& [e, c] : r.constants.c_bound) cb[std::to_string(e)] = c;
  constants["C_bound"] = cb;
  j["constants"] = constants;
  json checks = json::array();
  for (const auto& c : r.checks)
    checks.push_back({{"name", c.name},
                      {"status", to_string(c.status)},
                      {"detail", c.detail},
                      {"measured", c.measured},
                      {"tolerances", c.tolerances},
                      {"oracle", c.oracle}});
  j["checks"] = checks;
  return j;
}

inline void write_text(std::ostream& os, const VerificationReport& r) {
  os << "experiment " << r.name << ": " << (r.passed() ? "PASS" : "FAIL") << "\n";
  for (const auto& c : r.checks) {
    os << "  [" << std::setw(7) << std::left << to_string(c.status) << "] " << c.name;
    if (!c.detail.empty()) os << ": " << c.detail;
    os << "\n";
  }
  os << std::setprecision(6) << "constants: C_tension=" << r.constants.c_tension << " C3=" << r.constants.c3
     << " C4=" << r.constants.c4 << " C5=" << r.constants.c5;
  for (const auto& [e, c] : r.constants.c_bound) os << " C_bound(eps=" << e << ")=" << c;
  os << "\n";
}

namespace detail {

inline std::string tag(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

inline std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

inline ModulusOfContinuity experiment_modulus(const ExperimentConfig& c, const BoundaryMap& f) {
  if (c.modulus == "analytic") {
    if (!f.modulus) throw ConfigError("family '" + c.family + "' has no analytic modulus; use modulus = sampled");
    return *f.modulus;
  }
  const double window = c.modulus_window > 0.0 ? c.modulus_window : 10.0 * c.lateral_extent;
  const auto radii = specialfn::log_spaced(1e-4, 2.0 * window, 60);
  return estimate_modulus(f, radii, c.modulus_samples, window, c.seed);
}

inline SolverConfig solver_config(const ExperimentConfig& c, double eps) {
  SolverConfig s;
  s.epsilon = eps;
  s.delta_schedule = c.deltas;
  s.time_step_safety = c.time_step_safety;
  s.residual_tol = c.residual_tol;
  s.max_steps = c.max_steps;
  s.log_coordinate = c.log_coordinate;
  s.local_time_step = c.local_time_step;
  return s;
}

inline SlabGrid refined(const SlabGrid& g) {
  const std::size_t m = g.nodes().size();
  return SlabGrid::uniform(g.dims(), g.lateral_extent(), g.floor(), g.top(), 2 * g.nodes()[0] - 1,
                           2 * g.nodes()[m - 1] - 1);
}

// Residual history after its largest value is non-increasing within rel.
// Transients end at step 100 or at the peak, whichever comes later.
inline bool decays_after_peak(const std::vector<double>& h, double rel, std::size_t skip = 100) {
  if (h.empty()) return true;
  const auto peak = std::size_t(std::max_element(h.begin(), h.end()) - h.begin());
  for (std::size_t i = std::max(peak, skip) + 1; i < h.size(); ++i)
    if (h[i] > (1.0 + rel) * h[i - 1]) return false;
  return true;
}

inline void write_initial_map(const std::filesystem::path& dir, const InitialMap& v, const ExperimentConfig& c) {
  snapshot::save((dir / ("v_eps" + tag(v.epsilon) + ".bin")).string(), v.field);
  json meta{{"family", c.family}, {"params", v.boundary.params}, {"epsilon", v.epsilon},
            {"extension_tol", v.tol}, {"modulus", v.modulus.description}};
  std::ofstream(dir / ("v_eps" + tag(v.epsilon) + ".json")) << meta.dump(2) << "\n";
}

struct StageEvaluation {
  double residual = 0.0;
  bool pinned = true;
  bool positive = true;
  DistanceBound bound;
  double layer = 0.0;  // sup d(u, v_eps) on delta < x^m <= 2 delta
};

// A fixed number of grid rows above the floor sits at hyperbolic distance
// log(1 + h/delta) from it, which grows as delta shrinks; the layer
// delta < x^m <= 2 delta has the same hyperbolic width at every stage.
inline StageEvaluation evaluate_stage(const SolverState& s, const ModulusOfContinuity& g, double eps,
                                      double quad_tol) {
  StageEvaluation e;
  const SlabGrid& G = s.grid();
  for (std::size_t node = 0; node < G.node_count(); ++node) {
    if (G.is_boundary(node))
      for (std::size_t a = 0; a < s.u.components(); ++a)
        e.pinned = e.pinned && s.u.at(node)[a] == s.boundary.at(node)[a];
    e.positive = e.positive && s.u.at(node).back() > 0.0;
  }
  e.residual = sup_residual(s.u);
  e.bound = check_distance_bound(s, g, eps, quad_tol);
  for (std::size_t node : G.interior_nodes())
    if (G.height_of(node) <= 2.0 * s.delta * (1.0 + 1e-12))
      e.layer = std::max(e.layer, hyperbolic_distance(s.u.at(node), s.boundary.at(node)));
  return e;
}

}  // namespace detail

// The whole pipeline for one config. Nothing is written when out_dir is empty.
inline VerificationReport run_experiment(const ExperimentConfig& c, const std::filesystem::path& out_dir,
                                         std::ostream* log = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  auto note = [&](const std::string& s) {
    if (log) {
      const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      *log << "[" << std::fixed << std::setprecision(1) << sec << "s] " << s << std::endl;
      log->unsetf(std::ios::fixed);
    }
  };
  const bool write = !out_dir.empty();
  if (write) std::filesystem::create_directories(out_dir);

  VerificationReport rep;
  rep.name = c.name;
  rep.metadata = {{"family", c.family}, {"params", c.family_params}, {"m", c.m}, {"n", c.n},
                  {"epsilons", c.epsilons}, {"deltas", c.deltas}, {"seed", c.seed},
                  {"grid", {{"lateral_extent", c.lateral_extent}, {"lateral_nodes", c.lateral_nodes},
                            {"vertical_nodes", c.vertical_nodes}, {"ceiling", c.ceiling}}}};

  json& timing = rep.timing;
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
  const auto f = make_boundary_map(c.family, c.dims(), c.family_params);
  const auto g = detail::experiment_modulus(c, f);
  const SlabGrid grid = c.grid();
  const double h_max = *std::max_element(grid.spacing().begin(), grid.spacing().end());
  rep.metadata["spacing"] = grid.spacing();
  note("boundary family " + c.family + ", modulus " + g.description);

  // Integrability gate.
  auto& gate = rep.add("integrability", "dyadic quadrature of int_0^1 g(t)/t dt");
  const auto dini = integrability_check(g);
  const bool psi_ok = g.is_zero() || dini.finite;
  gate.status = psi_ok ? CheckStatus::pass : CheckStatus::fail;
  gate.measured = {{"finite", psi_ok}, {"value", psi_ok ? (g.is_zero() ? 0.0 : dini.value) : -1.0},
                   {"panels", dini.panels}};
  gate.detail = psi_ok ? detail::fmt("int_0^1 g/t = %.6g", g.is_zero() ? 0.0 : dini.value)
                       : DivergentModulusError("integrability").what();
  note("integrability: " + std::string(to_string(gate.status)));

  // Special-function table.
  const auto abscissa = specialfn::log_spaced(c.table_min, c.table_max, c.table_points);
  const auto table = specialfn::build_table(g, abscissa, c.quad_tol);
  if (write) {
    std::ofstream os(out_dir / "table.csv");
    specialfn::write_csv(os, table);
  }
  note("special-function table built");

  auto& psi_lap = rep.add("psi_laplacian", "grid Laplace-Beltrami of -psi against phi + (m-2) r psi'");
  if (!psi_ok) {
    psi_lap.detail = "skipped: psi does not exist for this modulus";
  } else {
    bool ok = true;
    std::vector<int> dims = {2, 3};
    if (c.m > 3) dims.push_back(c.m);
    for (int m : dims) {
      const auto r = check_psi_laplacian(table, g, m);
      psi_lap.measured["m" + std::to_string(m)] = {{"max_rel_error", r.max_rel_error}, {"min_slack", r.min_slack}};
      ok = ok && r.ok;
    }
    psi_lap.tolerances = {{"rel", 1e-3}};
    psi_lap.status = ok ? CheckStatus::pass : CheckStatus::fail;
    psi_lap.detail = ok ? "Delta(-psi) = phi + (m-2) r psi' >= phi on the abscissa" : "identity violated";
  }

  // Initial map v = {f, phi}; every v_eps differs only in the last component.
  const InitialMap v0 = build_initial_map(f, g, 0.0, grid, c.extension_tol);
  note("initial map sampled on " + std::to_string(grid.node_count()) + " nodes");

  // Boundary behaviour of the extension along the delta schedule.
  const auto profile = floor_profile(f, grid, c.deltas, c.extension_tol);
  auto& cont = rep.add("boundary_continuity", "Poisson extension against f on the floor heights");
  cont.measured = {{"heights", profile.heights}, {"sup_trace_error", profile.trace_error}};
  cont.tolerances = {{"slack", c.decay_slack}};
  cont.status = non_increasing(profile.trace_error, c.decay_slack) ? CheckStatus::pass : CheckStatus::fail;
  cont.detail = "sup |v - f| non-increasing as delta decreases";

  auto& prop2 = rep.add("vanishing_scaled_gradient", "x^m |grad_0 v| at the floor heights");
  prop2.measured = {{"heights", profile.heights}, {"sup_scaled_gradient", profile.scaled_gradient}};
  prop2.tolerances = {{"slack", c.decay_slack}};
  const bool decays = strictly_decaying(profile.scaled_gradient, c.decay_slack);
  prop2.status = decays ? CheckStatus::pass : CheckStatus::fail;
  prop2.detail = decays ? "x^m |grad_0 v| decreases with delta"
                        : "x^m |grad_0 v| does not decay toward the boundary (f not uniformly continuous?)";
  note("boundary profile done");

  // Derivative and ratio constants of v.
  auto& consts = rep.add("initial_map_constants", "grid differences of v; specialfn tables");
  if (g.is_zero()) {
    consts.detail = "skipped: constant boundary data (the estimates need nonconstant f)";
  } else {
    const std::size_t half_row = c.deltas.size() >= 2 ? row_at_height(grid, c.deltas[c.deltas.size() - 2]) : 0;
    const double cap = c.tension_height;
    const double c_tension = tension_constant(v0.field, cap);
    const double c3 = check_derivative_bounds(v0).gradient_phi;
    const auto ratios = specialfn::ratio_constants(table);
    rep.constants = {c_tension, c3, ratios.c4, ratios.c5, {}};
    json m = {{"C_tension", c_tension}, {"C3", c3}, {"C4", ratios.c4}, {"C5", ratios.c5},
              {"phi_prime_positive", ratios.phi_prime_positive}};
    bool ok = ratios.phi_prime_positive && std::isfinite(c_tension) && std::isfinite(c3);
    if (half_row > 0) {
      InitialMap upper = v0;
      upper.field = v0.field.restricted_to(grid.upper_part(half_row));
      const double t2 = tension_constant(upper.field, cap);
      const double c32 = check_derivative_bounds(upper).gradient_phi;
      m["delta_doubled"] = {{"C_tension", t2}, {"C3", c32}};
      ok = ok && stable_within(c_tension, t2, c.stability) && stable_within(c3, c32, c.stability);
    }
    const auto fine_table = specialfn::build_table(
        g, specialfn::log_spaced(c.table_min, c.table_max, 2 * c.table_points - 1), c.quad_tol);
    const auto fine_ratios = specialfn::ratio_constants(fine_table);
    m["abscissa_refined"] = {{"C4", fine_ratios.c4}, {"C5", fine_ratios.c5}};
    ok = ok && stable_within(ratios.c4, fine_ratios.c4, c.stability) &&
         stable_within(ratios.c5, fine_ratios.c5, c.stability);
    if (c.refine_grid) {
      note("building v on the refined grid");
      const InitialMap vf = build_initial_map(f, g, 0.0, detail::refined(grid), c.extension_tol);
      const double tf = tension_constant(vf.field, cap);
      const double c3f = check_derivative_bounds(vf).gradient_phi;
      m["grid_refined"] = {{"C_tension", tf}, {"C3", c3f}};
      ok = ok && stable_within(c_tension, tf, c.stability) && stable_within(c3, c3f, c.stability);
    }
    consts.measured = m;
    consts.tolerances = {{"stability", c.stability}, {"tension_height", cap}};
    consts.status = ok ? CheckStatus::pass : CheckStatus::fail;
    consts.detail = detail::fmt("C_tension=%.4g C3=%.4g C4=%.4g", c_tension, c3, ratios.c4) +
                   detail::fmt(" C5=%.4g", ratios.c5) + (ok ? "" : " (unstable under refinement)");
  }
  note("initial-map constants done");
  timing.push_back({{"phase", "preflight"}, {"end_s", elapsed()}});

  auto& solver = rep.add("solver", "tension flow residual, boundary pinning, positivity");
  auto& bound = rep.add("distance_bound", "max eps d(u, v_eps) / psi(x^m)");
  auto& trace = rep.add("boundary_trace", "sup d(u, v_eps) on the layer delta < x^m <= 2 delta");
  auto& subh = rep.add("subharmonic", "Delta d(u, v_eps) >= -|tau(v_eps)|");
  auto& trend = rep.add("continuation_trend", "sup d(u_k, u_{k+1}) on the nodes of stage k");
  auto& decay = rep.add("residual_decay", "residual history after the transient peak");
  if (!psi_ok) {
    for (auto* r : {&solver, &bound, &trace, &subh, &trend, &decay})
      r->detail = "skipped: integrability gate failed, no solve attempted";
  } else {
    bool solver_ok = true, bound_ok = true, trace_ok = true, subh_ok = true, trend_ok = true, decay_ok = true;
    bool stable_ok = true, finite_ok = true, ratio_ok = true;
    std::vector<double> final_bounds;
    for (double eps : c.epsilons) {
      const auto key = "eps=" + detail::tag(eps);
      const InitialMap v = with_epsilon(v0, eps);
      if (write) detail::write_initial_map(out_dir, v, c);
      note("solving eps = " + detail::tag(eps));
      const double solve_start = elapsed();
      std::vector<StageRecord> stages;
      try {
        stages = solve(v, detail::solver_config(c, eps), [&](std::size_t k, const SolverState& s) {
          if (s.steps % 50000 == 0)
            note("  stage " + std::to_string(k) + " step " + std::to_string(s.steps) + " residual " +
                 detail::tag(s.residual()));
        });
      } catch (const NumericalError& e) {
        solver.status = CheckStatus::fail;
        solver.detail = e.what();
        throw;
      }
      timing.push_back({{"phase", "solve"}, {"epsilon", eps}, {"seconds", elapsed() - solve_start}});
      json sj = json::array(), bj = json::array(), tj = json::array();
      std::vector<double> traces, cbs, dists;
      for (std::size_t k = 0; k < stages.size(); ++k) {
        const SolverState& s = stages[k].state;
        const auto e = detail::evaluate_stage(s, g, eps, c.quad_tol);
        const auto& b = e.bound;
        solver_ok = solver_ok && s.converged && e.residual < c.residual_tol && e.pinned && e.positive;
        decay_ok = decay_ok && detail::decays_after_peak(s.residual_history, 0.01);
        sj.push_back({{"delta", s.delta}, {"steps", s.steps}, {"residual", e.residual}, {"pinned", e.pinned},
                      {"positive", e.positive}});
        timing.push_back({{"phase", "stage"}, {"epsilon", eps}, {"delta", s.delta}, {"steps", s.steps},
                          {"wall_ms", s.wall_ms.empty() ? 0.0 : s.wall_ms.back()}});
        cbs.push_back(b.c_bound);
        bj.push_back({{"delta", s.delta}, {"C_bound", b.c_bound}, {"argmax", b.argmax}});
        traces.push_back(e.layer);
        tj.push_back({{"delta", s.delta}, {"layer", e.layer}, {"first_row", boundary_trace_error(s)}});
        if (k > 0) dists.push_back(stage_distance(stages[k - 1].state, s));
        if (write) {
          const std::string stem = "eps" + detail::tag(eps) + "_delta" + detail::tag(s.delta);
          snapshot::save((out_dir / ("state_" + stem + ".bin")).string(), s.u);
          std::ofstream rc(out_dir / ("residual_" + stem + ".csv"));
          write_residual_csv(rc, s);
          std::ofstream pc(out_dir / ("bound_profile_" + stem + ".csv"));
          pc << "x_m,sup_d,bound\n" << std::setprecision(10);
          for (std::size_t i = 0; i < b.height.size(); ++i)
            pc << b.height[i] << ',' << b.sup_distance[i] << ',' << b.c_bound / eps * b.psi[i] << '\n';
        }
      }
      solver.measured[key] = sj;
      bound.measured[key] = bj;
      trace.measured[key] = tj;
      trend.measured[key] = dists;
      if (cbs.size() >= 2) stable_ok = stable_ok && stable_within(cbs[cbs.size() - 2], cbs.back(), c.stability);
      for (double x : cbs) finite_ok = finite_ok && std::isfinite(x);
      final_bounds.push_back(cbs.back());
      rep.constants.c_bound[eps] = cbs.back();
      trace_ok = trace_ok && strictly_decaying(traces, 0.0);
      trend_ok = trend_ok && strictly_decaying(dists, 0.0);
      const double subh_start = elapsed();
      const auto sr = check_subharmonic_inequality(stages.back().state, c.subharmonic_allowance);
      timing.push_back({{"phase", "subharmonic"}, {"epsilon", eps}, {"seconds", elapsed() - subh_start}});
      subh.measured[key] = {{"nodes", sr.nodes}, {"raw_violations", sr.raw_violations},
                            {"violations", sr.violations}, {"worst_margin", sr.worst_margin},
                            {"allowance", sr.allowance}};
      subh_ok = subh_ok && sr.violations == 0;
      note(detail::fmt("eps = %g: C_bound %.4g, trace %.4g", eps, cbs.back(), traces.back()));
    }
    double eps_ratio = 1.0;
    if (final_bounds.size() >= 2) {
      const auto [lo, hi] = std::minmax_element(final_bounds.begin(), final_bounds.end());
      eps_ratio = *lo > 0.0 ? *hi / *lo : (*hi > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
      bound.measured["eps_ratio"] = eps_ratio;
      ratio_ok = eps_ratio <= c.epsilon_factor;
    }
    solver.status = solver_ok ? CheckStatus::pass : CheckStatus::fail;
    solver.tolerances = {{"residual_tol", c.residual_tol}};
    solver.detail = solver_ok ? "every stage converged, boundary bit-exact, y^n > 0" : "a stage failed";
    bound_ok = stable_ok && finite_ok && ratio_ok;
    bound.status = bound_ok ? CheckStatus::pass : CheckStatus::fail;
    bound.tolerances = {{"stability", c.stability}, {"epsilon_factor", c.epsilon_factor}};
    bound.detail = detail::fmt("C_bound at the last stage: %.4g (eps ratio %.3g)", final_bounds.front(), eps_ratio) +
                   (finite_ok ? "" : "; not finite") +
                   (stable_ok ? "" : "; moves by more than the allowance on the last delta halving") +
                   (ratio_ok ? "" : "; outside the eps window");
    trace.status = trace_ok ? CheckStatus::pass : CheckStatus::fail;
    trace.detail = trace_ok ? "strictly decreasing along the schedule" : "not strictly decreasing";
    subh.status = subh_ok ? CheckStatus::pass : CheckStatus::fail;
    subh.tolerances = {{"allowance", detail::fmt("%g * h + |tau(u)|", c.subharmonic_allowance)},
                       {"h", h_max}};
    subh.detail = subh_ok ? "no violations beyond the allowance" : "violations beyond the allowance";
    trend.status = trend_ok ? CheckStatus::pass : CheckStatus::fail;
    trend.detail = trend_ok ? "stage-to-stage distance decreasing" : "stage-to-stage distance not decreasing";
    decay.status = decay_ok ? CheckStatus::pass : CheckStatus::fail;
    decay.tolerances = {{"rel", 0.01}};
    decay.detail = decay_ok ? "non-increasing within 1% once past step 100 and the transient peak"
                            : "residual rose by more than 1% after the transient";
  }
  // Wall-clock numbers stay out of the report so identical runs give identical reports.
  timing.push_back({{"phase", "total"}, {"end_s", elapsed()}});
  if (write) {
    std::ofstream(out_dir / "timing.json") << timing.dump(2) << "\n";
    std::ofstream(out_dir / "report.json") << to_json(rep).dump(2) << "\n";
    std::ofstream tx(out_dir / "report.txt");
    write_text(tx, rep);
  }
  return rep;
}

// Re-verifies a saved state against the v_eps the config defines on the
// snapshot's nodes: residual, pinning, positivity, distance bound, trace
// layer and the subharmonic inequality.
inline VerificationReport check_snapshot(const ExperimentConfig& c, const MapField& u, double eps) {
  const SlabGrid full = c.grid();
  if (!(u.grid().same_lattice(full)) || u.components() != static_cast<std::size_t>(c.n))
    throw ConfigError("check: snapshot grid is not a window of the config grid");
  const auto f = make_boundary_map(c.family, c.dims(), c.family_params);
  const auto g = detail::experiment_modulus(c, f);
  VerificationReport rep;
  rep.name = c.name + " (snapshot)";
  rep.metadata = {{"family", c.family}, {"epsilon", eps}, {"floor", u.grid().floor()},
                  {"nodes", u.grid().node_count()}};
  auto& gate = rep.add("integrability", "dyadic quadrature of int_0^1 g(t)/t dt");
  const bool psi_ok = g.is_zero() || integrability_check(g).finite;
  gate.status = psi_ok ? CheckStatus::pass : CheckStatus::fail;
  if (!psi_ok) {
    gate.detail = DivergentModulusError("integrability").what();
    return rep;
  }
  InitialMap window = build_initial_map(f, g, eps, u.grid(), c.extension_tol);
  SolverState s;
  s.delta = u.grid().floor();
  s.boundary = std::move(window.field);
  s.u = u;
  const auto e = detail::evaluate_stage(s, g, eps, c.quad_tol);

  auto& solver = rep.add("solver", "tension residual, boundary pinning, positivity");
  solver.measured = {{"residual", e.residual}, {"pinned", e.pinned}, {"positive", e.positive}};
  solver.tolerances = {{"residual_tol", c.residual_tol}};
  const bool ok = e.residual < c.residual_tol && e.pinned && e.positive;
  solver.status = ok ? CheckStatus::pass : CheckStatus::fail;
  solver.detail = detail::fmt("residual %.3g", e.residual) + (e.pinned ? "" : "; boundary differs from v_eps") +
                  (e.positive ? "" : "; y^n <= 0 somewhere");

  auto& bound = rep.add("distance_bound", "max eps d(u, v_eps) / psi(x^m)");
  bound.measured = {{"C_bound", e.bound.c_bound}, {"argmax", e.bound.argmax}};
  bound.status = std::isfinite(e.bound.c_bound) ? CheckStatus::pass : CheckStatus::fail;
  bound.detail = detail::fmt("C_bound %.4g", e.bound.c_bound);
  rep.constants.c_bound[eps] = e.bound.c_bound;

  auto& trace = rep.add("boundary_trace", "sup d(u, v_eps) on the layer delta < x^m <= 2 delta");
  trace.measured = {{"layer", e.layer}, {"first_row", boundary_trace_error(s)}};
  trace.status = std::isfinite(e.layer) ? CheckStatus::pass : CheckStatus::fail;
  trace.detail = detail::fmt("layer sup %.4g (a trend needs the full run)", e.layer);

  auto& subh = rep.add("subharmonic", "Delta d(u, v_eps) >= -|tau(v_eps)|");
  const auto sr = check_subharmonic_inequality(s, c.subharmonic_allowance);
  subh.measured = {{"nodes", sr.nodes}, {"raw_violations", sr.raw_violations}, {"violations", sr.violations},
                   {"worst_margin", sr.worst_margin}, {"allowance", sr.allowance}};
  subh.status = sr.violations == 0 ? CheckStatus::pass : CheckStatus::fail;
  subh.detail = std::to_string(sr.violations) + " violations beyond the allowance";
  return rep;
}

}  // namespace hmdp
