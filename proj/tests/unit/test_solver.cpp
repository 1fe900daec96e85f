#include <gtest/gtest.h>

#include <cmath>

#include "hmdp/checks.hpp"
#include "hmdp/solver.hpp"

using namespace hmdp;

namespace {

SolverConfig config(double eps, std::vector<double> deltas) {
  SolverConfig c;
  c.epsilon = eps;
  c.delta_schedule = std::move(deltas);
  return c;
}

// 33 x 32 slab on [-2, 2] x [0.05, 1.6]: rows at 0.05, 0.1, 0.2.
SlabGrid coarse() { return SlabGrid::uniform(ModelDims(2, 2), 2.0, 0.05, 1.6, 33, 32); }

bool decays_after_peak(const std::vector<double>& h, double rel) {
  const auto peak = std::size_t(std::max_element(h.begin(), h.end()) - h.begin());
  for (std::size_t i = peak + 1; i < h.size(); ++i)
    if (h[i] > (1.0 + rel) * h[i - 1]) return false;
  return true;
}

}  // namespace

TEST(Solver, ConstantDataGivesTheConstantMap) {
  const auto f = make_boundary_map("constant", ModelDims(2, 2), {{"value", 0.4}});
  const auto v = build_initial_map(f, *f.modulus, 0.1, coarse(), 1e-8);
  const auto stages = solve(v, config(0.1, {0.2, 0.1, 0.05}));
  ASSERT_EQ(stages.size(), 3u);
  for (const auto& s : stages) {
    EXPECT_TRUE(s.state.converged);
    EXPECT_LT(sup_residual(s.state.u), 1e-12);
    for (std::size_t k = 0; k < s.state.grid().node_count(); ++k) {
      // The Poisson integral of a constant is exact up to its quadrature tolerance.
      EXPECT_NEAR(s.state.u.at(k)[0], 0.4, 2e-8);
      EXPECT_NEAR(s.state.u.at(k)[1], 0.1, 1e-12);
    }
    EXPECT_EQ(boundary_trace_error(s.state), 0.0);
  }
}

TEST(Solver, HarmonicInputIsAFixedPoint) {
  const auto g = SlabGrid::uniform(ModelDims(2, 2), 1.0, 0.5, 1.5, 9, 9);
  SolverState st;
  st.delta = 0.5;
  st.u = MapField(g);
  for (std::size_t k = 0; k < g.node_count(); ++k) {
    const auto x = g.position(k);
    st.u.at(k)[0] = x[0];
    st.u.at(k)[1] = x[1];
  }
  st.boundary = st.u;
  const auto before = st.u.data();
  auto cfg = config(0.1, {0.5});
  relax(st, cfg);
  EXPECT_TRUE(st.converged);
  EXPECT_EQ(st.steps, 0u);
  EXPECT_EQ(st.u.data(), before);
  flow_step(st, cfg);
  for (std::size_t i = 0; i < before.size(); ++i) EXPECT_NEAR(st.u.data()[i], before[i], 1e-12);
}

TEST(Solver, StepDataConvergesWithPinnedBoundaryAndPositivity) {
  const auto f = make_boundary_map("heaviside", ModelDims(2, 2));
  const auto grid = coarse();
  const auto v = build_initial_map(f, *f.modulus, 0.1, grid, 1e-7);
  auto st = solve(v, config(0.1, {0.05})).front().state;
  EXPECT_TRUE(st.converged);
  EXPECT_LT(sup_residual(st.u), 1e-4);
  EXPECT_TRUE(decays_after_peak(st.residual_history, 0.01));
  const double tol = 10.0 * grid.spacing()[0] * grid.spacing()[0];
  for (std::size_t k = 0; k < grid.node_count(); ++k) {
    if (grid.is_boundary(k)) {
      EXPECT_EQ(st.u.at(k)[0], v.field.at(k)[0]);
      EXPECT_EQ(st.u.at(k)[1], v.field.at(k)[1]);
    }
    EXPECT_GT(st.u.at(k)[1], 0.0);
    // The lateral component stays inside the range of the data.
    EXPECT_GE(st.u.at(k)[0], -tol);
    EXPECT_LE(st.u.at(k)[0], 1.0 + tol);
  }
}

TEST(Solver, ContinuationStagesShareNodesAndPinTheirFloor) {
  const auto f = make_boundary_map("holder_bump", ModelDims(2, 2));
  const auto v = build_initial_map(f, *f.modulus, 0.1, coarse(), 1e-7);
  const auto stages = solve(v, config(0.1, {0.2, 0.1, 0.05}));
  ASSERT_EQ(stages.size(), 3u);
  for (const auto& s : stages) {
    const SlabGrid& g = s.state.grid();
    EXPECT_NEAR(g.floor(), s.delta, 1e-12);
    const auto expected = v.field.restricted_to(g);
    for (std::size_t k = 0; k < g.node_count(); ++k) {
      if (g.is_boundary(k)) {
        EXPECT_EQ(s.state.u.at(k)[1], expected.at(k)[1]);
      }
    }
    EXPECT_LT(sup_residual(s.state.u), 1e-4);
  }
  EXPECT_GT(stage_distance(stages[0].state, stages[1].state), 0.0);
  std::ostringstream os;
  write_residual_csv(os, stages[0].state);
  EXPECT_EQ(os.str().substr(0, 27), "step,sup_residual,wall_ms\n0");
}

TEST(Solver, RejectsInconsistentConfigs) {
  const auto f = make_boundary_map("ramp", ModelDims(2, 2));
  const auto v = build_initial_map(f, *f.modulus, 0.1, coarse(), 1e-6);
  EXPECT_THROW(solve(v, config(0.2, {0.1})), ConfigError);
  EXPECT_THROW(solve(v, config(0.1, {0.05, 0.1})), ConfigError);
  EXPECT_THROW(solve(v, config(0.1, {0.07})), ConfigError);
  auto bad = config(0.1, {0.1});
  bad.time_step_safety = 1.5;
  EXPECT_THROW(solve(v, bad), ConfigError);
}

TEST(Solver, StepBudgetExhaustionIsANumericalError) {
  const auto f = make_boundary_map("holder_bump", ModelDims(2, 2));
  const auto v = build_initial_map(f, *f.modulus, 0.1, coarse(), 1e-6);
  auto cfg = config(0.1, {0.05});
  cfg.max_steps = 50;
  EXPECT_THROW(solve(v, cfg), NumericalError);
}

TEST(Solver, SubharmonicInequalityHoldsOnConvergedState) {
  const auto f = make_boundary_map("holder_bump", ModelDims(2, 2));
  const auto v = build_initial_map(f, *f.modulus, 0.1, coarse(), 1e-7);
  const auto st = solve(v, config(0.1, {0.05})).front().state;
  const auto r = check_subharmonic_inequality(st, 1.0);
  EXPECT_EQ(r.violations, 0u);
  EXPECT_GT(r.nodes, 0u);
  // u = v: d = 0 everywhere, nothing to violate.
  SolverState same = st;
  same.u = same.boundary;
  EXPECT_EQ(check_subharmonic_inequality(same, 0.0).raw_violations, 0u);
  const auto b = check_distance_bound(same, *f.modulus, 0.1, 1e-8);
  EXPECT_EQ(b.c_bound, 0.0);
}
