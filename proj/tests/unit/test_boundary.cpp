#include <gtest/gtest.h>

#include <cmath>

#include "hmdp/boundary.hpp"
#include "hmdp/specialfn.hpp"

using namespace hmdp;

TEST(Families, BuiltinsConstructWithDefaults) {
  for (const auto& info : builtin_families()) {
    const auto f = make_boundary_map(info.name, ModelDims(2, 3));
    EXPECT_EQ(f.family_tag, info.name);
    const std::vector<double> y{0.25};
    const auto v = f(y);
    ASSERT_EQ(v.size(), 2u);
    for (double c : v) EXPECT_TRUE(std::isfinite(c));
    ASSERT_TRUE(f.modulus.has_value());
  }
}

TEST(Families, UnknownNamesAndParametersAreConfigErrors) {
  EXPECT_THROW(make_boundary_map("nope", ModelDims(2, 2)), ConfigError);
  EXPECT_THROW(make_boundary_map("cos", ModelDims(2, 2), {{"frequency", 2.0}}), ConfigError);
  EXPECT_THROW(make_boundary_map("holder_bump", ModelDims(2, 2), {{"beta", 1.5}}), ConfigError);
}

TEST(Families, ProfilesSitInFirstComponent) {
  const auto f = make_boundary_map("heaviside", ModelDims(3, 3), {{"height", 2.0}});
  EXPECT_EQ(f(std::vector<double>{0.1, -5.0}), (std::vector<double>{2.0, 0.0}));
  EXPECT_EQ(f(std::vector<double>{-0.1, 5.0}), (std::vector<double>{0.0, 0.0}));
  EXPECT_FALSE(f.uniformly_continuous);
  const auto b = make_boundary_map("holder_bump", ModelDims(3, 2));
  EXPECT_DOUBLE_EQ(b(std::vector<double>{0.0, 0.0})[0], 1.0);
  EXPECT_DOUBLE_EQ(b(std::vector<double>{0.6, 0.8})[0], 0.0);
  EXPECT_NEAR(b(std::vector<double>{0.25, 0.0})[0], 0.5, 1e-15);
}

TEST(Modulus, AnalyticModulusBoundsIncrements) {
  // |f(x) - f(y)| <= g(|x - y|) on random pairs for every continuous family.
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0), r(0.0, 0.5);
  for (const char* name : {"ramp", "cos", "holder_bump"}) {
    const auto f = make_boundary_map(name, ModelDims(2, 2));
    const auto& g = *f.modulus;
    for (int i = 0; i < 2000; ++i) {
      const double x = u(rng), y = x + r(rng);
      const double inc = std::abs(f(std::vector<double>{x})[0] - f(std::vector<double>{y})[0]);
      EXPECT_LE(inc, g(y - x) * (1.0 + 1e-12) + 1e-15) << name << " " << x << " " << y;
    }
  }
}

TEST(Modulus, SampledEnvelopeIsBoundedAndDeterministic) {
  const auto f = make_boundary_map("holder_bump", ModelDims(2, 2));
  const auto radii = specialfn::log_spaced(1e-3, 4.0, 20);
  const auto a = estimate_modulus(f, radii, 2000, 3.0, 99);
  const auto b = estimate_modulus(f, radii, 2000, 3.0, 99);
  double prev = 0.0;
  for (double r : radii) {
    EXPECT_EQ(a(r), b(r));
    EXPECT_LE(a(r), 2.0 * f.osc_bound);
    EXPECT_LE(a(r), (*f.modulus)(r) * (1.0 + 1e-12));
    EXPECT_GE(a(r), prev);
    prev = a(r);
  }
  // At the largest radius a pair through the peak and the flat part is found.
  EXPECT_GT(a(4.0), 0.9 * f.osc_bound);
  EXPECT_THROW(estimate_modulus(f, radii, 10, 3.0), DomainError);
}

TEST(Modulus, SampledHeavisideSeesTheJumpAtModerateRadii) {
  // Small radii rarely straddle the jump, so the sampled envelope alone cannot
  // certify a non-Dini modulus; the analytic one does.
  const auto f = make_boundary_map("heaviside", ModelDims(2, 2));
  const auto g = estimate_modulus(f, specialfn::log_spaced(0.05, 1.0, 5), 2000, 2.0);
  EXPECT_DOUBLE_EQ(g(0.5), 1.0);
  EXPECT_FALSE(integrability_check(*f.modulus).finite);
}
