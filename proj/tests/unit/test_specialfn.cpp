#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "hmdp/specialfn.hpp"

using namespace hmdp;
using namespace hmdp::specialfn;
namespace bq = boost::math::quadrature;

namespace {

constexpr double kPi = std::numbers::pi;

// g(t) = min(t, 1): phi has the closed form (r/2) log(1 + 1/r^2) + atan(r).
ModulusOfContinuity ramp() { return holder_modulus(1.0, 1.0, 1.0); }
double ramp_phi(double r) {
  const double l = r < 1.0 ? std::log1p(r * r) - 2.0 * std::log(r) : std::log1p(1.0 / (r * r));
  return 0.5 * r * l + std::atan(r);
}
double ramp_phi_prime(double r) { return 0.5 * std::log1p(1.0 / (r * r)); }
double ramp_phi_double_prime(double r) { return -1.0 / (r * (r * r + 1.0)); }

// Oracle psi' and psi for the ramp: exp_sinh on the closed-form phi, then
// tanh-sinh in s on [0, r] (psi' has a log singularity at 0).
double ramp_psi_prime(double r) {
  bq::exp_sinh<double> es;
  return es.integrate(
      [r](double t) {
        const double u = r + t;
        return u > 1e100 ? 0.0 : ramp_phi(u) / (u * u);
      },
      0.0,
                      std::numeric_limits<double>::infinity());
}
double ramp_psi(double r) {
  bq::tanh_sinh<double> ts;
  // Below 1e-100 the log^2 singularity contributes nothing representable.
  return ts.integrate([](double s) { return ramp_psi_prime(std::max(s, 1e-100)); }, 0.0, r);
}

// g = L t^beta without a cap in reach: phi(r) = L r^beta (pi/2) / cos(pi beta / 2).
ModulusOfContinuity power(double L, double beta) { return holder_modulus(L, beta, 1e30); }

}  // namespace

TEST(Quadrature, GaussKronrodHandlesKinksAndPolynomials) {
  auto r = quad::integrate([](double x) { return x * x * x; }, 0.0, 2.0);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.value, 4.0, 1e-13);
  const double kinks[] = {0.3};
  auto k = quad::integrate([](double x) { return std::abs(x - 0.3); }, 0.0, 1.0, kinks);
  EXPECT_NEAR(k.value, 0.045 + 0.245, 1e-13);
}

TEST(Quadrature, DyadicTailConvergesOrReportsDivergence) {
  quad::DyadicOptions opt;
  opt.abs_tol = 1e-10;
  auto ok = quad::integrate_to_zero([](double t) { return 1.0 / std::sqrt(t); }, 1.0, {}, opt);
  EXPECT_EQ(ok.status, quad::TailStatus::converged);
  EXPECT_NEAR(ok.value, 2.0, 1e-8);
  auto bad = quad::integrate_to_zero([](double t) { return 1.0 / t; }, 1.0, {}, opt);
  EXPECT_EQ(bad.status, quad::TailStatus::divergent);
}

TEST(Phi, ConstantModulusGivesHalfPiK) {
  for (double K : {0.5, 1.0, 3.0})
    for (double r : {1e-3, 0.1, 1.0, 50.0}) EXPECT_NEAR(phi(r, constant_modulus(K), 1e-10), K * kPi / 2.0, 1e-8);
}

TEST(Phi, ZeroModulusGivesZero) {
  const auto g = zero_modulus();
  EXPECT_EQ(phi(0.3, g), 0.0);
  EXPECT_EQ(psi(0.3, g), 0.0);
  EXPECT_EQ(psi_prime(0.3, g), 0.0);
}

TEST(Phi, RampClosedForms) {
  const auto g = ramp();
  for (double r : {0.01, 0.1, 0.5, 1.0, 3.0, 20.0}) {
    EXPECT_NEAR(phi(r, g, 1e-11), ramp_phi(r), 1e-9) << r;
    EXPECT_NEAR(phi_prime(r, g, 1e-11), ramp_phi_prime(r), 1e-8) << r;
    EXPECT_NEAR(phi_double_prime(r, g, 1e-11), ramp_phi_double_prime(r), 1e-7 * (1.0 + 1.0 / r)) << r;
  }
  // Frozen oracle value: phi(1) = log(2)/2 + pi/4.
  EXPECT_NEAR(phi(1.0, g, 1e-12), 1.1319717536774211, 1e-10);
}

TEST(Phi, PowerModulusScaling) {
  for (double beta : {0.25, 0.5, 0.75}) {
    const auto g = power(2.0, beta);
    const double c = 2.0 * (kPi / 2.0) / std::cos(kPi * beta / 2.0);
    for (double r : {0.01, 0.3, 2.0}) EXPECT_NEAR(phi(r, g, 1e-10) / std::pow(r, beta), c, 1e-6 * c) << beta;
  }
}

TEST(Phi, RoutesAgree) {
  // Derivatives from g and, after integration by parts, from g'.
  const double tol = 1e-8;
  for (const auto& g : {ramp(), holder_modulus(1.0, 0.5, 1.0), power(1.0, 0.5)}) {
    for (double r : {0.01, 0.2, 1.0, 5.0}) {
      EXPECT_NEAR(phi_prime(r, g, tol), phi_prime_by_parts(r, g, tol), 10.0 * tol / std::min(r, 1.0)) << r;
      EXPECT_NEAR(phi_double_prime(r, g, tol), phi_double_prime_by_parts(r, g, tol),
                  10.0 * tol / std::min(r * r, 1.0))
          << r;
    }
  }
}

TEST(Phi, PositiveIncreasingConcave) {
  const auto g = holder_modulus(1.0, 0.5, 1.0);
  double prev = 0.0;
  for (double r : log_spaced(1e-3, 10.0, 25)) {
    const double p = phi(r, g);
    EXPECT_GT(p, prev);
    EXPECT_GT(phi_prime(r, g), 0.0);
    EXPECT_LT(phi_double_prime(r, g), 0.0);
    EXPECT_LE(p, g.K * kPi / 2.0);
    prev = p;
  }
}

TEST(Psi, RampMatchesOracle) {
  const auto g = ramp();
  for (double r : {0.05, 0.5, 1.0, 4.0}) {
    EXPECT_NEAR(psi_prime_kernel(r, g, 1e-10), ramp_psi_prime(r), 1e-8 * std::max(1.0, ramp_psi_prime(r))) << r;
    EXPECT_NEAR(psi(r, g, 1e-10), ramp_psi(r), 1e-8) << r;
  }
}

TEST(Psi, KernelAndNestedRoutesAgree) {
  const double tol = 1e-8;
  for (const auto& g : {ramp(), holder_modulus(1.0, 0.5, 1.0)}) {
    for (double r : {0.1, 1.0, 3.0}) {
      EXPECT_NEAR(psi_kernel(r, g, tol), psi_nested(r, g, tol), 10.0 * tol) << r;
      EXPECT_NEAR(psi_prime_kernel(r, g, tol), psi_prime(r, g, tol), 10.0 * tol / std::min(r, 1.0)) << r;
    }
  }
}

TEST(Psi, SecondDerivativeIsMinusPhiOverRSquared) {
  const auto g = holder_modulus(1.0, 0.5, 1.0);
  for (double r : {0.1, 0.5, 1.0}) {
    const double h = 1e-3 * r;
    const double d2 = (psi(r + h, g, 1e-12) - 2.0 * psi(r, g, 1e-12) + psi(r - h, g, 1e-12)) / (h * h);
    const double expected = -phi(r, g, 1e-12) / (r * r);
    EXPECT_NEAR(d2 / expected, 1.0, 1e-3) << r;
  }
}

TEST(Psi, MonotoneAndVanishingAtZero) {
  const auto g = holder_modulus(1.0, 0.5, 1.0);
  double prev = 0.0;
  for (double r : log_spaced(1e-4, 10.0, 20)) {
    const double p = psi(r, g);
    EXPECT_GT(p, prev);
    prev = p;
  }
  EXPECT_LT(psi(1e-8, g), 1e-3);
}

TEST(Psi, RefusesNonDiniModulus) {
  for (const auto& g : {constant_modulus(1.0), log_modulus()}) {
    EXPECT_THROW(psi(0.5, g), DivergentModulusError);
    EXPECT_THROW(psi_prime(0.5, g), DivergentModulusError);
    try {
      psi(0.5, g);
    } catch (const DivergentModulusError& e) {
      EXPECT_NE(std::string(e.what()).find("Dini"), std::string::npos);
    }
    // phi itself still exists.
    EXPECT_TRUE(std::isfinite(phi(0.5, g)));
  }
}

TEST(Integrability, PowerModuliAreFinite) {
  for (double beta : {0.25, 0.5, 1.0}) {
    const auto r = integrability_check(holder_modulus(1.0, beta, 2.0));
    ASSERT_TRUE(r.finite) << beta;
    EXPECT_NEAR(r.value, 1.0 / beta, 1e-8) << beta;
  }
}

TEST(Integrability, ConstantAndLogModuliDiverge) {
  EXPECT_FALSE(integrability_check(constant_modulus(1.0)).finite);
  EXPECT_FALSE(integrability_check(log_modulus()).finite);
}

TEST(Table, ColumnsAndRatioConstants) {
  const auto g = holder_modulus(1.0, 0.5, 1.0);
  const auto t = build_table(g, log_spaced(1e-3, 10.0, 12));
  ASSERT_EQ(t.size(), 12u);
  EXPECT_TRUE(t.psi_available);
  const auto c = ratio_constants(t);
  EXPECT_TRUE(c.phi_prime_positive);
  EXPECT_GT(c.c4, 0.0);
  EXPECT_LT(c.c4, 1.0);
  EXPECT_GT(c.c5, 0.0);
  const auto bad = build_table(constant_modulus(1.0), log_spaced(0.1, 1.0, 3));
  EXPECT_FALSE(bad.psi_available);
  EXPECT_TRUE(std::isnan(bad.psi[0]));
  std::ostringstream os;
  write_csv(os, t);
  EXPECT_EQ(os.str().substr(0, 6), "r,phi,");
}
