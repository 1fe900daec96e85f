#pragma once

// Comparison functions built from a modulus of continuity g:
//
//   phi(r)  = int_0^inf r/(s^2+r^2) g(s) ds
//   psi(r)  = int_0^r int_s^inf u^{-2} phi(u) du ds,   psi'(r) = int_r^inf u^{-2} phi(u) du
//
// Every derivative that admits two formulas is exposed through both so the
// routes can be checked against each other.
//
// Integrals over (0, inf) in s use s = r tan(theta), under which
//   r ds/(s^2+r^2)                  -> d theta
//   (s^2-r^2) ds/(s^2+r^2)^2        -> -cos(2 theta) d theta / r
//   -2r(3s^2-r^2) ds/(s^2+r^2)^3    -> -2 cos^2(theta)(3 sin^2(theta) - cos^2(theta)) d theta / r^2
//   s ds/(s^2+r^2)                  -> tan(theta) d theta
//   2rs ds/(s^2+r^2)^2              -> sin(2 theta) d theta / r
// so all weights stay bounded.

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "hmdp/boundary.hpp"
#include "hmdp/quadrature.hpp"

namespace hmdp::specialfn {

inline constexpr double kHalfPi = std::numbers::pi / 2.0;

namespace detail {

// theta = (pi/2) P(w) with P(w) = I_w(4, 4) = 35w^4 - 84w^5 + 70w^6 - 20w^7.
// Near 0 this smooths g(r tan theta) ~ theta^beta; near 1 it absorbs the
// (pi/2 - theta)^{-beta} growth of unbounded moduli.
inline double smoothstep(double v) { return v * v * v * v * (35.0 + v * (-84.0 + v * (70.0 - 20.0 * v))); }
inline double dtheta_dw(double w) {
  const double a = w * (1.0 - w);
  return kHalfPi * 140.0 * a * a * a;
}

struct Angle {
  double theta, tan;
};

// Past the midpoint work with the complement pi/2 - theta so tan keeps its digits.
inline Angle angle_of(double w) {
  if (w <= 0.5) {
    const double th = kHalfPi * smoothstep(w);
    return {th, std::tan(th)};
  }
  const double c = kHalfPi * smoothstep(1.0 - w);
  return {kHalfPi - c, 1.0 / std::tan(c)};
}

inline std::vector<double> w_breaks(const ModulusOfContinuity& g, double r) {
  std::vector<double> out;
  for (double s : g.kinks)
    if (s > 0.0) {
      const double p = std::atan(s / r) / kHalfPi;
      if (p > 0.0 && p < 1.0) out.push_back(boost::math::ibeta_inv(4.0, 4.0, p));
    }
  return out;
}

inline void require_positive(double r, const char* what) {
  if (!(r > 0.0) || !std::isfinite(r)) throw DomainError(std::string(what) + ": r must be positive and finite");
}

// int_0^{pi/2} weight(theta) h(r tan theta) d theta with h = g or g'.
template <class H, class W>
double theta_integral_of(H&& h, const ModulusOfContinuity& g, double r, double tol, W&& weight,
                         const char* what) {
  quad::Options opt;
  opt.abs_tol = tol;
  opt.max_panels = 20000;
  const auto breaks = w_breaks(g, r);
  return quad::integrate_or_throw(
      [&](double w) {
        const double dw = dtheta_dw(w);
        if (dw == 0.0) return 0.0;
        const auto a = angle_of(w);
        return weight(a.theta) * h(r * a.tan) * dw;
      },
      0.0, 1.0, breaks, opt, (std::string(what) + " at r=" + std::to_string(r)).c_str());
}

template <class W>
double theta_integral(const ModulusOfContinuity& g, double r, double tol, W&& weight, const char* what) {
  return theta_integral_of(g.eval, g, r, tol, std::forward<W>(weight), what);
}

template <class W>
double theta_integral_derivative(const ModulusOfContinuity& g, double r, double tol, W&& weight,
                                 const char* what) {
  if (!g.has_derivative())
    throw DomainError(std::string(what) + ": route 2 needs the derivative g' of the modulus");
  return theta_integral_of(g.derivative, g, r, tol, std::forward<W>(weight), what);
}

}  // namespace detail

// phi(r) = int_0^{pi/2} g(r tan theta) d theta.
inline double phi(double r, const ModulusOfContinuity& g, double tol = 1e-8) {
  detail::require_positive(r, "phi");
  if (g.is_zero()) return 0.0;
  return detail::theta_integral(g, r, tol, [](double) { return 1.0; }, "phi");
}

// phi'(r) from g: int_0^inf (s^2-r^2)/(s^2+r^2)^2 g(s) ds.
inline double phi_prime(double r, const ModulusOfContinuity& g, double tol = 1e-8) {
  detail::require_positive(r, "phi_prime");
  if (g.is_zero()) return 0.0;
  return -detail::theta_integral(g, r, tol * r, [](double th) { return std::cos(2.0 * th); }, "phi_prime") / r;
}

// phi'(r) after integration by parts: int_0^inf s/(s^2+r^2) g'(s) ds.
inline double phi_prime_by_parts(double r, const ModulusOfContinuity& g, double tol = 1e-8) {
  detail::require_positive(r, "phi_prime_by_parts");
  if (g.is_zero()) return 0.0;
  return detail::theta_integral_derivative(g, r, tol, [](double th) { return std::tan(th); },
                                           "phi_prime_by_parts");
}

// phi''(r) from g, the sum of the kernels -2r/(s^2+r^2)^2 and
// -4r(s^2-r^2)/(s^2+r^2)^3.
inline double phi_double_prime(double r, const ModulusOfContinuity& g, double tol = 1e-8) {
  detail::require_positive(r, "phi_double_prime");
  if (g.is_zero()) return 0.0;
  const double v = detail::theta_integral(
      g, r, tol * r * r,
      [](double th) {
        const double c = std::cos(th), s = std::sin(th);
        return c * c * (3.0 * s * s - c * c);
      },
      "phi_double_prime");
  return -2.0 * v / (r * r);
}

// phi''(r) = -int_0^inf 2rs/(s^2+r^2)^2 g'(s) ds.
inline double phi_double_prime_by_parts(double r, const ModulusOfContinuity& g, double tol = 1e-8) {
  detail::require_positive(r, "phi_double_prime_by_parts");
  if (g.is_zero()) return 0.0;
  return -detail::theta_integral_derivative(g, r, tol * r, [](double th) { return std::sin(2.0 * th); },
                                            "phi_double_prime_by_parts") /
         r;
}

// Throws DivergentModulusError unless int_0^1 g(t)/t dt is finite.
inline void require_dini(const ModulusOfContinuity& g, const char* what) {
  if (g.is_zero()) return;
  if (!integrability_check(g).finite) throw DivergentModulusError(what);
}

namespace detail {

inline quad::DyadicOptions dyadic(double tol) {
  quad::DyadicOptions o;
  o.abs_tol = tol;
  o.panel_budget = 20000;
  return o;
}

template <class F>
double to_zero_or_throw(F&& f, double b, std::span<const double> breaks, double tol, const char* what) {
  auto r = quad::integrate_to_zero(std::forward<F>(f), b, breaks, dyadic(tol));
  if (r.status == quad::TailStatus::divergent) throw DivergentModulusError(what);
  if (r.status != quad::TailStatus::converged)
    throw NumericalError(std::string(what) + ": dyadic quadrature did not certify its tail");
  return r.value;
}

// Kinks of g(r y) for y in (0, 1] and of g(r / x) for x in (0, 1].
inline std::vector<double> scaled_kinks(const ModulusOfContinuity& g, double r, bool inverse) {
  std::vector<double> out;
  for (double s : g.kinks)
    if (s > 0.0) out.push_back(inverse ? r / s : s / r);
  return out;
}

}  // namespace detail

namespace detail {

inline double psi_prime_nested(double r, const ModulusOfContinuity& g, double tol) {
  // Dyadic panels in t resolve the transition of phi(r/t) near t ~ r.
  const double phi_tol = 0.1 * tol * r;
  const double inner = to_zero_or_throw([&](double t) { return phi(r / t, g, phi_tol); }, 1.0, {},
                                        0.5 * tol * r, "psi_prime");
  return inner / r;
}

}  // namespace detail

// psi'(r) = int_r^inf u^{-2} phi(u) du = (1/r) int_0^1 phi(r/t) dt, with phi
// itself evaluated by quadrature.
inline double psi_prime(double r, const ModulusOfContinuity& g, double tol = 1e-8) {
  detail::require_positive(r, "psi_prime");
  if (g.is_zero()) return 0.0;
  require_dini(g, "psi_prime");
  return detail::psi_prime_nested(r, g, tol);
}

// psi'(r) after exchanging the order of integration:
// int_0^inf log(1 + t^2/r^2) / (2 t^2) g(t) dt.
inline double psi_prime_kernel(double r, const ModulusOfContinuity& g, double tol = 1e-8) {
  detail::require_positive(r, "psi_prime_kernel");
  if (g.is_zero()) return 0.0;
  require_dini(g, "psi_prime_kernel");
  // t = r y on (0, 1]: log1p(y^2)/(2 y^2) g(r y) / r, bounded as y -> 0.
  quad::Options opt;
  opt.abs_tol = 0.25 * tol * r;
  opt.max_panels = 20000;
  const auto kin = detail::scaled_kinks(g, r, false);
  const double near = quad::integrate_or_throw(
      [&](double y) { return std::log1p(y * y) / (2.0 * y * y) * g(r * y); }, 0.0, 1.0, kin, opt,
      "psi_prime_kernel");
  // t = r / x on (0, 1]: log(1 + 1/x^2) g(r/x) / (2 r), log-singular at x = 0.
  const auto kinv = detail::scaled_kinks(g, r, true);
  const double far = detail::to_zero_or_throw(
      [&](double x) { return (std::log1p(x * x) - 2.0 * std::log(x)) * g(r / x); }, 1.0, kinv,
      0.5 * tol * r, "psi_prime_kernel");
  return near / r + far / (2.0 * r);
}

// psi(r) by nested quadrature: int_0^r psi'(s) ds with psi' = int_s^inf u^{-2} phi.
// psi' values are chained downward through the outer nodes: the first node
// integrates to infinity, every later one adds int_s^{s'} u^{-2} phi(u) du to
// its nearest evaluated neighbour s' > s.
inline double psi_nested(double r, const ModulusOfContinuity& g, double tol = 1e-8) {
  if (!(r >= 0.0) || !std::isfinite(r)) throw DomainError("psi_nested: r must be >= 0");
  if (r == 0.0 || g.is_zero()) return 0.0;
  require_dini(g, "psi_nested");
  std::map<double, double> known;
  auto psi_prime_at = [&](double s) {
    // Dyadic panel k around s has tolerance tol/(4(k+1)(k+2)) and width ~s/2;
    // psi' noise must stay well below that or the outer rule chases it.
    const double k = std::max(0.0, std::floor(std::log2(r / s)));
    const double local_tol = 0.02 * tol / ((k + 1.0) * (k + 2.0) * s);
    auto it = known.lower_bound(s);
    if (it != known.end() && it->first == s) return it->second;
    double value;
    if (it == known.end()) {
      value = detail::psi_prime_nested(s, g, 0.1 * local_tol);
    } else {
      quad::Options opt;
      opt.abs_tol = 0.1 * local_tol;
      opt.max_panels = 4000;
      const double phi_tol = std::max(0.01 * local_tol * s, 1e-15);
      value = it->second + quad::integrate_or_throw(
                               [&](double u) { return phi(u, g, phi_tol) / (u * u); }, s, it->first, {},
                               opt, "psi_nested");
    }
    known.emplace(s, value);
    return value;
  };
  return detail::to_zero_or_throw(psi_prime_at, r, {}, tol, "psi_nested");
}

// psi(r) = int_0^inf k(t, r) g(t) dt with
// k(t, r) = [r log(1 + t^2/r^2) + 2 t arctan(r/t)] / (2 t^2),
// the closed form of int_0^r (2t^2)^{-1} log(1 + t^2/s^2) ds.
inline double psi_kernel(double r, const ModulusOfContinuity& g, double tol = 1e-8) {
  if (!(r >= 0.0) || !std::isfinite(r)) throw DomainError("psi_kernel: r must be >= 0");
  if (r == 0.0 || g.is_zero()) return 0.0;
  require_dini(g, "psi_kernel");
  // t = r y on (0, 1]: [log1p(y^2) + 2 y atan(1/y)] / (2 y^2) g(r y) dy ~ pi/(2y) g(ry).
  const auto kin = detail::scaled_kinks(g, r, false);
  const double near = detail::to_zero_or_throw(
      [&](double y) {
        return (std::log1p(y * y) + 2.0 * y * std::atan(1.0 / y)) / (2.0 * y * y) * g(r * y);
      },
      1.0, kin, 0.5 * tol, "psi_kernel");
  // t = r / x on (0, 1]: [log(1 + 1/x^2) + 2 atan(x)/x] / 2 g(r/x) dx.
  const auto kinv = detail::scaled_kinks(g, r, true);
  const double far = detail::to_zero_or_throw(
      [&](double x) {
        return 0.5 * (std::log1p(x * x) - 2.0 * std::log(x) + 2.0 * std::atan(x) / x) * g(r / x);
      },
      1.0, kinv, 0.5 * tol, "psi_kernel");
  return near + far;
}

// psi via the single-integral kernel; the nested form is psi_nested.
inline double psi(double r, const ModulusOfContinuity& g, double tol = 1e-8) { return psi_kernel(r, g, tol); }

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

struct SpecialFunctionTable {
  std::vector<double> r;
  std::vector<double> phi, phi_prime, phi_double_prime, psi, psi_prime;
  double quad_tol = 1e-8;
  bool psi_available = false;  // false when g fails the Dini condition

  std::size_t size() const { return r.size(); }
};

inline std::vector<double> log_spaced(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0) || !(hi > lo) || count < 2) throw DomainError("log_spaced: need 0 < lo < hi, count >= 2");
  std::vector<double> out(count);
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < count; ++i) out[i] = std::exp(a + (b - a) * double(i) / double(count - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

// Tabulates phi and its derivatives (g-routes) and psi, psi' (kernel routes).
// psi columns are NaN when the modulus fails the Dini condition.
inline SpecialFunctionTable build_table(const ModulusOfContinuity& g, std::vector<double> abscissa,
                                        double tol = 1e-8) {
  SpecialFunctionTable t;
  t.quad_tol = tol;
  t.r = std::move(abscissa);
  t.psi_available = g.is_zero() || integrability_check(g).finite;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (double r : t.r) {
    t.phi.push_back(phi(r, g, tol));
    t.phi_prime.push_back(phi_prime(r, g, tol));
    t.phi_double_prime.push_back(phi_double_prime(r, g, tol));
    t.psi.push_back(t.psi_available ? psi_kernel(r, g, tol) : nan);
    t.psi_prime.push_back(t.psi_available ? psi_prime_kernel(r, g, tol) : nan);
  }
  return t;
}

inline void write_csv(std::ostream& os, const SpecialFunctionTable& t) {
  os << "r,phi,phi_prime,phi_double_prime,psi,psi_prime\n";
  os.precision(17);
  for (std::size_t i = 0; i < t.size(); ++i)
    os << t.r[i] << ',' << t.phi[i] << ',' << t.phi_prime[i] << ',' << t.phi_double_prime[i] << ','
       << t.psi[i] << ',' << t.psi_prime[i] << '\n';
}

// Empirical constants of the phi-derivative bounds over a table:
// c4 = max {|r phi'|, |r^2 phi''|} / phi, c5 = max |r phi''| / phi'.
struct RatioConstants {
  double c4 = 0.0;
  double c5 = 0.0;
  bool phi_prime_positive = true;
};

inline RatioConstants ratio_constants(const SpecialFunctionTable& t) {
  RatioConstants c;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double r = t.r[i];
    if (t.phi[i] > 0.0)
      c.c4 = std::max(c.c4, std::max(std::abs(r * t.phi_prime[i]), std::abs(r * r * t.phi_double_prime[i])) /
                                t.phi[i]);
    if (t.phi_prime[i] > 0.0)
      c.c5 = std::max(c.c5, std::abs(r * t.phi_double_prime[i]) / t.phi_prime[i]);
    else
      c.phi_prime_positive = false;
  }
  return c;
}

}  // namespace hmdp::specialfn
