#pragma once

// Boundary data f: R^{m-1} -> R^{n-1}, moduli of continuity
// g(r) = sup_{|x'-y'| <= r} |f(y') - f(x')|, and the built-in analytic
// families used as oracles.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hmdp/errors.hpp"
#include "hmdp/geometry.hpp"
#include "hmdp/quadrature.hpp"

namespace hmdp {

// g(r) <= L r^beta for r <= 1.
struct HolderCertificate {
  double L = 1.0;
  double beta = 1.0;
};

// A nondecreasing g: (0, inf) -> [0, K] with optional a.e. derivative.
struct ModulusOfContinuity {
  std::function<double(double)> eval;
  double K = 0.0;
  std::function<double(double)> derivative;  // empty when not available
  std::optional<HolderCertificate> holder;
  std::vector<double> kinks;  // radii where g or g' fails to be smooth
  std::string description;

  double operator()(double r) const { return eval(r); }
  bool has_derivative() const { return static_cast<bool>(derivative); }
  // True when g vanishes identically (constant boundary data).
  bool is_zero() const { return K == 0.0; }
};

inline ModulusOfContinuity zero_modulus() {
  ModulusOfContinuity g;
  g.eval = [](double) { return 0.0; };
  g.derivative = [](double) { return 0.0; };
  g.K = 0.0;
  g.holder = HolderCertificate{0.0, 1.0};
  g.description = "zero";
  return g;
}

// g = K for every r > 0; the modulus of a jump. Fails the Dini condition.
inline ModulusOfContinuity constant_modulus(double K) {
  if (!(K > 0.0)) throw DomainError("constant_modulus: K must be > 0");
  ModulusOfContinuity g;
  g.eval = [K](double r) { return r > 0.0 ? K : 0.0; };
  g.derivative = [](double) { return 0.0; };
  g.K = K;
  g.description = "constant K=" + std::to_string(K);
  return g;
}

// g(r) = min(L r^beta, K) with its exact derivative away from the cap.
inline ModulusOfContinuity holder_modulus(double L, double beta, double K) {
  if (!(L > 0.0) || !(beta > 0.0) || beta > 1.0 || !(K > 0.0))
    throw DomainError("holder_modulus: need L > 0, 0 < beta <= 1, K > 0");
  const double cap_radius = std::pow(K / L, 1.0 / beta);
  ModulusOfContinuity g;
  g.eval = [=](double r) { return r <= 0.0 ? 0.0 : std::min(L * std::pow(r, beta), K); };
  g.derivative = [=](double r) {
    return (r > 0.0 && r < cap_radius) ? L * beta * std::pow(r, beta - 1.0) : 0.0;
  };
  g.K = K;
  g.holder = HolderCertificate{L, beta};
  g.kinks = {cap_radius};
  g.description = "holder L=" + std::to_string(L) + " beta=" + std::to_string(beta) +
                  " K=" + std::to_string(K);
  return g;
}

// g(t) = 1/log(e/t) on (0, 1], capped at 1: uniformly continuous but not Dini.
inline ModulusOfContinuity log_modulus() {
  ModulusOfContinuity g;
  g.eval = [](double t) {
    if (t <= 0.0) return 0.0;
    return t >= 1.0 ? 1.0 : 1.0 / (1.0 - std::log(t));
  };
  g.derivative = [](double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    const double l = 1.0 - std::log(t);
    return 1.0 / (t * l * l);
  };
  g.K = 1.0;
  g.kinks = {1.0};
  g.description = "1/log(e/t)";
  return g;
}

// ---------------------------------------------------------------------------
// Boundary maps
// ---------------------------------------------------------------------------

using BoundaryEval = std::function<void(std::span<const double>, std::span<double>)>;
// Distances t > 0 along y' = origin + t * direction where f is not smooth.
using RayBreaks =
    std::function<std::vector<double>(std::span<const double>, std::span<const double>)>;

struct BoundaryMap {
  ModelDims dims;
  BoundaryEval eval;
  double osc_bound = 0.0;  // sup |f(x') - f(y')|
  double sup_norm = 0.0;   // sup |f|
  std::string family_tag;
  std::map<std::string, double> params;
  std::optional<ModulusOfContinuity> modulus;  // analytic modulus, if known
  RayBreaks ray_breaks;
  bool uniformly_continuous = true;

  std::vector<double> operator()(std::span<const double> y) const {
    std::vector<double> out(static_cast<std::size_t>(dims.n - 1), 0.0);
    eval(y, out);
    return out;
  }
};

namespace detail {

inline double get_param(const std::map<std::string, double>& p, const std::string& key, double def) {
  auto it = p.find(key);
  return it == p.end() ? def : it->second;
}

// Breaks where the first lateral coordinate crosses each level.
inline RayBreaks planar_breaks(std::vector<double> levels) {
  return [levels = std::move(levels)](std::span<const double> o, std::span<const double> w) {
    std::vector<double> out;
    if (w[0] == 0.0) return out;
    for (double c : levels) {
      const double t = (c - o[0]) / w[0];
      if (t > 0.0) out.push_back(t);
    }
    return out;
  };
}

// Breaks on the sphere |y'| = radius plus the closest approach to the origin.
inline RayBreaks radial_breaks(double radius) {
  return [radius](std::span<const double> o, std::span<const double> w) {
    double ow = 0.0, oo = 0.0, ww = 0.0;
    for (std::size_t i = 0; i < o.size(); ++i) {
      ow += o[i] * w[i];
      oo += o[i] * o[i];
      ww += w[i] * w[i];
    }
    std::vector<double> out;
    const double closest = -ow / ww;
    if (closest > 0.0) out.push_back(closest);
    const double disc = ow * ow - ww * (oo - radius * radius);
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      for (double t : {(-ow - sq) / ww, (-ow + sq) / ww})
        if (t > 0.0) out.push_back(t);
    }
    return out;
  };
}

inline RayBreaks no_breaks() {
  return [](std::span<const double>, std::span<const double>) { return std::vector<double>{}; };
}

// Profile in the first component, zeros in the others.
inline BoundaryEval first_component(std::function<double(std::span<const double>)> profile) {
  return [profile = std::move(profile)](std::span<const double> y, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    out[0] = profile(y);
  };
}

}  // namespace detail

struct FamilyInfo {
  std::string name;
  std::string summary;
  std::map<std::string, double> defaults;
};

// Built-in analytic families. Apart from `constant`, the profile sits in the
// first target component and the remaining n-2 components are zero.
inline const std::vector<FamilyInfo>& builtin_families() {
  static const std::vector<FamilyInfo> families = {
      {"constant", "f = (c, ..., c); g = 0", {{"value", 1.0}}},
      {"heaviside", "f^1 = height * [y^1 >= 0]; g = height for r > 0 (not uniformly continuous)",
       {{"height", 1.0}}},
      {"ramp", "f^1 = min(max(y^1, 0), 1); g = min(r, 1)", {}},
      {"cos", "f^1 = cos(k y^1); g = 2 sin(min(k r, pi) / 2)", {{"k", 1.0}}},
      {"holder_bump",
       "f^1 = A (1 - min(|y'|/rho, 1)^beta); g = A min(r/rho, 1)^beta",
       {{"amplitude", 1.0}, {"beta", 0.5}, {"radius", 1.0}}},
  };
  return families;
}

inline BoundaryMap make_boundary_map(const std::string& family, ModelDims dims,
                                     const std::map<std::string, double>& params = {}) {
  const auto& fams = builtin_families();
  auto it = std::find_if(fams.begin(), fams.end(), [&](const auto& f) { return f.name == family; });
  if (it == fams.end()) throw ConfigError("unknown boundary family '" + family + "'");
  for (const auto& [key, value] : params) {
    if (!it->defaults.count(key))
      throw ConfigError("family '" + family + "' has no parameter '" + key + "'");
    if (!std::isfinite(value)) throw ConfigError("family parameter '" + key + "' is not finite");
  }
  std::map<std::string, double> p = it->defaults;
  for (const auto& [key, value] : params) p[key] = value;

  BoundaryMap f;
  f.dims = dims;
  f.family_tag = family;
  f.params = p;
  const double comps = double(dims.n - 1);

  if (family == "constant") {
    const double c = p["value"];
    f.eval = [c](std::span<const double>, std::span<double> out) {
      std::fill(out.begin(), out.end(), c);
    };
    f.osc_bound = 0.0;
    f.sup_norm = std::abs(c) * std::sqrt(comps);
    f.modulus = zero_modulus();
    f.ray_breaks = detail::no_breaks();
  } else if (family == "heaviside") {
    const double hgt = p["height"];
    if (!(hgt > 0.0)) throw ConfigError("heaviside: height must be > 0");
    f.eval = detail::first_component([hgt](std::span<const double> y) { return y[0] >= 0.0 ? hgt : 0.0; });
    f.osc_bound = hgt;
    f.sup_norm = hgt;
    f.modulus = constant_modulus(hgt);
    f.ray_breaks = detail::planar_breaks({0.0});
    f.uniformly_continuous = false;
  } else if (family == "ramp") {
    f.eval = detail::first_component([](std::span<const double> y) { return std::clamp(y[0], 0.0, 1.0); });
    f.osc_bound = 1.0;
    f.sup_norm = 1.0;
    f.modulus = holder_modulus(1.0, 1.0, 1.0);
    f.ray_breaks = detail::planar_breaks({0.0, 1.0});
  } else if (family == "cos") {
    const double k = p["k"];
    if (!(k > 0.0)) throw ConfigError("cos: k must be > 0");
    f.eval = detail::first_component([k](std::span<const double> y) { return std::cos(k * y[0]); });
    f.osc_bound = 2.0;
    f.sup_norm = 1.0;
    ModulusOfContinuity g;
    const double pi = std::numbers::pi;
    g.eval = [k, pi](double r) { return r <= 0.0 ? 0.0 : 2.0 * std::sin(std::min(k * r, pi) / 2.0); };
    g.derivative = [k, pi](double r) { return (r > 0.0 && k * r < pi) ? k * std::cos(k * r / 2.0) : 0.0; };
    g.K = 2.0;
    g.holder = HolderCertificate{k, 1.0};
    g.kinks = {pi / k};
    g.description = "2 sin(min(k r, pi)/2)";
    f.modulus = g;
    f.ray_breaks = detail::no_breaks();
  } else if (family == "holder_bump") {
    const double A = p["amplitude"], beta = p["beta"], rho = p["radius"];
    if (!(A > 0.0) || !(beta > 0.0) || beta > 1.0 || !(rho > 0.0))
      throw ConfigError("holder_bump: need amplitude > 0, 0 < beta <= 1, radius > 0");
    f.eval = detail::first_component([=](std::span<const double> y) {
      double r2 = 0.0;
      for (double c : y) r2 += c * c;
      return A * (1.0 - std::pow(std::min(std::sqrt(r2) / rho, 1.0), beta));
    });
    f.osc_bound = A;
    f.sup_norm = A;
    f.modulus = holder_modulus(A * std::pow(rho, -beta), beta, A);
    f.ray_breaks = detail::radial_breaks(rho);
  }
  return f;
}

// ---------------------------------------------------------------------------
// Modulus estimation and the Dini test
// ---------------------------------------------------------------------------

namespace detail {

inline double radical_inverse(std::uint64_t i, std::uint64_t base) {
  double inv = 1.0 / double(base), f = inv, r = 0.0;
  while (i > 0) {
    r += f * double(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

inline std::uint64_t nth_prime(std::size_t k) {
  static constexpr std::uint64_t primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  return primes[k % std::size(primes)];
}

}  // namespace detail

// Sampled lower envelope of the modulus of f. Base points follow a scrambled
// Halton sequence over [-W, W]^{m-1}; partners sit at distance exactly r for
// half the pairs and uniformly in [0, r] for the rest. A running maximum over
// the increasing radii enforces monotonicity; the returned g is the step
// function through the estimates, which can only under-estimate the true sup.
inline ModulusOfContinuity estimate_modulus(const BoundaryMap& f, std::span<const double> radii,
                                            std::size_t samples, double window_radius,
                                            std::uint64_t seed = 0x5eed) {
  if (radii.empty()) throw DomainError("estimate_modulus: empty radii");
  if (samples < 1000) throw DomainError("estimate_modulus: need at least 1000 samples per radius");
  if (!(window_radius > 0.0)) throw DomainError("estimate_modulus: window radius must be > 0");
  for (std::size_t i = 0; i < radii.size(); ++i)
    if (!(radii[i] > 0.0) || (i > 0 && !(radii[i] > radii[i - 1])))
      throw DomainError("estimate_modulus: radii must be positive and increasing");

  const auto d = static_cast<std::size_t>(f.dims.m - 1);
  const auto c = static_cast<std::size_t>(f.dims.n - 1);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> shift(d);
  for (auto& s : shift) s = unit(rng);

  std::vector<double> x(d), y(d), w(d), fx(c), fy(c);
  std::vector<double> est(radii.size(), 0.0);
  double running = 0.0;
  std::uint64_t counter = 1;
  for (std::size_t ir = 0; ir < radii.size(); ++ir) {
    const double r = radii[ir];
    double best = 0.0;
    for (std::size_t s = 0; s < samples; ++s, ++counter) {
      for (std::size_t a = 0; a < d; ++a) {
        const double u = std::fmod(detail::radical_inverse(counter, detail::nth_prime(a)) + shift[a], 1.0);
        x[a] = window_radius * (2.0 * u - 1.0);
      }
      double norm = 0.0;
      do {
        norm = 0.0;
        for (auto& wa : w) {
          wa = normal(rng);
          norm += wa * wa;
        }
      } while (norm == 0.0);
      norm = std::sqrt(norm);
      const double len = (s % 2 == 0) ? r : r * unit(rng);
      for (std::size_t a = 0; a < d; ++a) y[a] = x[a] + len * w[a] / norm;
      f.eval(x, fx);
      f.eval(y, fy);
      double diff = 0.0;
      for (std::size_t b = 0; b < c; ++b) {
        if (!std::isfinite(fx[b]) || !std::isfinite(fy[b]))
          throw NumericalError("estimate_modulus: boundary map returned a non-finite value");
        diff += (fx[b] - fy[b]) * (fx[b] - fy[b]);
      }
      best = std::max(best, std::sqrt(diff));
    }
    running = std::max(running, best);
    est[ir] = running;
  }

  ModulusOfContinuity g;
  std::vector<double> rs(radii.begin(), radii.end());
  g.eval = [rs, est](double r) {
    auto it = std::upper_bound(rs.begin(), rs.end(), r);
    if (it == rs.begin()) return 0.0;
    return est[std::size_t(it - rs.begin()) - 1];
  };
  g.K = est.back();
  g.kinks = rs;
  g.description = "sampled envelope (" + std::to_string(samples) + " pairs per radius)";
  return g;
}

struct IntegrabilityResult {
  bool finite = false;
  double value = 0.0;  // int_0^1 g(t)/t dt when finite
  std::size_t panels = 0;
  std::vector<double> contributions;  // dyadic panel integrals
};

// Dini test: int_0^1 g(t)/t dt on dyadic panels [2^{-k-1}, 2^{-k}]. Divergent
// when the panel contributions stop decaying geometrically for 20
// consecutive panels (or never certify a summable tail).
inline IntegrabilityResult integrability_check(const ModulusOfContinuity& g, double tol = 1e-10) {
  quad::DyadicOptions opt;
  opt.abs_tol = tol;
  auto r = quad::integrate_to_zero([&](double t) { return g(t) / t; }, 1.0, g.kinks, opt);
  IntegrabilityResult out;
  out.finite = r.status == quad::TailStatus::converged;
  out.value = out.finite ? r.value : std::numeric_limits<double>::infinity();
  out.panels = r.panels;
  out.contributions = std::move(r.contributions);
  return out;
}

}  // namespace hmdp
