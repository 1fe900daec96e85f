#pragma once

// Adaptive Gauss-Kronrod quadrature on finite intervals, plus a dyadic
// integrator for integrands with an integrable (or not) singularity at 0.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "hmdp/errors.hpp"

namespace hmdp::quad {

struct Result {
  double value = 0.0;
  double error = 0.0;
  std::size_t evaluations = 0;
  bool converged = false;
};

struct Options {
  double abs_tol = 1e-10;
  std::size_t max_panels = 4000;
};

namespace detail {

// 15-point Kronrod nodes on [-1, 1] (non-negative half) and weights; the
// odd-indexed nodes carry the embedded 7-point Gauss rule.
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& other) const { return error < other.error; }
};

template <class F>
Panel gauss_kronrod_15(F&& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  std::array<double, 7> lo{}, hi{};
  double kronrod = fc * kKronrodWeights[7];
  double gauss = fc * kGaussWeights[3];
  for (std::size_t j = 0; j < 7; ++j) {
    const double dx = half * kKronrodNodes[j];
    lo[j] = f(center - dx);
    hi[j] = f(center + dx);
    const double sum = lo[j] + hi[j];
    kronrod += kKronrodWeights[j] * sum;
    if (j % 2 == 1) gauss += kGaussWeights[j / 2] * sum;
  }
  // QUADPACK error scaling: |K - G| measured against the variation of f.
  const double mean = 0.5 * kronrod;
  double asc = kKronrodWeights[7] * std::abs(fc - mean);
  for (std::size_t j = 0; j < 7; ++j)
    asc += kKronrodWeights[j] * (std::abs(lo[j] - mean) + std::abs(hi[j] - mean));
  asc *= std::abs(half);
  kronrod *= half;
  gauss *= half;
  double err = std::abs(kronrod - gauss);
  if (asc != 0.0 && err != 0.0) err = asc * std::min(1.0, std::pow(200.0 * err / asc, 1.5));
  if (!std::isfinite(kronrod)) err = std::numeric_limits<double>::infinity();
  return {a, b, kronrod, err};
}

}  // namespace detail

// Globally adaptive G7-K15 on [a, b]. Interior breakpoints (kinks,
// discontinuities of f) seed the initial panel set; points outside (a, b)
// are ignored. Never throws; check `converged`.
template <class F>
Result integrate(F&& f, double a, double b, std::span<const double> breakpoints,
                 const Options& opt = {}) {
  Result out;
  if (!(b > a)) {
    out.converged = (a == b);
    return out;
  }
  std::vector<double> cuts{a};
  for (double p : breakpoints)
    if (p > a && p < b) cuts.push_back(p);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::priority_queue<detail::Panel> panels;
  double value = 0.0;
  double error = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    auto p = detail::gauss_kronrod_15(f, cuts[i], cuts[i + 1]);
    out.evaluations += 15;
    value += p.value;
    error += p.error;
    panels.push(p);
  }
  const double eps = std::numeric_limits<double>::epsilon();
  auto done = [&] { return error <= std::max(opt.abs_tol, 50.0 * eps * std::abs(value)); };
  // Re-sum from the panels to shed drift in the running totals.
  auto resum = [&] {
    auto copy = panels;
    value = 0.0;
    error = 0.0;
    while (!copy.empty()) {
      value += copy.top().value;
      error += copy.top().error;
      copy.pop();
    }
  };
  bool exhausted = false;
  while (!exhausted && panels.size() < opt.max_panels) {
    if (done()) {
      resum();
      if (done()) break;
    }
    const auto worst = panels.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {  // interval exhausted in floating point
      exhausted = true;
      break;
    }
    panels.pop();
    const auto left = detail::gauss_kronrod_15(f, worst.a, mid);
    const auto right = detail::gauss_kronrod_15(f, mid, worst.b);
    out.evaluations += 30;
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    panels.push(left);
    panels.push(right);
  }
  resum();
  out.value = value;
  out.error = error;
  out.converged = done();
  return out;
}

template <class F>
Result integrate(F&& f, double a, double b, const Options& opt = {}) {
  return integrate(std::forward<F>(f), a, b, std::span<const double>{}, opt);
}

// Like integrate() but throws NumericalError when the tolerance is not met.
template <class F>
double integrate_or_throw(F&& f, double a, double b, std::span<const double> breakpoints,
                          const Options& opt, const char* what) {
  auto r = integrate(std::forward<F>(f), a, b, breakpoints, opt);
  if (!r.converged) {
    char buf[200];
    std::snprintf(buf, sizeof buf, ": quadrature tolerance %.3g unreachable on [%.6g, %.6g] (estimate %.3g after %zu evaluations)",
                  opt.abs_tol, a, b, r.error, r.evaluations);
    throw NumericalError(std::string(what) + buf);
  }
  return r.value;
}

enum class TailStatus { converged, divergent, exhausted };

struct DyadicResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t panels = 0;
  TailStatus status = TailStatus::exhausted;
  std::vector<double> contributions;  // |integral| over [b 2^{-k-1}, b 2^{-k}]
};

struct DyadicOptions {
  double abs_tol = 1e-10;
  std::size_t max_panels = 1000;
  // Contributions must shrink by at least this ratio per panel to count as decaying.
  double decay_ratio = 0.99;
  // Consecutive non-decaying panels that declare divergence.
  std::size_t divergence_run = 20;
  // Panels used to estimate the geometric ratio of the tail.
  std::size_t ratio_window = 8;
  std::size_t panel_budget = 2000;
};

// Integrates f over (0, b] on dyadic panels [b 2^{-k-1}, b 2^{-k}], summing
// toward 0 until a geometric tail bound falls below tolerance. Declares the
// integral divergent when the panel contributions fail to decay over
// `divergence_run` consecutive panels.
template <class F>
DyadicResult integrate_to_zero(F&& f, double b, std::span<const double> breakpoints,
                               const DyadicOptions& opt = {}) {
  DyadicResult out;
  double sum = 0.0;
  double err = 0.0;
  std::size_t stalled = 0;
  double hi = b;
  for (std::size_t k = 0; k < opt.max_panels; ++k) {
    const double lo = 0.5 * hi;
    Options po;
    po.abs_tol = opt.abs_tol / (4.0 * double(k + 1) * double(k + 2));
    po.max_panels = opt.panel_budget;
    auto r = integrate(f, lo, hi, breakpoints, po);
    sum += r.value;
    err += r.error;
    out.contributions.push_back(std::abs(r.value));
    out.panels = k + 1;
    hi = lo;
    if (!std::isfinite(sum)) {
      out.status = TailStatus::divergent;
      break;
    }
    const auto& c = out.contributions;
    if (k >= 1) {
      const double prev = c[k - 1];
      const bool decaying = prev == 0.0 ? c[k] == 0.0 : c[k] <= opt.decay_ratio * prev;
      stalled = decaying ? 0 : stalled + 1;
      if (stalled >= opt.divergence_run) {
        out.status = TailStatus::divergent;
        break;
      }
    }
    if (k + 1 < opt.ratio_window) continue;
    // Geometric tail from the ratios of the recent window. The tail is accepted
    // once the extrapolations with the smallest and largest ratio agree.
    double q_lo = 1.0, q_hi = 0.0;
    bool all_zero = true;
    bool ratio_ok = true;
    for (std::size_t j = k + 1 - opt.ratio_window; j < k; ++j) {
      if (c[j] != 0.0 || c[j + 1] != 0.0) all_zero = false;
      if (c[j] == 0.0) {
        if (c[j + 1] != 0.0) ratio_ok = false;
        continue;
      }
      const double q = c[j + 1] / c[j];
      q_lo = std::min(q_lo, q);
      q_hi = std::max(q_hi, q);
    }
    if (all_zero) {
      out.status = TailStatus::converged;
      break;
    }
    if (!ratio_ok || q_hi >= opt.decay_ratio) continue;
    const double tail_hi = c[k] * q_hi / (1.0 - q_hi);
    const double tail_lo = c[k] * q_lo / (1.0 - q_lo);
    if (tail_hi - tail_lo <= 0.25 * opt.abs_tol || tail_hi <= 0.5 * opt.abs_tol) {
      const double tail = 0.5 * (tail_hi + tail_lo);
      sum += std::copysign(tail, r.value);
      err += 0.5 * (tail_hi - tail_lo);
      out.status = TailStatus::converged;
      break;
    }
  }
  out.value = sum;
  out.error = err;
  return out;
}

template <class F>
DyadicResult integrate_to_zero(F&& f, double b, const DyadicOptions& opt = {}) {
  return integrate_to_zero(std::forward<F>(f), b, std::span<const double>{}, opt);
}

}  // namespace hmdp::quad
