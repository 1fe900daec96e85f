// Acceptance run: one line per criterion, at the tolerances of the contract.
//
//   hmdp_acceptance [--allow-fail N]... [--only N]... [--out DIR]
//
// Exit status is 0 when every criterion passes or fails only where allowed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <set>
#include <string>

#include "hmdp/hmdp.hpp"

using namespace hmdp;
namespace sf = hmdp::specialfn;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
  double seconds = -1.0;  // < 0: time the callable itself
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

MapField sample(const SlabGrid& g, const std::function<void(std::span<const double>, std::span<double>)>& map) {
  MapField u(g);
  std::vector<double> x(g.nodes().size());
  for (std::size_t k = 0; k < g.node_count(); ++k) {
    g.position(k, x);
    map(x, u.at(k));
  }
  return u;
}

double sup_tension(const MapField& u) {
  const auto nrm = tension_norm(tension_field(u), u);
  double s = 0.0;
  for (std::size_t k : u.grid().interior_nodes()) s = std::max(s, std::sqrt(nrm[k]));
  return s;
}

std::vector<double> random_point(std::mt19937_64& rng, int m) {
  std::uniform_real_distribution<double> lat(-2.0, 2.0), h(0.01, 2.0);
  std::vector<double> x(m);
  for (int a = 0; a + 1 < m; ++a) x[a] = lat(rng);
  x[m - 1] = h(rng);
  return x;
}

Outcome kernel_normalization_check() {
  std::mt19937_64 rng(12345);
  double worst = 0.0;
  for (int m : {2, 3}) {
    const auto f = make_boundary_map("constant", ModelDims(m, 2), {{"value", 0.7}});
    for (int i = 0; i < 100; ++i)
      worst = std::max(worst, std::abs(poisson_extend(f, random_point(rng, m), 1e-9)[0] - 0.7));
  }
  return {worst < 1e-6, fmt("max error %.2e over 200 points (m = 2, 3), tol 1e-6", worst)};
}

Outcome closed_forms_check() {
  std::mt19937_64 rng(12346);
  const auto step = make_boundary_map("heaviside", ModelDims(2, 2));
  const auto wave = make_boundary_map("cos", ModelDims(2, 2));
  double e_step = 0.0, e_wave = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto x = random_point(rng, 2);
    e_step = std::max(e_step, std::abs(poisson_extend(step, x, 1e-6)[0] - (0.5 + std::atan(x[0] / x[1]) / kPi)));
    e_wave = std::max(e_wave, std::abs(poisson_extend(wave, x, 5e-6)[0] - std::exp(-x[1]) * std::cos(x[0])));
  }
  return {e_step < 1e-5 && e_wave < 1e-5, fmt("heaviside %.2e, cos %.2e at 100 points, tol 1e-5", e_step, e_wave)};
}

Outcome tension_check() {
  bool ok = true;
  // Identity and constant maps: the stencil is exact, so sup|tau| sits at round-off on every grid.
  double trivial = 0.0;
  for (std::size_t nodes : {33u, 65u}) {
    const auto g = SlabGrid::uniform(ModelDims(2, 2), 1.0, 0.1, 2.0, nodes, nodes);
    const auto id = sample(g, [](auto x, auto y) { std::copy(x.begin(), x.end(), y.begin()); });
    const auto constant = sample(g, [](auto, auto y) {
      y[0] = 0.3;
      y[1] = 1.3;
    });
    trivial = std::max({trivial, sup_tension(id), sup_tension(constant)});
  }
  ok = ok && trivial < 1e-10;
  // z -> -1/z is a nontrivial isometry; its discrete tension shows the O(h^2) rate.
  std::vector<double> sup;
  for (std::size_t nodes : {33u, 65u, 129u}) {
    const auto g = SlabGrid::uniform(ModelDims(2, 2), 1.0, 0.5, 1.5, nodes, nodes);
    sup.push_back(sup_tension(sample(g, [](auto x, auto y) {
      const double r2 = x[0] * x[0] + x[1] * x[1];
      y[0] = -x[0] / r2;
      y[1] = x[1] / r2;
    })));
  }
  const double r1 = sup[0] / sup[1], r2 = sup[1] / sup[2];
  ok = ok && r1 >= 3.5 && r1 <= 4.5 && r2 >= 3.5 && r2 <= 4.5;
  // u = (0, x^3) from H^3 into H^2: tau = (0, -2 x^3).
  double hand = 0.0;
  for (std::size_t nodes : {10u, 19u}) {
    const auto g = SlabGrid::uniform(ModelDims(3, 2), 1.0, 0.2, 2.0, 7, nodes);
    const auto tau = tension_field(sample(g, [](auto x, auto y) {
      y[0] = 0.0;
      y[1] = x[2];
    }));
    const double h = g.spacing()[2];
    for (std::size_t k : g.interior_nodes()) {
      const double err = std::hypot(tau.at(k)[0], tau.at(k)[1] + 2.0 * g.height_of(k));
      hand = std::max(hand, err / (h * h));
    }
  }
  ok = ok && hand < 1.0;
  return {ok, fmt("identity/constant sup|tau| %.1e; inversion ratios %.3f, %.3f; (0,x^3) error/h^2 %.1e", trivial,
                  r1, r2, hand)};
}

Outcome special_function_check() {
  bool ok = true;
  double e_const = 0.0;
  for (double K : {0.5, 2.0})
    for (double r : {0.01, 1.0, 50.0})
      e_const = std::max(e_const, std::abs(sf::phi(r, constant_modulus(K), 1e-10) - K * kPi / 2.0));
  ok = ok && e_const < 1e-8;
  const double tol = 1e-8;
  double e_route = 0.0;
  for (const auto& g : {holder_modulus(1.0, 1.0, 1.0), holder_modulus(1.0, 0.5, 1.0)})
    for (double r : {0.1, 0.5, 1.0, 3.0}) {
      e_route = std::max(e_route, std::abs(sf::phi_prime(r, g, tol) - sf::phi_prime_by_parts(r, g, tol)));
      e_route =
          std::max(e_route, std::abs(sf::phi_double_prime(r, g, tol) - sf::phi_double_prime_by_parts(r, g, tol)));
      e_route = std::max(e_route, std::abs(sf::psi_kernel(r, g, tol) - sf::psi_nested(r, g, tol)));
    }
  ok = ok && e_route <= 10.0 * tol;
  double e_second = 0.0;
  const auto g = holder_modulus(1.0, 0.5, 1.0);
  for (double r : {0.1, 0.5, 1.0}) {
    const double h = 1e-3 * r;
    const double d2 = (sf::psi(r + h, g, 1e-12) - 2.0 * sf::psi(r, g, 1e-12) + sf::psi(r - h, g, 1e-12)) / (h * h);
    e_second = std::max(e_second, std::abs(d2 / (-sf::phi(r, g, 1e-12) / (r * r)) - 1.0));
  }
  ok = ok && e_second < 1e-3;
  return {ok, fmt("phi = K pi/2 error %.1e; route gap %.1e (tol %.0e); psi'' rel error %.1e", e_const, e_route,
                  10.0 * tol, e_second)};
}

Outcome integrability_gate_check() {
  bool ok = true;
  std::string d;
  for (double beta : {0.25, 0.5, 1.0}) {
    const auto r = integrability_check(holder_modulus(1.0, beta, 1e30));
    ok = ok && r.finite && std::abs(r.value - 1.0 / beta) < 1e-6;
    d += fmt("beta %.2g: %.6g; ", beta, r.value);
  }
  const bool k = integrability_check(constant_modulus(1.0)).finite;
  const bool l = integrability_check(log_modulus()).finite;
  ok = ok && !k && !l;
  return {ok, d + "constant: " + (k ? "finite" : "divergent") + ", 1/log(e/t): " + (l ? "finite" : "divergent")};
}

double phase_seconds(const VerificationReport& rep, const std::string& phase, double eps = -1.0) {
  double s = 0.0;
  for (const auto& t : rep.timing) {
    if (t.value("phase", "") != phase) continue;
    if (eps >= 0.0 && std::abs(t.value("epsilon", -1.0) - eps) > 1e-12) continue;
    s += t.contains("seconds") ? t["seconds"].get<double>() : t["end_s"].get<double>();
  }
  return s;
}

std::string status_of(const VerificationReport& rep, const std::string& name) {
  const auto* c = rep.find(name);
  return c ? std::string(to_string(c->status)) + ": " + c->detail : "missing";
}

bool passed(const VerificationReport& rep, const std::string& name) {
  const auto* c = rep.find(name);
  return c && c->status == CheckStatus::pass;
}

Outcome negative_controls_check() {
  ExperimentConfig c;
  c.family = "heaviside";
  c.lateral_nodes = 33;
  c.vertical_nodes = 32;
  c.ceiling = 1.6;
  c.refine_grid = false;
  c.extension_tol = 1e-7;
  const auto rep = run_experiment(c, {});
  const bool decay_fails = rep.find("vanishing_scaled_gradient")->status == CheckStatus::fail;
  bool refused = false;
  std::string msg;
  try {
    sf::psi(0.5, constant_modulus(1.0));
  } catch (const DivergentModulusError& e) {
    msg = e.what();
    refused = msg.find("Dini") != std::string::npos;
  }
  const auto* gate = rep.find("integrability");
  const bool gated = gate->status == CheckStatus::fail && gate->detail.find("Dini") != std::string::npos &&
                     rep.find("solver")->status == CheckStatus::skipped;
  return {decay_fails && refused && gated,
          std::string("heaviside decay check ") + (decay_fails ? "fails" : "passes") + "; constant modulus " +
              (refused ? "refused with the Dini diagnostic" : "not refused") + "; run " +
              (gated ? "stopped at the gate" : "not gated")};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> allowed, only;
  std::filesystem::path out;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--allow-fail" && i + 1 < argc) {
      allowed.insert(std::atoi(argv[++i]));
    } else if (a == "--only" && i + 1 < argc) {
      only.insert(std::atoi(argv[++i]));
    } else if (a == "--out" && i + 1 < argc) {
      out = argv[++i];
    } else {
      std::cerr << "usage: hmdp_acceptance [--allow-fail N]... [--only N]... [--out DIR]\n";
      return 2;
    }
  }

  auto selected = [&](int n) { return only.empty() || only.count(n) > 0; };
  int failures = 0, tolerated = 0;
  auto report = [&](int n, double limit, const Outcome& o) {
    if (!selected(n)) return;
    const bool in_time = o.seconds <= limit;
    const bool ok = o.pass && in_time;
    std::printf("criterion %2d: %s  (%.1f s, limit %.0f s)  %s\n", n, ok ? "PASS" : "FAIL", o.seconds, limit,
                o.detail.c_str());
    std::fflush(stdout);
    if (!ok) (allowed.count(n) ? tolerated : failures)++;
  };
  auto timed = [&](int n, double limit, const std::function<Outcome()>& fn) {
    if (!selected(n)) return;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (o.seconds < 0.0) o.seconds = seconds_since(t0);
    report(n, limit, o);
  };

  timed(1, 10, kernel_normalization_check);
  timed(2, 30, closed_forms_check);
  timed(3, 10, tension_check);
  timed(4, 30, special_function_check);
  timed(5, 5, integrability_gate_check);

  // Criteria 6 to 9 read one full run with the default configuration.
  ExperimentConfig c;
  c.name = "acceptance";
  if (out.empty()) out = output_directory(c);
  VerificationReport rep;
  bool ran = false;
  std::string failure;
  if (selected(6) || selected(7) || selected(8) || selected(9)) {
    try {
      rep = run_experiment(c, out);
      ran = true;
    } catch (const std::exception& e) {
      failure = std::string("run failed: ") + e.what();
    }
  }
  if (ran) {
    report(6, 120,
           {passed(rep, "initial_map_constants"), status_of(rep, "initial_map_constants"),
            phase_seconds(rep, "preflight")});
    report(7, 300, {passed(rep, "solver"), status_of(rep, "solver"), phase_seconds(rep, "solve", 0.1)});
    const bool trace = passed(rep, "boundary_trace");
    report(8, 600,
           {passed(rep, "distance_bound") && trace,
            status_of(rep, "distance_bound") + "; trace " + status_of(rep, "boundary_trace"),
            phase_seconds(rep, "total")});
    report(9, 60, {passed(rep, "subharmonic"), status_of(rep, "subharmonic"), phase_seconds(rep, "subharmonic", 0.1)});
  } else {
    for (int n : {6, 7, 8, 9}) report(n, 0, {false, failure, 0.0});
  }
  timed(10, 60, negative_controls_check);

  if (ran) std::printf("outputs in %s\n", out.string().c_str());
  if (tolerated > 0) std::printf("%d documented failure(s) tolerated\n", tolerated);
  return failures == 0 ? 0 : 1;
}
