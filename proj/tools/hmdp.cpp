// Command-line front end. Exit codes: 0 pass, 1 check failure, 2 configuration
// error, 3 numerical failure.

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "hmdp/hmdp.hpp"

namespace {

enum Exit { kPass = 0, kCheckFailed = 1, kConfigError = 2, kNumericalError = 3 };

std::map<std::string, double> parse_params(const std::string& text) {
  std::map<std::string, double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw hmdp::ConfigError("params: expected key=value, got '" + item + "'");
    auto key = item.substr(0, eq);
    key.erase(0, key.find_first_not_of(" \t"));
    key.erase(key.find_last_not_of(" \t") + 1);
    out[key] = hmdp::detail::parse_value<double>(key, item.substr(eq + 1));
  }
  return out;
}

int finish(const hmdp::VerificationReport& rep, bool json) {
  if (json)
    std::cout << hmdp::to_json(rep).dump(2) << "\n";
  else
    hmdp::write_text(std::cout, rep);
  return rep.passed() ? kPass : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hmdp: numerical lab for the Dirichlet problem at infinity for harmonic maps "
               "between hyperbolic upper half-spaces"};
  app.require_subcommand(1);
  bool json = false;
  bool quiet = false;
  app.add_flag("--json", json, "Print the report as JSON");
  app.add_flag("-q,--quiet", quiet, "No progress lines on stderr");

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("config", config_path, "Config file")->required();

  std::string family, params;
  int m = 2, n = 2;
  double r_min = 1e-3, r_max = 10.0, tol = 1e-8;
  std::size_t points = 50;
  std::string out_path;
  auto* table = app.add_subcommand("table", "Write the special-function table of a family as CSV");
  table->add_option("family", family, "Family name (see `families`)")->required();
  table->add_option("params", params, "Parameters as key=value[,key=value]");
  table->add_option("--m", m, "Source dimension")->check(CLI::Range(2, 16));
  table->add_option("--n", n, "Target dimension")->check(CLI::Range(2, 16));
  table->add_option("--r-min", r_min, "Smallest abscissa");
  table->add_option("--r-max", r_max, "Largest abscissa");
  table->add_option("--points", points, "Number of log-spaced abscissae");
  table->add_option("--tol", tol, "Quadrature tolerance");
  table->add_option("-o,--output", out_path, "Output file (default stdout)");

  std::string snapshot_path;
  double epsilon = -1.0;
  auto* check = app.add_subcommand("check", "Re-verify a saved solver state");
  check->add_option("snapshot", snapshot_path, "Snapshot file written by `run`")->required();
  check->add_option("config", config_path, "Config the snapshot was produced with")->required();
  check->add_option("--epsilon", epsilon, "Epsilon of the state (default: first in the config)");

  auto* families = app.add_subcommand("families", "List the built-in boundary families");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kPass : kConfigError;
  }

  try {
    if (*families) {
      for (const auto& f : hmdp::builtin_families()) {
        std::cout << f.name << "\n    " << f.summary << "\n";
        if (!f.defaults.empty()) {
          std::cout << "    defaults:";
          for (const auto& [k, v] : f.defaults) std::cout << " " << k << "=" << v;
          std::cout << "\n";
        }
      }
      return kPass;
    }
    if (*table) {
      const auto f = hmdp::make_boundary_map(family, hmdp::ModelDims(m, n), parse_params(params));
      if (!f.modulus) throw hmdp::ConfigError("table: family '" + family + "' has no analytic modulus");
      const auto t = hmdp::specialfn::build_table(*f.modulus, hmdp::specialfn::log_spaced(r_min, r_max, points), tol);
      if (out_path.empty()) {
        hmdp::specialfn::write_csv(std::cout, t);
      } else {
        std::ofstream os(out_path);
        if (!os) throw hmdp::ConfigError("table: cannot write '" + out_path + "'");
        hmdp::specialfn::write_csv(os, t);
      }
      if (!t.psi_available)
        std::cerr << hmdp::DivergentModulusError("table").what() << "\n";
      return kPass;
    }
    const auto cfg = hmdp::load_config(config_path);
    if (*run) {
      const auto dir = hmdp::output_directory(cfg);
      const auto rep = hmdp::run_experiment(cfg, dir, quiet ? nullptr : &std::cerr);
      if (!quiet) std::cerr << "outputs in " << dir.string() << "\n";
      return finish(rep, json);
    }
    if (*check) {
      const auto u = hmdp::snapshot::load(snapshot_path);
      return finish(hmdp::check_snapshot(cfg, u, epsilon > 0.0 ? epsilon : cfg.epsilons.front()), json);
    }
  } catch (const hmdp::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const hmdp::DomainError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const hmdp::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumericalError;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kConfigError;
  }
  return kPass;
}
