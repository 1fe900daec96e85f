#pragma once

// Experiment configuration: INI-style sections of key = value lines, read
// with Boost.PropertyTree. Lists are comma separated. Unknown sections and
// keys are rejected so that typos do not silently fall back to defaults.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "hmdp/boundary.hpp"
#include "hmdp/errors.hpp"
#include "hmdp/geometry.hpp"

namespace hmdp {

struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t seed = 12345;
  std::string output = "";  // relative to the output root unless absolute

  int m = 2;
  int n = 2;

  std::string family = "holder_bump";
  std::map<std::string, double> family_params;
  std::string modulus = "analytic";  // or "sampled"
  std::size_t modulus_samples = 4000;
  double modulus_window = 0.0;  // 0: ten times the lateral extent

  double lateral_extent = 2.0;
  std::size_t lateral_nodes = 128;
  std::size_t vertical_nodes = 128;
  double ceiling = 1.6375;  // floor is the smallest delta

  std::vector<double> epsilons = {0.1, 0.2};
  std::vector<double> deltas = {0.2, 0.1, 0.05};
  double time_step_safety = 0.9;
  double residual_tol = 1e-4;
  std::size_t max_steps = 2'000'000;
  bool log_coordinate = true;
  bool local_time_step = true;

  double quad_tol = 1e-8;
  double extension_tol = 1e-9;
  double stability = 0.2;        // relative change allowed under refinement / delta halving
  double epsilon_factor = 4.0;   // C_bound ratio window across epsilons
  double subharmonic_allowance = 1.0;  // multiple of the grid spacing
  double decay_slack = 0.05;     // noise allowed in monotone trends

  double table_min = 1e-3;
  double table_max = 10.0;
  std::size_t table_points = 50;

  bool refine_grid = true;      // rebuild v on a twice finer grid for the constant checks
  double tension_height = 0.5;  // C_tension is taken over x^m <= this

  ModelDims dims() const { return ModelDims(m, n); }
  double floor() const { return deltas.back(); }
  SlabGrid grid() const {
    return SlabGrid::uniform(dims(), lateral_extent, floor(), ceiling, lateral_nodes, vertical_nodes);
  }
  void validate() const;
};

namespace detail {

inline std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item.substr(b), &used));
      if (item.find_first_not_of(" \t", b + used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("config: '" + key + "' expects a comma separated list of numbers, got '" + text + "'");
    }
  }
  if (out.empty()) throw ConfigError("config: '" + key + "' is empty");
  return out;
}

template <class T>
T parse_value(const std::string& key, const std::string& text) {
  std::stringstream ss(text);
  T value{};
  if constexpr (std::is_same_v<T, bool>) {
    std::string s;
    ss >> s;
    if (s == "true" || s == "yes" || s == "1" || s == "on") return true;
    if (s == "false" || s == "no" || s == "0" || s == "off") return false;
    throw ConfigError("config: '" + key + "' expects true/false, got '" + text + "'");
  } else {
    ss >> value;
    std::string rest;
    if (ss.fail() || (ss >> rest)) throw ConfigError("config: cannot parse '" + key + "' from '" + text + "'");
    return value;
  }
}

}  // namespace detail

inline void ExperimentConfig::validate() const {
  if (m < 2 || n < 2) throw ConfigError("config: model.m and model.n must be >= 2");
  if (modulus != "analytic" && modulus != "sampled")
    throw ConfigError("config: boundary.modulus must be 'analytic' or 'sampled'");
  if (modulus == "sampled" && modulus_samples < 1000)
    throw ConfigError("config: boundary.samples must be >= 1000");
  if (!(lateral_extent > 0.0)) throw ConfigError("config: grid.lateral_extent must be > 0");
  if (lateral_nodes < 5 || vertical_nodes < 5) throw ConfigError("config: grids need at least 5 nodes per axis");
  for (double e : epsilons)
    if (!(e > 0.0)) throw ConfigError("config: solver.epsilon values must be > 0");
  for (std::size_t i = 0; i < deltas.size(); ++i)
    if (!(deltas[i] > 0.0) || (i > 0 && !(deltas[i] < deltas[i - 1])))
      throw ConfigError("config: solver.delta must be positive and strictly decreasing");
  if (!(ceiling > deltas.front())) throw ConfigError("config: grid.ceiling must exceed the largest delta");
  if (!(time_step_safety > 0.0 && time_step_safety < 1.0))
    throw ConfigError("config: solver.time_step_safety must lie in (0, 1)");
  if (!(residual_tol > 0.0) || !(quad_tol > 0.0) || !(extension_tol > 0.0))
    throw ConfigError("config: tolerances must be > 0");
  if (!(table_min > 0.0) || !(table_max > table_min) || table_points < 3)
    throw ConfigError("config: table needs 0 < r_min < r_max and at least 3 points");
  // The family must exist and accept the parameters.
  (void)make_boundary_map(family, dims(), family_params);
}

inline ExperimentConfig parse_config(std::istream& is, const std::string& source = "<config>") {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(is, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("config: " + source + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  ExperimentConfig c;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  auto num = [](auto& field) -> Setter {
    return [&field](const std::string& k, const std::string& v) {
      field = detail::parse_value<std::decay_t<decltype(field)>>(k, v);
    };
  };
  auto str = [](std::string& field) -> Setter {
    return [&field](const std::string&, const std::string& v) { field = v; };
  };
  auto list = [](std::vector<double>& field) -> Setter {
    return [&field](const std::string& k, const std::string& v) { field = detail::parse_list(k, v); };
  };
  const std::map<std::string, std::map<std::string, Setter>> schema = {
      {"experiment", {{"name", str(c.name)}, {"seed", num(c.seed)}, {"output", str(c.output)}}},
      {"model", {{"m", num(c.m)}, {"n", num(c.n)}}},
      {"boundary",
       {{"family", str(c.family)},
        {"modulus", str(c.modulus)},
        {"samples", num(c.modulus_samples)},
        {"window", num(c.modulus_window)}}},
      {"grid",
       {{"lateral_extent", num(c.lateral_extent)},
        {"lateral_nodes", num(c.lateral_nodes)},
        {"vertical_nodes", num(c.vertical_nodes)},
        {"ceiling", num(c.ceiling)}}},
      {"solver",
       {{"epsilon", list(c.epsilons)},
        {"delta", list(c.deltas)},
        {"time_step_safety", num(c.time_step_safety)},
        {"residual_tol", num(c.residual_tol)},
        {"max_steps", num(c.max_steps)},
        {"log_coordinate", num(c.log_coordinate)},
        {"local_time_step", num(c.local_time_step)}}},
      {"tolerances",
       {{"quad_tol", num(c.quad_tol)},
        {"extension_tol", num(c.extension_tol)},
        {"stability", num(c.stability)},
        {"epsilon_factor", num(c.epsilon_factor)},
        {"subharmonic_allowance", num(c.subharmonic_allowance)},
        {"decay_slack", num(c.decay_slack)}}},
      {"table", {{"r_min", num(c.table_min)}, {"r_max", num(c.table_max)}, {"points", num(c.table_points)}}},
      {"checks", {{"refine_grid", num(c.refine_grid)}, {"tension_height", num(c.tension_height)}}},
  };
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError("config: key '" + section + "' outside of a section");
    if (section == "family") {
      for (const auto& [key, value] : body)
        c.family_params[key] = detail::parse_value<double>("family." + key, value.data());
      continue;
    }
    auto sec = schema.find(section);
    if (sec == schema.end()) throw ConfigError("config: unknown section [" + section + "]");
    for (const auto& [key, value] : body) {
      auto it = sec->second.find(key);
      if (it == sec->second.end()) throw ConfigError("config: unknown key '" + section + "." + key + "'");
      it->second(section + "." + key, value.data());
    }
  }
  try {
    c.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot open '" + path + "'");
  return parse_config(is, path);
}

// Output directory: the configured path, placed under HMDP_OUTPUT_ROOT when
// that variable is set and the path is relative.
inline std::filesystem::path output_directory(const ExperimentConfig& c) {
  std::filesystem::path p = c.output.empty() ? std::filesystem::path("hmdp-out") / c.name : std::filesystem::path(c.output);
  if (p.is_relative())
    if (const char* root = std::getenv("HMDP_OUTPUT_ROOT"); root && *root) p = std::filesystem::path(root) / p;
  return p;
}

}  // namespace hmdp
