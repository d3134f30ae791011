#pragma once

// Run configuration: JSON file, then command-line overrides, then defaults.

#include <cstdint>
#include <map>
#include <string>

#include <json.hpp>

#include "canard/canardmap.hpp"
#include "canard/degree.hpp"
#include "canard/reduced.hpp"
#include "canard/solver.hpp"
#include "canard/system.hpp"

namespace cli {

struct RunConfig {
  // system
  std::string f = "-a*y + z/a";
  std::string g = "x + 1";
  std::map<std::string, double> params{{"a", 3.0}};

  // numerics
  double epsilon = 0.1;
  double alpha = 0.0;  // <= 0: default
  double rho = 0.0;    // <= 0: default
  double delta = 0.5;
  bool strict_rho = false;
  double rtol = 1e-10;
  double atol = 1e-12;
  double horizon = 20.0;
  std::size_t intersection = 0;
  canard::Box box{};
  int check_samples = 11;
  int degree_n0 = 64;
  int threads = 0;

  // output
  std::string out_dir = ".";
  bool svg = false;
  bool csv = true;

  std::uint64_t seed = 1;

  canard::SystemSpec system() const;
  canard::GeometryOptions geometry_options() const;
  canard::MapParams map_params() const;
  canard::DegreeOptions degree_options() const;
  canard::SolverOptions solver_options() const;
};

/// Throws canard::ConfigError on unknown keys or wrong types.
RunConfig from_json(const nlohmann::json& j, RunConfig base = {});
RunConfig load_config(const std::string& path, RunConfig base = {});
nlohmann::json to_json(const RunConfig& c);

}  // namespace cli
