#include "config.hpp"

#include <fstream>
#include <set>

#include "canard/errors.hpp"

namespace cli {

using nlohmann::json;

namespace {

void only_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw canard::ConfigError(where + " must be an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw canard::ConfigError("unknown key '" + k + "' in " + where);
}

template <class T>
void take(const json& j, const char* key, T& into, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    into = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw canard::ConfigError(where + "." + key + " has the wrong type");
  }
}

canard::Vec3 vec3(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) throw canard::ConfigError(where + " must be an array of 3 numbers");
  canard::Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number()) throw canard::ConfigError(where + " must be an array of 3 numbers");
    v[i] = j[i].get<double>();
  }
  return v;
}

}  // namespace

canard::SystemSpec RunConfig::system() const { return canard::SystemSpec(f, g, params); }

canard::GeometryOptions RunConfig::geometry_options() const {
  canard::GeometryOptions o;
  o.horizon = horizon;
  o.index = intersection;
  return o;
}

canard::MapParams RunConfig::map_params() const {
  canard::MapParams p;
  p.eps = epsilon;
  p.alpha = alpha;
  p.rho = rho;
  p.delta = delta;
  p.strict_rho = strict_rho;
  p.box = box;
  p.full.ode.rtol = rtol;
  p.full.ode.atol = atol;
  return p;
}

canard::DegreeOptions RunConfig::degree_options() const {
  canard::DegreeOptions o;
  o.n0 = degree_n0;
  o.threads = threads;
  return o;
}

canard::SolverOptions RunConfig::solver_options() const {
  canard::SolverOptions o;
  o.degree = degree_options();
  o.threads = threads;
  return o;
}

RunConfig from_json(const json& j, RunConfig c) {
  only_keys(j, "config", {"system", "numerics", "output", "seed"});
  if (j.contains("system")) {
    const json& s = j["system"];
    only_keys(s, "system", {"f", "g", "params"});
    take(s, "f", c.f, "system");
    take(s, "g", c.g, "system");
    if (s.contains("params")) {
      if (!s["params"].is_object()) throw canard::ConfigError("system.params must be an object");
      c.params.clear();
      for (const auto& [k, v] : s["params"].items()) {
        if (!v.is_number()) throw canard::ConfigError("system.params." + k + " must be a number");
        c.params[k] = v.get<double>();
      }
    }
  }
  if (j.contains("numerics")) {
    const json& n = j["numerics"];
    only_keys(n, "numerics",
              {"epsilon", "alpha", "rho", "delta", "strict_rho", "rtol", "atol", "horizon", "intersection", "box",
               "check_samples", "degree_n0", "threads"});
    take(n, "epsilon", c.epsilon, "numerics");
    take(n, "alpha", c.alpha, "numerics");
    take(n, "rho", c.rho, "numerics");
    take(n, "delta", c.delta, "numerics");
    take(n, "strict_rho", c.strict_rho, "numerics");
    take(n, "rtol", c.rtol, "numerics");
    take(n, "atol", c.atol, "numerics");
    take(n, "horizon", c.horizon, "numerics");
    take(n, "intersection", c.intersection, "numerics");
    take(n, "check_samples", c.check_samples, "numerics");
    take(n, "degree_n0", c.degree_n0, "numerics");
    take(n, "threads", c.threads, "numerics");
    if (n.contains("box")) {
      only_keys(n["box"], "numerics.box", {"lo", "hi"});
      if (n["box"].contains("lo")) c.box.lo = vec3(n["box"]["lo"], "numerics.box.lo");
      if (n["box"].contains("hi")) c.box.hi = vec3(n["box"]["hi"], "numerics.box.hi");
    }
  }
  if (j.contains("output")) {
    const json& o = j["output"];
    only_keys(o, "output", {"dir", "svg", "csv"});
    take(o, "dir", c.out_dir, "output");
    take(o, "svg", c.svg, "output");
    take(o, "csv", c.csv, "output");
  }
  take(j, "seed", c.seed, "config");
  return c;
}

RunConfig load_config(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw canard::ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw canard::ConfigError("config file '" + path + "': " + e.what());
  }
  return from_json(j, std::move(base));
}

json to_json(const RunConfig& c) {
  json params = json::object();
  for (const auto& [k, v] : c.params) params[k] = v;
  return {
      {"system", {{"f", c.f}, {"g", c.g}, {"params", params}}},
      {"numerics",
       {{"epsilon", c.epsilon},
        {"alpha", c.alpha},
        {"rho", c.rho},
        {"delta", c.delta},
        {"strict_rho", c.strict_rho},
        {"rtol", c.rtol},
        {"atol", c.atol},
        {"horizon", c.horizon},
        {"intersection", c.intersection},
        {"box", {{"lo", {c.box.lo[0], c.box.lo[1], c.box.lo[2]}}, {"hi", {c.box.hi[0], c.box.hi[1], c.box.hi[2]}}}},
        {"check_samples", c.check_samples},
        {"degree_n0", c.degree_n0},
        {"threads", c.threads}}},
      {"output", {{"dir", c.out_dir}, {"svg", c.svg}, {"csv", c.csv}}},
      {"seed", c.seed},
  };
}

}  // namespace cli
