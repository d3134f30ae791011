#include "canard/system.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "canard/errors.hpp"

namespace canard {

const char* to_string(ReducedKind k) { return k == ReducedKind::Attractive ? "attractive" : "repulsive"; }

SystemSpec::SystemSpec(const std::string& f_text, const std::string& g_text, Params params)
    : f_text_(f_text), g_text_(g_text), params_(std::move(params)) {
  std::vector<std::string> slots{"x", "y", "z"};
  for (const auto& [name, value] : params_) {
    if (name == "x" || name == "y" || name == "z") throw ConfigError("parameter may not be named '" + name + "'");
    if (!std::isfinite(value)) throw ConfigError("parameter '" + name + "' is not finite");
    slots.push_back(name);
    param_values_.push_back(value);
  }
  if (slots.size() > kMaxSlots) throw ConfigError("too many parameters");
  const std::vector<std::string> names(slots.begin() + 3, slots.end());
  f_ = expr::parse(f_text_, names);
  g_ = expr::parse(g_text_, names);
  fc_ = expr::Compiled::compile(f_, slots);
  gc_ = expr::Compiled::compile(g_, slots);
}

SystemSpec SystemSpec::with_param(const std::string& name, double value) const {
  Params p = params_;
  p[name] = value;
  return SystemSpec(f_text_, g_text_, std::move(p));
}

namespace {
template <class Fn>
double eval_with(const std::vector<double>& params, const Vec3& s, const Fn& fn) {
  std::array<double, 32> slots;
  slots[0] = s[0];
  slots[1] = s[1];
  slots[2] = s[2];
  std::copy(params.begin(), params.end(), slots.begin() + 3);
  return fn(std::span<const double>(slots.data(), 3 + params.size()));
}
}  // namespace

double SystemSpec::f(const Vec3& s) const { return eval_with(param_values_, s, fc_); }
double SystemSpec::g(const Vec3& s) const { return eval_with(param_values_, s, gc_); }

Vec3 SystemSpec::full_rhs(double eps, const Vec3& s) const {
  if (!(eps > 0.0)) throw InputError("eps must be positive");
  const double dz = (s[0] + std::fabs(s[2])) / eps;
  if (!std::isfinite(dz)) throw NumericError("numeric overflow in fast equation");
  return {f(s), g(s), dz};
}

Vec3 SystemSpec::branch_rhs(double eps, int branch, const Vec3& s) const {
  const double dz = (s[0] + (branch > 0 ? s[2] : -s[2])) / eps;
  if (!std::isfinite(dz)) throw NumericError("numeric overflow in fast equation");
  return {f(s), g(s), dz};
}

Vec2 SystemSpec::reduced_rhs(ReducedKind kind, const Vec2& p) const {
  const Vec3 s{p[0], p[1], kind == ReducedKind::Attractive ? p[0] : -p[0]};
  return {f(s), g(s)};
}

SystemSpec example_family(double a) {
  return SystemSpec("-a*y + z/a", "x + 1", {{"a", a}});
}

AssumptionReport check_assumptions(const SystemSpec& sys, const Box& box, int n_samples, std::uint64_t seed) {
  AssumptionReport r;
  r.box = box;
  if (n_samples < 2) throw ConfigError("check_assumptions: need at least 2 samples per axis");
  if (!box.contains({0.0, 0.0, 0.0})) throw ConfigError("check_assumptions: box must contain the origin");

  r.f_origin = sys.f({0.0, 0.0, 0.0});
  r.g_origin = sys.g({0.0, 0.0, 0.0});

  auto axis = [&](int i, int k) {
    return box.lo[i] + (box.hi[i] - box.lo[i]) * static_cast<double>(k) / static_cast<double>(n_samples - 1);
  };

  double m = 0.0;
  for (int i = 0; i < n_samples; ++i)
    for (int j = 0; j < n_samples; ++j)
      for (int k = 0; k < n_samples; ++k) {
        const Vec3 p{axis(0, i), axis(1, j), axis(2, k)};
        m = std::max({m, std::fabs(sys.f(p)), std::fabs(sys.g(p))});
      }
  r.M_est = m;

  bool sign_ok = true;
  for (int j = 0; j < n_samples; ++j) {
    const double y = axis(1, j);
    if (y == 0.0) continue;
    if (!(y * sys.f({0.0, y, 0.0}) < 0.0)) sign_ok = false;
  }
  // The grid may straddle y = 0 coarsely; probe just off the origin as well.
  for (double y : {1e-3 * box.lo[1], 1e-3 * box.hi[1]}) {
    if (y != 0.0 && !(y * sys.f({0.0, y, 0.0}) < 0.0)) sign_ok = false;
  }
  r.sign_condition_ok = sign_ok;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(box.lo[0], box.hi[0]), uy(box.lo[1], box.hi[1]),
      uz(box.lo[2], box.hi[2]);
  const long pairs = static_cast<long>(n_samples) * n_samples * n_samples;
  double lam = 0.0;
  for (long k = 0; k < pairs; ++k) {
    const Vec3 p{ux(rng), uy(rng), uz(rng)};
    const Vec3 q{ux(rng), uy(rng), uz(rng)};
    const double d = norm(p - q);
    if (d < 1e-12) continue;
    lam = std::max({lam, std::fabs(sys.f(p) - sys.f(q)) / d, std::fabs(sys.g(p) - sys.g(q)) / d});
  }
  r.lambda_est = lam;

  r.pass = std::fabs(r.f_origin) <= 1e-12 && r.g_origin > 0.0 && r.sign_condition_ok;
  return r;
}

}  // namespace canard
