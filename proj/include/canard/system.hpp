#pragma once

// The slow-fast system
//     x' = f(x, y, z),   y' = g(x, y, z),   eps z' = x + |z|
// and its two reduced planar systems obtained on the slow half-planes
// z = x (attractive) and z = -x (repulsive).

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "canard/expr.hpp"
#include "canard/vec.hpp"

namespace canard {

enum class ReducedKind { Attractive, Repulsive };

const char* to_string(ReducedKind k);

/// Axis-aligned box in (x, y, z).
struct Box {
  Vec3 lo{-3.0, -3.0, -3.0};
  Vec3 hi{1.0, 1.0, 1.0};

  double height() const { return hi[2] - lo[2]; }
  bool contains(const Vec3& p) const {
    for (int i = 0; i < 3; ++i)
      if (p[i] < lo[i] || p[i] > hi[i]) return false;
    return true;
  }
};

class SystemSpec {
 public:
  using Params = std::map<std::string, double>;

  SystemSpec(const std::string& f_text, const std::string& g_text, Params params);

  double f(const Vec3& s) const;
  double g(const Vec3& s) const;

  /// (f, g, (x + |z|) / eps). Throws NumericError on non-finite values.
  Vec3 full_rhs(double eps, const Vec3& s) const;

  /// Right-hand side of the fast equation restricted to one branch of |z|:
  /// branch = +1 uses x + z, branch = -1 uses x - z.
  Vec3 branch_rhs(double eps, int branch, const Vec3& s) const;

  Vec2 reduced_rhs(ReducedKind kind, const Vec2& p) const;

  const expr::Expression& f_expr() const { return f_; }
  const expr::Expression& g_expr() const { return g_; }
  const std::string& f_text() const { return f_text_; }
  const std::string& g_text() const { return g_text_; }
  const Params& params() const { return params_; }

  SystemSpec with_param(const std::string& name, double value) const;

 private:
  static constexpr std::size_t kMaxSlots = 32;

  std::string f_text_, g_text_;
  Params params_;
  expr::Expression f_, g_;
  expr::Compiled fc_, gc_;
  std::vector<double> param_values_;
};

/// The worked example  f = -a y + z / a,  g = x + 1.
SystemSpec example_family(double a);

struct AssumptionReport {
  double f_origin = 0.0;
  double g_origin = 0.0;
  bool sign_condition_ok = false;  // y f(0, y, 0) < 0 on every sampled y != 0
  double M_est = 0.0;              // max sampled |f|, |g|
  double lambda_est = 0.0;         // max sampled difference quotient
  Box box;
  bool pass = false;
};

/// Samples f and g on an n x n x n grid of `box` (n >= 2) plus n^3 random
/// pairs for the Lipschitz estimate. `box` must contain the origin.
AssumptionReport check_assumptions(const SystemSpec& sys, const Box& box, int n_samples,
                                   std::uint64_t seed = 1);

}  // namespace canard
