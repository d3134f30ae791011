#pragma once

// Rotation (winding number) of planar vector fields on closed loops, and the
// rotation of id - W_eps on the boundary of a (u, v) rectangle.

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <vector>

#include "canard/canardmap.hpp"
#include "canard/errors.hpp"
#include "canard/shooting.hpp"

namespace canard {

struct WindingOptions {
  double tol_zero = 1e-12;
  int max_depth = 12;
  double max_increment = 0.5 * std::numbers::pi;  // accepted increments are strictly below
  double integer_tol = 0.05;
  /// Return an uncertified estimate instead of throwing RefinementExhausted.
  bool allow_uncertified = false;
};

struct WindingResult {
  int winding = 0;
  double total_angle = 0.0;
  std::size_t n_evals = 0;
  std::size_t n_samples = 0;
  double min_magnitude = 0.0;
  double max_increment = 0.0;
  bool certified = false;
};

/// Signed angle from a to b in (-pi, pi].
inline double angle_increment(const Vec2& a, const Vec2& b) { return std::atan2(cross(a, b), dot(a, b)); }

/// Closed loop given by a monotone parameter: field(knots.front()) and
/// field(knots.back()) are the same point of the loop.
struct LoopField {
  std::vector<double> knots;
  std::function<Vec2(double)> field;
};

/// Sums angle increments, bisecting the parameter wherever one reaches
/// max_increment. Throws ZeroOnBoundary, RefinementExhausted.
WindingResult winding(const LoopField& loop, const WindingOptions& opt = {});

/// Knots 0, 1/n, ..., 4 and the point of the square |u|, |v| = half at a
/// knot, traversed counter-clockwise from (-half, -half).
std::vector<double> square_knots(int n_per_side);
Vec2 square_point(double half, double t);

struct UVRect {
  double u0, u1, v0, v1;
  double diameter() const { return std::hypot(u1 - u0, v1 - v0); }
  ChartPoint center() const { return {0.5 * (u0 + u1), 0.5 * (v0 + v1)}; }
  bool contains(const ChartPoint& c) const { return c.u >= u0 && c.u <= u1 && c.v >= v0 && c.v <= v1; }
};

inline UVRect full_rect(double alpha) { return {-0.5 * alpha, 0.5 * alpha, -0.5 * alpha, 0.5 * alpha}; }

struct DegreeOptions {
  int n0 = 64;
  WindingOptions winding{};
  /// Splice a drop-time bridge across the steep band where Case 4 turns
  /// into Case 3 along the boundary.
  bool bridge = true;
  int bridge_depth = 12;
  ShootOptions shoot{};
  // The chart inverse is good to about 1e-10, which floors the defect.
  NewtonOptions newton = [] {
    NewtonOptions n;
    n.tol = 1e-9;
    n.max_iter = 20;
    return n;
  }();
  int threads = 0;  // <= 0: hardware concurrency (CANARD_THREADS overrides)
};

struct BridgeInfo {
  int side = 0;            // 0 bottom, 1 right, 2 top, 3 left
  ChartPoint lo, hi;       // boundary points dropping at sigma - 2 alpha and sigma + 2 alpha
  std::size_t samples = 0;
  std::size_t shoot_evals = 0;
};

struct DegreeReport {
  int degree = 0;      // state-space convention: winding_uv * orientation
  int winding_uv = 0;  // along the rectangle traversed counter-clockwise in (u, v)
  int orientation = 1;
  double total_angle = 0.0;
  std::size_t n_evals = 0;  // evaluations of the field p - W(p)
  std::size_t shoot_evals = 0;
  double min_field_magnitude = 0.0;
  double max_increment = 0.0;
  bool certified = false;
  UVRect rect{};
  std::vector<BridgeInfo> bridges;
};

/// Degree of id - W_eps on the parallelogram.
DegreeReport degree_W(const CanardMap& map, const DegreeOptions& opt = {});
DegreeReport degree_W(const CanardMap& map, const UVRect& rect, const DegreeOptions& opt = {});

}  // namespace canard
