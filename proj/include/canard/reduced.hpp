#pragma once

// Canonical reduced orbits through the origin, their crossing (x*, y*), the
// (u, v) flow-time chart around it, the parallelogram and the R-crossing time.

#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <vector>

#include "canard/integrate.hpp"
#include "canard/system.hpp"

namespace canard {

struct PolyPoint {
  double t;
  Vec2 p;
};

struct GeometryOptions {
  double horizon = 20.0;   // |T_a|, |T_r| are clamped here when x never returns to 0
  double spacing = 1e-3;   // max distance between adjacent polyline points
  double tol_A = 1e-8;     // |A| below this is a tangency
  std::size_t index = 0;   // which crossing, ordered by increasing sigma
  ode::Options ode = [] {
    ode::Options o;
    o.rtol = 1e-12;
    o.atol = 1e-14;
    return o;
  }();
};

struct Intersection {
  double tau;
  double sigma;
  Vec2 point;
  double A;
};

struct ReducedGeometry {
  Trajectory<2> traj_a;  // w*_a on [T_a, 0], run backward from the origin
  Trajectory<2> traj_r;  // w*_r on [0, T_r]
  std::vector<PolyPoint> gamma_a, gamma_r;
  double T_a = 0.0, T_r = 0.0;
  bool T_a_clamped = false, T_r_clamped = false;
  double tau = 0.0, sigma = 0.0;
  double x_star = 0.0, y_star = 0.0;
  double A = 0.0;
  std::vector<Intersection> intersections;  // all crossings found, by increasing sigma
  std::size_t selected = 0;

  Vec2 star() const { return {x_star, y_star}; }
  Vec2 w_a(double t) const { return traj_a.eval(t); }
  Vec2 w_r(double t) const { return traj_r.eval(t); }
};

/// Throws NoIntersection / DegenerateTangency.
ReducedGeometry compute_geometry(const SystemSpec& sys, const GeometryOptions& opt = {});

/// f_a g_r - f_r g_a at p.
double transversality(const SystemSpec& sys, const Vec2& p);

/// Default half-size scale of the parallelogram: 0.1 min(|tau|, sigma).
double default_alpha(const ReducedGeometry& geom);

struct ChartPoint {
  double u = 0.0;
  double v = 0.0;
};

/// Short piece of a reduced orbit with a smooth foot-point projection.
class LocalCurve {
 public:
  LocalCurve() = default;
  LocalCurve(std::shared_ptr<const SystemSpec> sys, ReducedKind kind, const Trajectory<2>& traj, double t_lo, double t_hi,
             double t_base);

  Vec2 at(double t) const;
  /// Parameter of the closest curve point, by Newton from the tangent projection at t_base.
  double foot(const Vec2& q) const;
  /// Distance to the curve, positive to the left of the direction of travel.
  double signed_distance(const Vec2& q) const;
  Vec2 unit_tangent(double t) const;
  /// q within `tol` of an interior curve point.
  bool on_curve(const Vec2& q, double tol) const;

  double t_lo() const { return t_lo_; }
  double t_hi() const { return t_hi_; }

 private:
  Vec2 velocity(const Vec2& p) const;

  std::shared_ptr<const SystemSpec> sys_;
  ReducedKind kind_ = ReducedKind::Attractive;
  std::vector<ode::Segment<2>> segs_;  // ordered by increasing time
  double t_lo_ = 0.0, t_hi_ = 0.0, t_base_ = 0.0;
  Vec2 base_{}, base_vel_{};
};

struct ChartOptions {
  double window_factor = 4.0;  // hit times searched within |t| <= window_factor * alpha
  int max_newton = 50;
  double inverse_tol = 1e-10;
  ode::Options ode = [] {
    ode::Options o;
    o.rtol = 1e-12;
    o.atol = 1e-14;
    return o;
  }();
};

/// (u, v) flow-time coordinates near (x*, y*). Holds a copy of the system and
/// of the curve pieces it needs; safe to share between threads.
class Chart {
 public:
  Chart(const SystemSpec& sys, const ReducedGeometry& geom, double alpha, ChartOptions opt = {});

  /// Throws ChartOutOfRange if a curve is not reached within the window.
  ChartPoint uv(const Vec2& p) const;
  double u(const Vec2& p) const;
  double v(const Vec2& p) const;

  /// Newton on uv with a finite-difference Jacobian; throws NoConvergence.
  Vec2 inverse(const ChartPoint& target, std::optional<Vec2> seed = std::nullopt) const;

  /// First-order model p = p* - u F_a* - v F_r*.
  Vec2 linear_inverse(const ChartPoint& c) const;
  ChartPoint linear_uv(const Vec2& p) const;

  double alpha() const { return alpha_; }
  double window() const { return window_; }
  int orientation() const { return A_ > 0 ? 1 : -1; }
  double A() const { return A_; }
  Vec2 star() const { return star_; }
  const SystemSpec& system() const { return *sys_; }
  const LocalCurve& curve_a() const { return ca_; }
  const LocalCurve& curve_r() const { return cr_; }

 private:
  double flow_time(ReducedKind kind, const LocalCurve& target, const Vec2& p) const;

  std::shared_ptr<const SystemSpec> sys_;
  double alpha_, window_;
  ChartOptions opt_;
  Vec2 star_, Fa_, Fr_;
  double A_;
  LocalCurve ca_, cr_;
};

/// Closed, positively oriented loop on the square |u|, |v| = half; first == last.
std::vector<ChartPoint> square_loop(double half, int n_per_side);

struct Parallelogram {
  double alpha = 0.0;
  int orientation = 1;
  std::vector<ChartPoint> boundary_uv;  // closed loop, see square_loop
  std::vector<Vec2> boundary_xy;
  std::vector<ChartPoint> q_minus_uv, q_plus_uv;  // v = +-(alpha/2) sgn A
  std::vector<Vec2> q_minus, q_plus;

  bool contains(const ChartPoint& c) const {
    return std::abs(c.u) < 0.5 * alpha && std::abs(c.v) < 0.5 * alpha;
  }
};

Parallelogram make_parallelogram(const Chart& chart, int n_per_side);

/// Largest alpha <= default_alpha (halving) whose boundary corners and edge
/// midpoints invert through the chart.
double choose_alpha(const SystemSpec& sys, const ReducedGeometry& geom, ChartOptions opt = {});

enum class PointClass { Stabilizing, Destabilizing };

const char* to_string(PointClass c);

struct TildeOptions {
  double margin = 1e-3;
  double corner_tol = 1e-10;
  ode::Options ode = [] {
    ode::Options o;
    o.rtol = 1e-12;
    o.atol = 1e-14;
    return o;
  }();
};

struct TildeResult {
  double t = 0.0;
  Vec2 point{};
  PointClass cls = PointClass::Stabilizing;
  bool corner = false;  // crossing at the origin itself
};

/// Crossing of {x = 0, y <= 0} or {y = 0, x <= 0} closest to t = 0 along the
/// attractive flow started at p0 at t = tau. A crossing at the origin is
/// resolved by sgn(A v(p0)) when a chart is given. Throws NoCrossing.
TildeResult tilde_t(const SystemSpec& sys, const ReducedGeometry& geom, const Vec2& p0,
                    const Chart* chart = nullptr, const TildeOptions& opt = {});

PointClass classify(const SystemSpec& sys, const ReducedGeometry& geom, const Vec2& p0,
                    const Chart* chart = nullptr, const TildeOptions& opt = {});

}  // namespace canard
