#pragma once

// Fixed point of W_eps, the periodic canard through it, sweeps over eps and
// the threshold a0 below which the reduced curves stop crossing.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "canard/canardmap.hpp"
#include "canard/degree.hpp"
#include "canard/shooting.hpp"

namespace canard {

struct SolverOptions {
  ShootOptions shoot{};
  NewtonOptions newton{};
  /// Compute degree_W first and fail with DegreeZero if it vanishes.
  bool check_degree = false;
  DegreeOptions degree{};
  /// Accept an orbit whose section point lies outside the parallelogram.
  bool allow_outside = false;

  bool two_sided = true;  // primary stage; off leaves only the fallbacks
  bool broyden_fallback = true;
  int broyden_max_iter = 60;
  double broyden_tol = 1e-8;  // |p - W(p)| in state space
  bool subdivision_fallback = true;
  double subdivision_diameter = 1e-6;
  int subdivision_n0 = 16;

  double layer_factor = 5.0;      // boundary layers of width layer_factor eps |ln eps|
  double adherence_factor = 3.0;  // slow sheets within adherence_factor M eps
  double sample_dt = 1e-3;        // spacing of the reported orbit
  int threads = 0;
};

struct OrbitSample {
  double t;
  Vec3 state;
};

struct Adherence {
  double layer = 0.0;
  double bound = 0.0;
  double attr_from = 0.0, attr_to = 0.0;    // window checked against z = x
  double repul_from = 0.0, repul_to = 0.0;  // window checked against z = -x
  std::size_t attr_samples = 0, repul_samples = 0;
  double max_attr = 0.0;   // max |z - x|
  double max_repul = 0.0;  // max |z + x|
  bool ok = false;
};

struct CanardResult {
  Vec2 fixed_point{};
  ChartPoint uv{};
  bool inside = false;  // in the closed parallelogram
  double s = 0.0;       // drop time
  double period = 0.0;  // s - tau
  double limit = 0.0;   // sigma - tau
  double deviation = 0.0;
  double closure_error = 0.0;  // |w(tau + period) - w(tau)|
  double residual = 0.0;       // |p - W(p)|
  double forward_drift = 0.0;  // single forward run from the section, see forward_s
  double forward_s = 0.0;
  double tilde = 0.0;
  double t_match = 0.0;
  MapCase case_tag = MapCase::Case1;
  std::string method;
  int iterations = 0;
  std::size_t evals = 0;
  std::optional<DegreeReport> degree;
  std::vector<OrbitSample> orbit;  // from tau to tau + period
  Adherence adherence;
};

/// Throws DegreeZero (with check_degree) or NoConvergence.
CanardResult find_fixed_point(const CanardMap& map, const SolverOptions& opt = {});

struct SweepRow {
  double eps = 0.0;
  bool ok = false;
  std::string error;
  std::optional<CanardResult> result;
};

/// One find_fixed_point per eps (descending); failures are recorded per row.
std::vector<SweepRow> period_sweep(const SystemSpec& sys, std::shared_ptr<const ReducedGeometry> geom,
                                   const MapParams& base, const std::vector<double>& eps_list,
                                   const SolverOptions& opt = {});

/// Splits rect in four repeatedly, keeping a child with nonzero degree, until
/// the diameter is below min_diameter. A child whose degree() throws is
/// skipped. Stops early, at the last rectangle with nonzero degree, if no
/// child qualifies; nullopt if rect itself has degree 0.
struct Subdivision {
  UVRect rect{};
  int levels = 0;
};
std::optional<Subdivision> subdivide(const UVRect& rect, const std::function<int(const UVRect&)>& degree,
                                      double min_diameter, int threads = 0);

/// Bisection on `param` for "the reduced curves intersect". Requires
/// NoIntersection at a_lo and an intersection at a_hi, else BadBracket.
double find_a0(const SystemSpec& base, const std::string& param, double a_lo, double a_hi, double tol_a,
               const GeometryOptions& geo = {});

}  // namespace canard
