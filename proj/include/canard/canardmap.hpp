#pragma once

// The drop time s_eps and the planar map W_eps on the section z = 0.

#include <memory>
#include <optional>
#include <vector>

#include "canard/integrate.hpp"
#include "canard/reduced.hpp"
#include "canard/shooting.hpp"

namespace canard {

struct MapParams {
  double eps = 0.1;
  double alpha = 0.0;  // <= 0: default_alpha(geometry)
  /// <= 0: max(alpha / 8, 1.5 eps |ln eps|, 1.25 lag), where lag is the
  /// time from tilde t to z > 0 on the canard through u = 0 (see rho_lag).
  double rho = 0.0;
  double delta = 0.5;  // radius of the origin neighbourhood bounding rho
  /// Reject rho unless rho < alpha / 4 and rho < delta / (2 M). Off by
  /// default: at eps ~ 0.1 those bounds are shorter than the escape time of
  /// destabilizing points, which then never reach Case 3.
  bool strict_rho = false;
  double M_est = 0.0;  // <= 0: estimated on `box`
  Box box{};
  FullOptions full = [] {
    FullOptions f;
    f.ode.rtol = 1e-10;
    f.ode.atol = 1e-12;
    return f;
  }();
  TildeOptions tilde{};
  ChartOptions chart{};
  bool keep_trajectory = false;

  // Filled in by CanardMap.
  double rho_lag = 0.0;  // 0 when rho was given or the canard could not be solved
  bool rho_below_alpha_bound = false;
  bool rho_below_delta_bound = false;
};

enum class MapCase { Case1 = 1, Case2 = 2, Case3 = 3, Case4 = 4 };

const char* to_string(MapCase c);

/// Case from |s - sigma| against alpha, 2 alpha.
MapCase case_of(double s, double sigma, double alpha);

struct STime {
  double s = 0.0;
  Vec3 state{};              // full state at s (at the blow-up point when s = T_r by blow-up)
  double activation = 0.0;   // tilde t + rho
  TildeResult tilde;
  bool at_activation = false;  // z was already <= 0 at tilde t + rho
  bool blow_up = false;
  std::optional<Trajectory<3>> trajectory;
};

struct MapResult {
  Vec2 image{};
  double s_eps = 0.0;
  MapCase case_tag = MapCase::Case1;
  STime detail;
};

/// Point of the section on the line u = const whose orbit drops at exactly s,
/// found by two-sided shooting in (v, drop point). Along the sides of the
/// parallelogram these points fill a v-interval far too thin for the forward
/// map to resolve.
struct BandPoint {
  ChartPoint uv{};
  Vec2 p0{};
  Vec2 drop{};
  double s = 0.0;
  double defect = 0.0;
  Halves halves;
};

inline NewtonOptions band_newton() {
  NewtonOptions o;
  o.tol = 1e-9;  // the chart inverse is good to about 1e-10
  o.max_iter = 30;
  return o;
}

/// Tries each v seed in turn; nullopt if none converges.
std::optional<BandPoint> band_point(const SystemSpec& sys, const ReducedGeometry& g, const Chart& chart, double eps,
                                    double u, double s, const std::vector<double>& v_seeds,
                                    const ShootOptions& shoot = {}, const NewtonOptions& newton = band_newton());

/// Resolved parameters plus geometry and chart; immutable and shareable.
class CanardMap {
 public:
  /// Fills defaults; with strict_rho, rejects rho >= alpha / 4 or rho >= delta / (2 M).
  CanardMap(const SystemSpec& sys, std::shared_ptr<const ReducedGeometry> geom, MapParams params);

  STime s_time(const Vec2& p0) const;
  MapResult W(const Vec2& p0) const;

  /// Image formula for a given drop time and drop state.
  Vec2 image_for(double s, const Vec2& drop_point) const;

  /// band_point with seeds v in {0, alpha/8, alpha/4, -alpha/8}.
  std::optional<BandPoint> band_point(double u, double s) const;

  const SystemSpec& system() const { return chart_.system(); }
  const ReducedGeometry& geometry() const { return *geom_; }
  std::shared_ptr<const ReducedGeometry> geometry_ptr() const { return geom_; }
  const Chart& chart() const { return chart_; }
  const MapParams& params() const { return p_; }
  double eps() const { return p_.eps; }
  double alpha() const { return p_.alpha; }
  double rho() const { return p_.rho; }

 private:
  std::shared_ptr<const ReducedGeometry> geom_;
  MapParams p_;
  Chart chart_;

  void resolve_rho(const SystemSpec& sys);
};

}  // namespace canard
