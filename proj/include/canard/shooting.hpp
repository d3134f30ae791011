#pragma once

// Two-sided shooting through the section z = 0.
//
// Forward integration from a point of the section at t = tau follows the
// attracting sheet stably up to the turning region, but past it every error
// grows like exp(t / eps). Backward integration from a drop point at time s
// follows the repelling sheet stably down to the same region. Matching the
// two halves at a fixed time in between replaces one badly conditioned shot
// by a well conditioned 3 x 3 system.

#include <functional>
#include <optional>

#include "canard/integrate.hpp"
#include "canard/vec.hpp"

namespace canard {

struct ShootOptions {
  double t_match = 0.0;
  FullOptions full = [] {
    FullOptions f;
    f.ode.rtol = 1e-12;
    f.ode.atol = 1e-14;
    return f;
  }();
};

struct Halves {
  Trajectory<3> forward;   // from (p0, 0) at tau to t_match
  Trajectory<3> backward;  // from (drop, 0) at s back to t_match
  Vec3 defect{};           // forward end - backward end
};

/// Throws IntegrationError if either half does not reach t_match.
Halves shoot_halves(const SystemSpec& sys, double eps, const Vec2& p0, double tau, const Vec2& drop, double s,
                    const ShootOptions& opt = {});

/// Earliest upward crossing of z = 0 (real time) on either half.
std::optional<double> first_z_up(const Halves& h);

inline Vec3 match_defect(const SystemSpec& sys, double eps, const Vec2& p0, double tau, const Vec2& drop, double s,
                         const ShootOptions& opt = {}) {
  return shoot_halves(sys, eps, p0, tau, drop, s, opt).defect;
}

struct NewtonOptions {
  int max_iter = 40;
  double tol = 1e-12;  // max-norm of the residual
  double fd_h = 1e-7;
  int max_halvings = 12;
};

struct NewtonResult {
  Vec3 x{};
  Vec3 residual{};
  int iterations = 0;
  int evals = 0;
  bool converged = false;
};

/// Damped Newton with a forward-difference Jacobian. A residual that throws
/// counts as a failed trial and the step is halved.
NewtonResult newton3(const std::function<Vec3(const Vec3&)>& residual, Vec3 x0, const NewtonOptions& opt = {});

/// Solves J d = r by Gaussian elimination with partial pivoting; nullopt if singular.
std::optional<Vec3> solve3(const std::array<Vec3, 3>& rows, const Vec3& r);

}  // namespace canard
