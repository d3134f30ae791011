#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "canard/dopri5.hpp"
#include "canard/system.hpp"

namespace canard {

using ode::Direction;
using ode::EventSpec;
using ode::Status;
using ode::Trajectory;

/// Reduced planar flow (attractive or repulsive) from p0 at t0 to t1.
Trajectory<2> integrate_reduced(const SystemSpec& sys, ReducedKind kind, const Vec2& p0, double t0, double t1,
                                const std::vector<EventSpec<2>>& events = {}, const ode::Options& opt = {});

struct FullOptions {
  ode::Options ode{};
  /// Steps are capped at step_factor * eps.
  double step_factor = 0.5;
  /// |z| above this aborts the run with Status::BlowUp.
  double z_ceiling = 40.0;
  /// Terminate at the first downward crossing of z = 0 at or after this time
  /// (logged as event "z_down"). Unset: crossings are only logged.
  std::optional<double> stop_on_z_down_after;
};

/// Ids of the built-in kink events logged by integrate_full.
inline constexpr const char* kZUp = "z_up";
inline constexpr const char* kZDown = "z_down";

/// Full slow-fast system from s0 at t0 to t1. The kink z = 0 is handled as a
/// switching surface; every crossing is logged as kZUp / kZDown.
Trajectory<3> integrate_full(const SystemSpec& sys, double eps, const Vec3& s0, double t0, double t1,
                             const std::vector<EventSpec<3>>& events = {}, const FullOptions& opt = {});

/// CSV `t,x,y` / `t,x,y,z` at accepted steps, 17 significant digits.
void write_csv(std::ostream& os, const Trajectory<2>& traj);
void write_csv(std::ostream& os, const Trajectory<3>& traj);

/// Event log as a JSON array of {t, id, state}.
template <std::size_t N>
std::string events_json(const Trajectory<N>& traj);

}  // namespace canard
