#include "canard/canardmap.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include "canard/errors.hpp"
#include "canard/shooting.hpp"

namespace canard {

const char* to_string(MapCase c) {
  switch (c) {
    case MapCase::Case1: return "Case1";
    case MapCase::Case2: return "Case2";
    case MapCase::Case3: return "Case3";
    case MapCase::Case4: return "Case4";
  }
  return "?";
}

MapCase case_of(double s, double sigma, double alpha) {
  const double d = std::fabs(s - sigma);
  if (d < alpha) return MapCase::Case1;
  if (d < 2.0 * alpha) return MapCase::Case2;
  return s > sigma ? MapCase::Case3 : MapCase::Case4;
}

namespace {

MapParams resolve(const SystemSpec& sys, const ReducedGeometry& g, MapParams p) {
  if (!(p.eps > 0.0)) throw InputError("eps must be positive");
  if (p.alpha <= 0.0) p.alpha = default_alpha(g);
  if (p.M_est <= 0.0) p.M_est = check_assumptions(sys, p.box, 11).M_est;
  return p;
}

// Time from tilde t until z first turns positive, on the orbit that starts on
// u = 0 and drops at sigma.
std::optional<double> canard_lag(const SystemSpec& sys, const ReducedGeometry& g, const Chart& chart, double eps) {
  const double a = chart.alpha();
  const auto b = band_point(sys, g, chart, eps, 0.0, g.sigma, {0.0, 0.125 * a, 0.25 * a, -0.125 * a});
  if (!b) return std::nullopt;
  try {
    const double tt = tilde_t(sys, g, b->p0, &chart).t;
    const auto tz = first_z_up(b->halves);
    if (tz && *tz >= tt) return *tz - tt;
  } catch (const DomainError&) {
  }
  return std::nullopt;
}

void append(Trajectory<3>& into, const Trajectory<3>& part) {
  for (const auto& s : part.segments()) into.push(s);
  for (const auto& e : part.events()) into.log(e);
  into.finish(part.status());
}

}  // namespace

std::optional<BandPoint> band_point(const SystemSpec& sys, const ReducedGeometry& g, const Chart& chart, double eps,
                                    double u, double s, const std::vector<double>& v_seeds, const ShootOptions& shoot,
                                    const NewtonOptions& newton) {
  const Vec2 wr = g.w_r(s);
  for (double vseed : v_seeds) {
    auto residual = [&](const Vec3& x) {
      return match_defect(sys, eps, chart.inverse({u, x[0]}), g.tau, {x[1], x[2]}, s, shoot);
    };
    try {
      const NewtonResult nr = newton3(residual, {vseed, wr[0], wr[1]}, newton);
      if (!nr.converged) continue;
      BandPoint b;
      b.uv = {u, nr.x[0]};
      b.p0 = chart.inverse(b.uv);
      b.drop = {nr.x[1], nr.x[2]};
      b.s = s;
      b.halves = shoot_halves(sys, eps, b.p0, g.tau, b.drop, s, shoot);
      b.defect = norm(b.halves.defect);
      return b;
    } catch (const DomainError&) {
    }
  }
  return std::nullopt;
}

std::optional<BandPoint> CanardMap::band_point(double u, double s) const {
  const double a = p_.alpha;
  return canard::band_point(system(), *geom_, chart_, p_.eps, u, s, {0.0, 0.125 * a, 0.25 * a, -0.125 * a});
}

CanardMap::CanardMap(const SystemSpec& sys, std::shared_ptr<const ReducedGeometry> geom, MapParams params)
    : geom_(std::move(geom)), p_(resolve(sys, *geom_, params)), chart_(sys, *geom_, p_.alpha, p_.chart) {
  resolve_rho(sys);
}

void CanardMap::resolve_rho(const SystemSpec& sys) {
  MapParams& p = p_;
  if (p.rho <= 0.0) {
    p.rho = std::max(p.alpha / 8.0, 1.5 * p.eps * std::fabs(std::log(p.eps)));
    if (const auto lag = canard_lag(sys, *geom_, chart_, p.eps)) {
      p.rho_lag = *lag;
      p.rho = std::max(p.rho, 1.25 * *lag);
    }
  }
  if (!(p.rho > 0.0)) throw ConfigError("rho must be positive");
  p.rho_below_alpha_bound = p.rho < p.alpha / 4.0;
  p.rho_below_delta_bound = p.rho < p.delta / (2.0 * p.M_est);
  if (p.strict_rho && !p.rho_below_alpha_bound) {
    std::ostringstream os;
    os << "rho = " << p.rho << " must be below alpha / 4 = " << p.alpha / 4.0;
    throw ConfigError(os.str());
  }
  if (p.strict_rho && !p.rho_below_delta_bound) {
    std::ostringstream os;
    os << "rho = " << p.rho << " must be below delta / (2 M) = " << p.delta / (2.0 * p.M_est);
    throw ConfigError(os.str());
  }
}

STime CanardMap::s_time(const Vec2& p0) const {
  const SystemSpec& sys = system();
  const ReducedGeometry& g = *geom_;
  STime r;
  r.tilde = tilde_t(sys, g, p0, &chart_, p_.tilde);
  r.activation = r.tilde.t + p_.rho;
  const Vec3 s0{p0[0], p0[1], 0.0};

  if (!(r.activation < g.T_r)) {
    r.s = g.T_r;
    r.state = s0;
    return r;
  }

  // Up to the activation time z <= 0 does not count.
  FullOptions o1 = p_.full;
  o1.stop_on_z_down_after.reset();
  Trajectory<3> first;
  try {
    first = integrate_full(sys, p_.eps, s0, g.tau, r.activation, {}, o1);
  } catch (const IntegrationError& e) {
    throw IntegrationError(std::string("before tilde t + rho: ") + e.what());
  }
  if (p_.keep_trajectory) r.trajectory = first;
  if (first.status() == Status::BlowUp) {
    r.blow_up = true;
    r.s = g.T_r;
    r.state = first.y_end();
    return r;
  }
  const Vec3 at_act = first.y_end();
  if (at_act[2] <= 0.0) {
    r.at_activation = true;
    r.s = r.activation;
    r.state = at_act;
    return r;
  }

  FullOptions o2 = p_.full;
  o2.stop_on_z_down_after = r.activation;
  const Trajectory<3> second = integrate_full(sys, p_.eps, at_act, r.activation, g.T_r, {}, o2);
  if (p_.keep_trajectory) append(*r.trajectory, second);
  r.state = second.y_end();
  if (second.status() == Status::TerminalEvent) {
    r.s = second.t_end();
  } else {
    r.blow_up = second.status() == Status::BlowUp;
    r.s = g.T_r;
  }
  return r;
}

Vec2 CanardMap::image_for(double s, const Vec2& drop) const {
  const ReducedGeometry& g = *geom_;
  const double a = p_.alpha;
  const double d = std::fabs(s - g.sigma);
  switch (case_of(s, g.sigma, a)) {
    case MapCase::Case1: return drop;
    case MapCase::Case2: {
      const double w1 = (2.0 * a - d) / a, w2 = (d - a) / a;
      return w1 * drop + w2 * g.w_r(s);
    }
    case MapCase::Case3: return g.w_r(g.sigma + 2.0 * a);
    case MapCase::Case4: return g.w_r(g.sigma - 2.0 * a);
  }
  return drop;
}

MapResult CanardMap::W(const Vec2& p0) const {
  MapResult m;
  m.detail = s_time(p0);
  m.s_eps = m.detail.s;
  m.case_tag = case_of(m.s_eps, geom_->sigma, p_.alpha);
  m.image = image_for(m.s_eps, xy(m.detail.state));
  return m;
}

}  // namespace canard
