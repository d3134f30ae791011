#include "canard/shooting.hpp"

#include <algorithm>
#include <cmath>

#include "canard/errors.hpp"

namespace canard {

Halves shoot_halves(const SystemSpec& sys, double eps, const Vec2& p0, double tau, const Vec2& drop, double s,
                    const ShootOptions& opt) {
  FullOptions fo = opt.full;
  fo.stop_on_z_down_after.reset();
  Halves h;
  h.forward = integrate_full(sys, eps, {p0[0], p0[1], 0.0}, tau, opt.t_match, {}, fo);
  if (h.forward.status() != Status::Completed)
    throw IntegrationError("forward half stopped at t = " + std::to_string(h.forward.t_end()));
  h.backward = integrate_full(sys, eps, {drop[0], drop[1], 0.0}, s, opt.t_match, {}, fo);
  if (h.backward.status() != Status::Completed)
    throw IntegrationError("backward half stopped at t = " + std::to_string(h.backward.t_end()));
  h.defect = h.forward.y_end() - h.backward.y_end();
  return h;
}

std::optional<double> first_z_up(const Halves& h) {
  std::optional<double> t;
  for (const auto* tr : {&h.forward, &h.backward})
    for (const auto& e : tr->events())
      if (e.id == kZUp && (!t || e.t < *t)) t = e.t;
  return t;
}

std::optional<Vec3> solve3(const std::array<Vec3, 3>& rows, const Vec3& r) {
  double m[3][4];
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) m[i][j] = rows[i][j];
    m[i][3] = r[i];
  }
  double scale = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) scale = std::max(scale, std::fabs(m[i][j]));
  if (!(scale > 0.0) || !std::isfinite(scale)) return std::nullopt;
  for (int c = 0; c < 3; ++c) {
    int p = c;
    for (int i = c + 1; i < 3; ++i)
      if (std::fabs(m[i][c]) > std::fabs(m[p][c])) p = i;
    if (std::fabs(m[p][c]) <= 1e-14 * scale) return std::nullopt;
    if (p != c)
      for (int j = 0; j < 4; ++j) std::swap(m[p][j], m[c][j]);
    for (int i = c + 1; i < 3; ++i) {
      const double k = m[i][c] / m[c][c];
      for (int j = c; j < 4; ++j) m[i][j] -= k * m[c][j];
    }
  }
  Vec3 d{};
  for (int i = 2; i >= 0; --i) {
    double acc = m[i][3];
    for (int j = i + 1; j < 3; ++j) acc -= m[i][j] * d[j];
    d[i] = acc / m[i][i];
  }
  return d;
}

namespace {

double max_abs(const Vec3& v) { return std::max({std::fabs(v[0]), std::fabs(v[1]), std::fabs(v[2])}); }

}  // namespace

NewtonResult newton3(const std::function<Vec3(const Vec3&)>& residual, Vec3 x0, const NewtonOptions& opt) {
  NewtonResult res;
  res.x = x0;
  auto eval = [&](const Vec3& x) {
    ++res.evals;
    return residual(x);
  };
  res.residual = eval(res.x);
  for (; res.iterations < opt.max_iter; ++res.iterations) {
    if (max_abs(res.residual) <= opt.tol) {
      res.converged = true;
      return res;
    }
    std::array<Vec3, 3> J{};
    bool ok = true;
    for (int j = 0; j < 3 && ok; ++j) {
      Vec3 y = res.x;
      y[j] += opt.fd_h;
      try {
        const Vec3 rj = eval(y);
        for (int i = 0; i < 3; ++i) J[i][j] = (rj[i] - res.residual[i]) / opt.fd_h;
      } catch (const DomainError&) {
        ok = false;
      }
    }
    if (!ok) return res;
    const auto d = solve3(J, res.residual);
    if (!d) return res;
    double lam = 1.0;
    bool moved = false;
    for (int k = 0; k <= opt.max_halvings; ++k, lam *= 0.5) {
      const Vec3 trial = res.x - lam * *d;
      try {
        const Vec3 rt = eval(trial);
        // Full steps are always taken; damped ones only if they help.
        if (k == 0 || max_abs(rt) < max_abs(res.residual)) {
          res.x = trial;
          res.residual = rt;
          moved = true;
          break;
        }
      } catch (const DomainError&) {
      }
    }
    if (!moved) return res;
  }
  res.converged = max_abs(res.residual) <= opt.tol;
  return res;
}

}  // namespace canard
