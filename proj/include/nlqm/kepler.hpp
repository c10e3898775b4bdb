#pragma once

// Planar Kepler problem H = |p|^2/2 - mu/|q|, used to validate the steppers
// against the closed-form ellipse.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "nlqm/error.hpp"
#include "nlqm/integrate.hpp"

namespace nlqm {

class KeplerSystem {
 public:
  explicit KeplerSystem(double mu = 1.0) : mu_(mu) {}

  std::size_t dim() const noexcept { return 2; }
  double mu() const noexcept { return mu_; }

  double energy(std::span<const double> q, std::span<const double> p) const {
    return 0.5 * (p[0] * p[0] + p[1] * p[1]) - mu_ / std::hypot(q[0], q[1]);
  }

  void gradients(std::span<const double> q, std::span<const double> p, std::span<double> gq,
                 std::span<double> gp) const {
    accel(q, gq);
    gp[0] = p[0];
    gp[1] = p[1];
  }

  // Separable already: freezing is a no-op.
  struct Frozen {
    const KeplerSystem* sys = nullptr;
    void drift(std::span<const double> p, std::span<double> out) const {
      out[0] = p[0];
      out[1] = p[1];
    }
    void kick(std::span<const double> q, std::span<double> out) const { sys->accel(q, out); }
  };

  void freeze(std::span<const double>, std::span<const double>, Frozen& into) const { into.sys = this; }

  /// dV/dq = mu q / r^3.
  void accel(std::span<const double> q, std::span<double> out) const {
    const double r = std::hypot(q[0], q[1]);
    if (!(r > 1e-12)) throw Error(ErrorKind::BlowUp, "Kepler collision (r -> 0)");
    const double k = mu_ / (r * r * r);
    out[0] = k * q[0];
    out[1] = k * q[1];
  }

 private:
  double mu_;
};

/// Closed-form two-body orbit through (q0, p0).
class KeplerOrbit {
 public:
  KeplerOrbit(std::array<double, 2> q0, std::array<double, 2> p0, double mu) : mu_(mu) {
    const double r = std::hypot(q0[0], q0[1]);
    const double v2 = p0[0] * p0[0] + p0[1] * p0[1];
    ang_mom_ = q0[0] * p0[1] - q0[1] * p0[0];
    require(std::abs(ang_mom_) > 1e-12, ErrorKind::Precondition, "Kepler orbit needs nonzero angular momentum");
    energy_ = 0.5 * v2 - mu / r;
    require(energy_ < 0, ErrorKind::Precondition, "Kepler oracle supports bound orbits only");
    a_ = -mu / (2.0 * energy_);
    const double rv = q0[0] * p0[0] + q0[1] * p0[1];
    const double ex = ((v2 - mu / r) * q0[0] - rv * p0[0]) / mu;
    const double ey = ((v2 - mu / r) * q0[1] - rv * p0[1]) / mu;
    e_ = std::hypot(ex, ey);
    n_ = std::sqrt(mu / (a_ * a_ * a_));
    dir_ = ang_mom_ > 0 ? 1.0 : -1.0;
    if (e_ < 1e-10) {
      e_ = 0.0;
      arg_peri_ = 0.0;
      m0_ = std::atan2(q0[1], q0[0]) * dir_;
    } else {
      arg_peri_ = std::atan2(ey, ex);
      const double cos_e = (1.0 - r / a_) / e_;
      const double sin_e = rv / (e_ * std::sqrt(mu * a_));
      const double ecc_anom = std::atan2(sin_e, cos_e);
      m0_ = ecc_anom - e_ * std::sin(ecc_anom);
    }
  }

  double semi_major_axis() const noexcept { return a_; }
  double eccentricity() const noexcept { return e_; }
  double period() const noexcept { return 2.0 * std::numbers::pi / n_; }
  double energy() const noexcept { return energy_; }
  double angular_momentum() const noexcept { return ang_mom_; }

  std::array<double, 2> position(double t) const {
    const double mean = m0_ + n_ * t;
    if (e_ == 0.0) {
      const double th = dir_ * mean;
      return {a_ * std::cos(th), a_ * std::sin(th)};
    }
    double ea = e_ < 0.8 ? mean : std::numbers::pi;
    for (int it = 0; it < 50; ++it) {
      const double d = (ea - e_ * std::sin(ea) - mean) / (1.0 - e_ * std::cos(ea));
      ea -= d;
      if (std::abs(d) < 1e-15) break;
    }
    const double x = a_ * (std::cos(ea) - e_);
    const double y = dir_ * a_ * std::sqrt(1.0 - e_ * e_) * std::sin(ea);
    const double c = std::cos(arg_peri_), s = std::sin(arg_peri_);
    return {c * x - s * y, s * x + c * y};
  }

 private:
  double mu_, a_ = 0, e_ = 0, n_ = 0, m0_ = 0, arg_peri_ = 0, dir_ = 1, energy_ = 0, ang_mom_ = 0;
};

enum class KeplerMethod { Ruth4, Tao, RungeKutta4 };

struct KeplerRun {
  std::array<double, 2> q0{1.0, 0.0};
  std::array<double, 2> p0{0.0, 1.0};
  double mu = 1.0;
  KeplerMethod method = KeplerMethod::Ruth4;
  std::size_t steps = 10000;
  /// 0 selects one orbital period.
  double t_final = 0.0;
  double omega = 1e4;

  /// Periapsis start at r = 1 - e with a = 1, giving period 2 pi for mu = 1.
  static KeplerRun eccentric(double e, KeplerMethod method, std::size_t steps) {
    KeplerRun run;
    run.q0 = {1.0 - e, 0.0};
    run.p0 = {0.0, std::sqrt((1.0 + e) / (1.0 - e))};
    run.method = method;
    run.steps = steps;
    return run;
  }
};

struct KeplerReport {
  double t_final = 0.0;
  double max_energy_error = 0.0;        ///< max |E(t) - E0|
  double max_angular_momentum_error = 0.0;
  double area_error = 0.0;              ///< |swept area - L0 T / 2|, chord triangles
  double max_position_error = 0.0;      ///< vs the closed-form orbit, over all steps
  double closure_error = 0.0;           ///< |q(T) - q(0)| when T is one period
  double min_radius = 0.0, max_radius = 0.0;
  std::array<double, 2> final_q{}, final_p{};
};

namespace detail {

inline void rk4_kepler_step(const KeplerSystem& sys, std::array<double, 2>& q, std::array<double, 2>& p, double h) {
  auto deriv = [&](const std::array<double, 4>& y) {
    double a[2];
    sys.accel(std::span<const double>(y.data(), 2), a);
    return std::array<double, 4>{y[2], y[3], -a[0], -a[1]};
  };
  const std::array<double, 4> y0{q[0], q[1], p[0], p[1]};
  auto axpy = [](const std::array<double, 4>& y, double s, const std::array<double, 4>& k) {
    return std::array<double, 4>{y[0] + s * k[0], y[1] + s * k[1], y[2] + s * k[2], y[3] + s * k[3]};
  };
  const auto k1 = deriv(y0);
  const auto k2 = deriv(axpy(y0, h / 2, k1));
  const auto k3 = deriv(axpy(y0, h / 2, k2));
  const auto k4 = deriv(axpy(y0, h, k3));
  for (int i = 0; i < 2; ++i) {
    q[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    p[i] += h / 6 * (k1[i + 2] + 2 * k2[i + 2] + 2 * k3[i + 2] + k4[i + 2]);
  }
}

}  // namespace detail

/// Integrates the orbit and reports conserved quantities and the error against the ellipse.
inline KeplerReport kepler_oracle(const KeplerRun& run) {
  require(run.steps >= 1, ErrorKind::Config, "steps must be at least 1");
  const KeplerOrbit orbit(run.q0, run.p0, run.mu);
  const KeplerSystem sys(run.mu);
  const double t_final = run.t_final > 0 ? run.t_final : orbit.period();
  const double h = t_final / static_cast<double>(run.steps);

  std::array<double, 2> q = run.q0, p = run.p0;
  const double e0 = sys.energy(q, p);
  const double l0 = orbit.angular_momentum();

  KeplerReport rep;
  rep.t_final = t_final;
  rep.min_radius = rep.max_radius = std::hypot(q[0], q[1]);
  double area = 0.0;

  auto observe = [&](std::size_t k, const std::array<double, 2>& prev) {
    const double t = static_cast<double>(k) * h;
    rep.max_energy_error = std::max(rep.max_energy_error, std::abs(sys.energy(q, p) - e0));
    rep.max_angular_momentum_error = std::max(rep.max_angular_momentum_error, std::abs(q[0] * p[1] - q[1] * p[0] - l0));
    const auto exact = orbit.position(t);
    rep.max_position_error = std::max(rep.max_position_error, std::hypot(q[0] - exact[0], q[1] - exact[1]));
    area += 0.5 * (prev[0] * q[1] - prev[1] * q[0]);
    const double r = std::hypot(q[0], q[1]);
    rep.min_radius = std::min(rep.min_radius, r);
    rep.max_radius = std::max(rep.max_radius, r);
    if (!std::isfinite(r)) throw BlowUpError(k, "Kepler orbit diverged");
  };

  if (run.method == KeplerMethod::Tao) {
    ExtendedState e(q, p);
    TaoStepper<KeplerSystem> stepper(sys, run.omega);
    for (std::size_t k = 1; k <= run.steps; ++k) {
      const auto prev = q;
      stepper.step(e, h);
      q = {e.q[0], e.q[1]};
      p = {e.p[0], e.p[1]};
      observe(k, prev);
    }
  } else if (run.method == KeplerMethod::Ruth4) {
    Ruth4Stepper<KeplerSystem> stepper(sys);
    for (std::size_t k = 1; k <= run.steps; ++k) {
      const auto prev = q;
      stepper.step(q, p, h);
      observe(k, prev);
    }
  } else {
    for (std::size_t k = 1; k <= run.steps; ++k) {
      const auto prev = q;
      detail::rk4_kepler_step(sys, q, p, h);
      observe(k, prev);
    }
  }
  rep.area_error = std::abs(area - 0.5 * l0 * t_final);
  rep.closure_error = std::hypot(q[0] - run.q0[0], q[1] - run.q0[1]);
  rep.final_q = q;
  rep.final_p = p;
  return rep;
}

}  // namespace nlqm
