#pragma once

// Explicit symplectic steppers.
//
//  * ruth4_step: the 4-stage fourth-order composition for separable systems.
//    For a nonseparable system the nonseparable part is frozen at the start of
//    each stage (FreezableSystem::freeze) so every stage is a canonical update.
//  * tao_step: extended phase space (Q, P, X, Y) with
//      H_ext = H(Q, Y) + H(X, P) + omega (|Q - X|^2 + |P - Y|^2),
//    advanced as A(h/2) B(h/2) C(h) B(h/2) A(h/2).

#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nlqm/dynamics.hpp"
#include "nlqm/error.hpp"
#include "nlqm/hilbert.hpp"

namespace nlqm {

template <class S>
concept HamiltonianSystem = requires(const S& sys, std::span<const double> x, std::span<double> out) {
  { sys.dim() } -> std::convertible_to<std::size_t>;
  { sys.energy(x, x) } -> std::convertible_to<double>;
  sys.gradients(x, x, out, out);
};

template <class S>
concept FreezableSystem = HamiltonianSystem<S> &&
    requires(const S& sys, typename S::Frozen& frozen, std::span<const double> x, std::span<double> out) {
      sys.freeze(x, x, frozen);
      std::as_const(frozen).drift(x, out);
      std::as_const(frozen).kick(x, out);
    };

struct Ruth4Coefficients {
  // q += c_i h dH/dp, then p -= d_i h dH/dq, for i = 0..3.
  double c[4];
  double d[4];
};

inline Ruth4Coefficients ruth4_coefficients() {
  const double x = std::cbrt(2.0);
  const double a = 1.0 / (2.0 - x);
  return {{a / 2, (1 - x) * a / 2, (1 - x) * a / 2, a / 2}, {a, -x * a, a, 0.0}};
}

template <FreezableSystem S>
class Ruth4Stepper {
 public:
  explicit Ruth4Stepper(const S& sys) : sys_(&sys), grad_(sys.dim()), coef_(ruth4_coefficients()) {}

  void step(std::span<double> q, std::span<double> p, double h) {
    for (int i = 0; i < 4; ++i) {
      sys_->freeze(q, p, frozen_);
      frozen_.drift(p, grad_);
      for (std::size_t k = 0; k < q.size(); ++k) q[k] += coef_.c[i] * h * grad_[k];
      if (coef_.d[i] == 0.0) continue;
      frozen_.kick(q, grad_);
      for (std::size_t k = 0; k < p.size(); ++k) p[k] -= coef_.d[i] * h * grad_[k];
    }
  }

 private:
  const S* sys_;
  typename S::Frozen frozen_{};
  std::vector<double> grad_;
  Ruth4Coefficients coef_;
};

/// Tao's doubled variables; X and Y start as exact copies of Q and P.
struct ExtendedState {
  std::vector<double> q, p, x, y;

  ExtendedState() = default;
  ExtendedState(std::span<const double> q0, std::span<const double> p0)
      : q(q0.begin(), q0.end()), p(p0.begin(), p0.end()), x(q0.begin(), q0.end()), y(p0.begin(), p0.end()) {}
  explicit ExtendedState(const StateVector& s) : ExtendedState(s.q, s.p) {}

  /// |Q - X| + |P - Y|.
  double divergence() const {
    double a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      a += (q[i] - x[i]) * (q[i] - x[i]);
      b += (p[i] - y[i]) * (p[i] - y[i]);
    }
    return std::sqrt(a) + std::sqrt(b);
  }

  /// Q.X + P.Y; exactly invariant under every sub-flow when H is phase invariant.
  double overlap() const {
    double acc = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) acc += q[i] * x[i] + p[i] * y[i];
    return acc;
  }

  StateVector readout() const { return StateVector(q, p); }
};

/// Exact flow of H_C = omega (|Q - X|^2 + |P - Y|^2): the means are fixed and
/// the difference pair (Q - X, P - Y) rotates by 4 omega h.
inline void tao_coupling_flow(ExtendedState& e, double h, double omega) {
  const double theta = 4.0 * omega * h;
  const double c = std::cos(theta), s = std::sin(theta);
  for (std::size_t i = 0; i < e.q.size(); ++i) {
    const double mq = 0.5 * (e.q[i] + e.x[i]), mp = 0.5 * (e.p[i] + e.y[i]);
    const double a = 0.5 * (e.q[i] - e.x[i]), b = 0.5 * (e.p[i] - e.y[i]);
    const double a2 = c * a + s * b, b2 = -s * a + c * b;
    e.q[i] = mq + a2;
    e.x[i] = mq - a2;
    e.p[i] = mp + b2;
    e.y[i] = mp - b2;
  }
}

template <HamiltonianSystem S>
double extended_energy(const S& sys, const ExtendedState& e, double omega) {
  double c = 0.0;
  for (std::size_t i = 0; i < e.q.size(); ++i)
    c += (e.q[i] - e.x[i]) * (e.q[i] - e.x[i]) + (e.p[i] - e.y[i]) * (e.p[i] - e.y[i]);
  return sys.energy(e.q, e.y) + sys.energy(e.x, e.p) + omega * c;
}

template <HamiltonianSystem S>
class TaoStepper {
 public:
  TaoStepper(const S& sys, double omega) : sys_(&sys), omega_(omega), gq_(sys.dim()), gp_(sys.dim()) {
    require(omega > 0, ErrorKind::Config, "Tao binding omega must be positive");
  }

  double omega() const noexcept { return omega_; }

  /// H_A = H(Q, Y): Q and Y frozen, P and X move.
  void flow_a(ExtendedState& e, double h) {
    sys_->gradients(e.q, e.y, gq_, gp_);
    for (std::size_t i = 0; i < gq_.size(); ++i) {
      e.p[i] -= h * gq_[i];
      e.x[i] += h * gp_[i];
    }
  }

  /// H_B = H(X, P): X and P frozen, Q and Y move.
  void flow_b(ExtendedState& e, double h) {
    sys_->gradients(e.x, e.p, gq_, gp_);
    for (std::size_t i = 0; i < gq_.size(); ++i) {
      e.q[i] += h * gp_[i];
      e.y[i] -= h * gq_[i];
    }
  }

  void step(ExtendedState& e, double h) {
    flow_a(e, 0.5 * h);
    flow_b(e, 0.5 * h);
    tao_coupling_flow(e, h, omega_);
    flow_b(e, 0.5 * h);
    flow_a(e, 0.5 * h);
  }

 private:
  const S* sys_;
  double omega_;
  std::vector<double> gq_, gp_;
};

/// One fourth-order step of the frozen-force composition on the spin model.
inline StateVector ruth4_frozen_step(StateVector state, double h, const Model& model) {
  NlqmSystem sys(model);
  Ruth4Stepper<NlqmSystem> stepper(sys);
  stepper.step(state.q, state.p, h);
  return state;
}

inline ExtendedState tao_step(ExtendedState ext, double h, double omega, const Model& model) {
  NlqmSystem sys(model);
  TaoStepper<NlqmSystem> stepper(sys, omega);
  stepper.step(ext, h);
  return ext;
}

enum class Method { Ruth4Frozen, TaoExplicit };

inline const char* to_string(Method m) { return m == Method::Ruth4Frozen ? "ruth4" : "tao"; }

struct IntegratorConfig {
  Method method = Method::TaoExplicit;
  std::size_t steps = 10000;
  double t_final = 10.0;
  double omega = 1e4;
  /// Sampling stride in steps; 0 selects steps / 100.
  std::size_t stride = 0;

  void validate() const {
    require(steps >= 1, ErrorKind::Config, "steps must be at least 1");
    require(std::isfinite(t_final), ErrorKind::Config, "t_final must be finite");
    require(method != Method::TaoExplicit || omega > 0, ErrorKind::Config, "omega must be positive");
  }

  double step_size() const { return t_final / static_cast<double>(steps); }

  std::size_t effective_stride() const {
    if (stride > 0) return stride;
    return steps >= 100 ? steps / 100 : 1;
  }
};

struct Sample {
  double t = 0.0;
  StateVector state;
  double norm = 0.0;
  double energy = 0.0;
  double force = 0.0;
  /// Density per apparatus level; see Trajectory::spin_values.
  std::vector<double> density;
  /// Tao only: |Q - X| + |P - Y|, Q.X + P.Y and the extended energy.
  double divergence = 0.0;
  double overlap = 0.0;
  double extended_energy = 0.0;
};

struct Trajectory {
  std::vector<double> spin_values;
  std::vector<Sample> samples;

  const Sample& initial() const { return samples.front(); }
  const Sample& final() const { return samples.back(); }
};

namespace detail {

inline bool all_finite(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::isfinite(acc);
}

}  // namespace detail

/// Integrates from t = 0 to config.t_final, sampling every stride steps and at the end.
inline Trajectory evolve(const StateVector& initial, const IntegratorConfig& config, const Model& model) {
  config.validate();
  require(initial.dim() == model.dim(), ErrorKind::DimensionMismatch, "evolve");
  NlqmSystem sys(model);
  const double h = config.step_size();
  const std::size_t stride = config.effective_stride();
  Trajectory traj;
  traj.spin_values = model.basis().spin_values();

  auto record = [&](double t, const StateVector& s, const ExtendedState* ext) {
    Sample smp;
    smp.t = t;
    smp.state = s;
    smp.norm = norm_sq(s);
    smp.energy = sys.energy(s.q, s.p);
    smp.force = microsystem_force(s, model.basis(), model.params().alpha);
    smp.density = density_by_level(s, model.basis());
    if (ext != nullptr) {
      smp.divergence = ext->divergence();
      smp.overlap = ext->overlap();
      smp.extended_energy = extended_energy(sys, *ext, config.omega);
    } else {
      smp.overlap = smp.norm;
      smp.extended_energy = smp.energy;
    }
    traj.samples.push_back(std::move(smp));
  };

  if (config.method == Method::Ruth4Frozen) {
    StateVector s = initial;
    Ruth4Stepper<NlqmSystem> stepper(sys);
    record(0.0, s, nullptr);
    for (std::size_t k = 1; k <= config.steps; ++k) {
      stepper.step(s.q, s.p, h);
      if (!detail::all_finite(s.q) || !detail::all_finite(s.p)) throw BlowUpError(k, "non-finite state");
      if (k % stride == 0 || k == config.steps) record(static_cast<double>(k) * h, s, nullptr);
    }
  } else {
    ExtendedState e(initial);
    TaoStepper<NlqmSystem> stepper(sys, config.omega);
    record(0.0, e.readout(), &e);
    for (std::size_t k = 1; k <= config.steps; ++k) {
      stepper.step(e, h);
      if (!detail::all_finite(e.q) || !detail::all_finite(e.p)) throw BlowUpError(k, "non-finite state");
      if (k % stride == 0 || k == config.steps) record(static_cast<double>(k) * h, e.readout(), &e);
    }
  }
  return traj;
}

/// Least-squares slope of log(error) vs log(h): the observed global order.
inline double observed_order(std::span<const double> steps_sizes, std::span<const double> errors) {
  const std::size_t n = steps_sizes.size();
  require(n >= 2 && errors.size() == n, ErrorKind::Precondition, "observed_order needs >= 2 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::log(steps_sizes[i]), y = std::log(errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace nlqm
