#pragma once

// Measurement scenario: superposed initial state, the two randomization
// schemes, left/right registration and Monte Carlo aggregation.
//
// Sign convention (fixed by calibration against the asymmetric nonlinear run,
// whose needle moves left): beta1 weights the s1 = -J branch and beta2 the
// s1 = +J branch, so BP = beta2^2 is the probability of spin up.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "nlqm/dynamics.hpp"
#include "nlqm/error.hpp"
#include "nlqm/hilbert.hpp"
#include "nlqm/integrate.hpp"
#include "nlqm/linalg.hpp"

namespace nlqm {

/// mt19937_64 with explicit transforms, so draws do not depend on the
/// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// (x >> 11) * 2^-53, in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on the open interval (-1, 1).
  double symmetric() {
    for (;;) {
      const double u = uniform();
      if (u != 0.0) return 2.0 * u - 1.0;
    }
  }

  /// Box-Muller, cosine branch only: one engine pair per variate.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
};

enum class SchemeKind { ComponentUniform, ComponentNormal, Unitary };

inline const char* to_string(SchemeKind k) {
  switch (k) {
    case SchemeKind::ComponentUniform: return "unif";
    case SchemeKind::ComponentNormal: return "norm";
    case SchemeKind::Unitary: return "unitary";
  }
  return "?";
}

struct RandomizationScheme {
  SchemeKind kind = SchemeKind::ComponentUniform;
  double sigma = 0.1;
  double delta = 0.02;
  std::uint64_t seed = 1;
  /// Unitary only: fixed step count for the exp(i delta K_rand) solve; 0 picks
  /// one from a spectral-radius estimate.
  std::size_t unitary_steps = 0;

  void validate() const {
    require(sigma >= 0 && std::isfinite(sigma), ErrorKind::Config, "sigma must be non-negative");
    require(delta >= 0 && std::isfinite(delta), ErrorKind::Config, "delta must be non-negative");
    if (kind == SchemeKind::Unitary) require(delta <= 0.1, ErrorKind::Precondition, "unitary delta must be <= 0.1");
  }

  double magnitude() const { return kind == SchemeKind::Unitary ? delta : sigma; }
};

/// Unnormalized amplitude per index: beta(s1) on |S| <= center, else 0.
inline std::vector<double> initial_amplitudes(const ModelParams& params, const SpinBasis& basis) {
  std::vector<double> a(basis.dim(), 0.0);
  bool any = false;
  for (std::size_t i = 0; i < basis.dim(); ++i) {
    if (std::abs(basis.total_spin(i)) > params.center + 1e-9) continue;
    a[i] = basis.micro_spin(i) < 0 ? params.beta1 : params.beta2;
    any = any || a[i] != 0.0;
  }
  require(any, ErrorKind::DegenerateState, "initial state has empty support (center too small)");
  return a;
}

/// Normalization constant z of the initial superposition.
inline double initial_scale(const ModelParams& params, const SpinBasis& basis) {
  double n2 = 0.0;
  for (double v : initial_amplitudes(params, basis)) n2 += v * v;
  return 1.0 / std::sqrt(n2);
}

inline StateVector initial_state(const ModelParams& params, const SpinBasis& basis) {
  auto a = initial_amplitudes(params, basis);
  return normalize(StateVector(std::move(a), std::vector<double>(basis.dim(), 0.0)));
}

/// Q_i -> Q_i (1 + r_i) where Q_i != 0, Q_i -> z r_i where Q_i = 0, P_i -> z r'_i,
/// then renormalize. z is the initial normalization constant, so the additive
/// draws live in the same units as the unnormalized amplitudes. All N draws for
/// Q are taken before the N draws for P.
inline StateVector randomize_componentwise(const StateVector& state, const RandomizationScheme& scheme, double z,
                                           Rng& rng) {
  require(scheme.kind != SchemeKind::Unitary, ErrorKind::Precondition, "component-wise scheme expected");
  auto draw = [&] {
    return scheme.sigma * (scheme.kind == SchemeKind::ComponentUniform ? rng.symmetric() : rng.normal());
  };
  StateVector out(state.dim());
  for (std::size_t i = 0; i < state.dim(); ++i) {
    const double r = draw();
    out.q[i] = state.q[i] != 0.0 ? state.q[i] * (1.0 + r) : z * r;
  }
  for (std::size_t i = 0; i < state.dim(); ++i) out.p[i] = z * draw();
  return normalize(std::move(out));
}

/// Quadratic Hamiltonian 1/2 (Q.KQ + P.KP) for a dense symmetric K.
class DenseLinearSystem {
 public:
  explicit DenseLinearSystem(const DenseMatrix& k) : k_(&k), scratch_(k.rows()) {}

  std::size_t dim() const noexcept { return k_->rows(); }

  double energy(std::span<const double> q, std::span<const double> p) const {
    double e = 0.0;
    matvec(*k_, q, scratch_);
    for (std::size_t i = 0; i < q.size(); ++i) e += q[i] * scratch_[i];
    matvec(*k_, p, scratch_);
    for (std::size_t i = 0; i < p.size(); ++i) e += p[i] * scratch_[i];
    return 0.5 * e;
  }

  void gradients(std::span<const double> q, std::span<const double> p, std::span<double> gq,
                 std::span<double> gp) const {
    matvec(*k_, q, gq);
    matvec(*k_, p, gp);
  }

  struct Frozen {
    const DenseMatrix* k = nullptr;
    void drift(std::span<const double> p, std::span<double> out) const { matvec(*k, p, out); }
    void kick(std::span<const double> q, std::span<double> out) const { matvec(*k, q, out); }
  };

  void freeze(std::span<const double>, std::span<const double>, Frozen& into) const { into.k = k_; }

 private:
  const DenseMatrix* k_;
  mutable std::vector<double> scratch_;
};

/// Symmetric matrix of i.i.d. standard normals, upper triangle drawn row-major.
inline DenseMatrix random_symmetric(std::size_t n, Rng& rng) {
  DenseMatrix k(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double v = rng.normal();
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

/// Power-iteration estimate of the spectral radius of a symmetric matrix.
inline double spectral_radius_estimate(const DenseMatrix& k, int iterations = 60) {
  const std::size_t n = k.rows();
  std::vector<double> v(n), w(n);
  // Deterministic start with no special alignment.
  for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 0.5 * std::sin(static_cast<double>(i) + 1.0);
  double lambda = 0.0;
  for (int it = 0; it < iterations; ++it) {
    double nv = 0.0;
    for (double x : v) nv += x * x;
    nv = std::sqrt(nv);
    if (nv == 0.0) return 0.0;
    for (double& x : v) x /= nv;
    matvec(k, v, w);
    double nw = 0.0;
    for (double x : w) nw += x * x;
    lambda = std::sqrt(nw);
    std::swap(v, w);
  }
  return lambda;
}

/// Step count for the linear solve: keeps h * rho <= 0.005 with a 25% margin on rho.
inline std::size_t unitary_step_count(const DenseMatrix& k, double delta) {
  const double rho = 1.25 * spectral_radius_estimate(k);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(delta * rho / 0.005)));
}

/// psi -> exp(i delta K_rand) psi via the symplectic solver on the linear
/// system with K = -K_rand. K_rand is drawn fresh from rng. No renormalization.
inline StateVector randomize_unitary(const StateVector& state, const RandomizationScheme& scheme, Rng& rng) {
  require(scheme.kind == SchemeKind::Unitary, ErrorKind::Precondition, "unitary scheme expected");
  require(scheme.delta >= 0 && scheme.delta <= 0.1, ErrorKind::Precondition, "unitary delta must lie in [0, 0.1]");
  DenseMatrix k = random_symmetric(state.dim(), rng);
  if (scheme.delta == 0.0) return state;
  for (std::size_t i = 0; i < k.rows(); ++i)
    for (double& v : k.row(i)) v = -v;
  const std::size_t steps = scheme.unitary_steps > 0 ? scheme.unitary_steps : unitary_step_count(k, scheme.delta);
  const double h = scheme.delta / static_cast<double>(steps);
  DenseLinearSystem sys(k);
  Ruth4Stepper<DenseLinearSystem> stepper(sys);
  StateVector out = state;
  for (std::size_t s = 0; s < steps; ++s) stepper.step(out.q, out.p, h);
  return out;
}

enum class Outcome { LR, RR, ND, Error };

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::LR: return "LR";
    case Outcome::RR: return "RR";
    case Outcome::ND: return "ND";
    case Outcome::Error: return "error";
  }
  return "?";
}

struct Registration {
  Outcome outcome = Outcome::ND;
  double left = 0.0;   ///< density on S < 0
  double right = 0.0;  ///< density on S > 0
};

inline constexpr double kRegistrationRatio = 1.5;

inline Registration classify(const StateVector& state, const SpinBasis& basis) {
  require(state.dim() == basis.dim(), ErrorKind::DimensionMismatch, "classify");
  Registration r;
  for (std::size_t i = 0; i < state.dim(); ++i) {
    const double rho = state.q[i] * state.q[i] + state.p[i] * state.p[i];
    const double s = basis.total_spin(i);
    if (s < 0) r.left += rho;
    else if (s > 0) r.right += rho;
  }
  if (r.left > 0 && r.left >= kRegistrationRatio * r.right) r.outcome = Outcome::LR;
  else if (r.right > 0 && r.right >= kRegistrationRatio * r.left) r.outcome = Outcome::RR;
  else r.outcome = Outcome::ND;
  return r;
}

struct TrialRecord {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  Outcome outcome = Outcome::ND;
  double left_density = 0.0;
  double right_density = 0.0;
  double final_force = 0.0;
  double energy_drift = 0.0;  ///< relative: |E(T) - E(0)| / |E(0)|
  std::string error;
};

struct TableRow {
  std::size_t reps = 0;
  SchemeKind kind = SchemeKind::ComponentUniform;
  double magnitude = 0.0;  ///< sigma or delta
  std::size_t lrs = 0, rrs = 0, nds = 0, errors = 0;
  double bp = 0.0;

  /// RRs / (RRs + LRs); undefined without registrations.
  std::optional<double> sp() const {
    if (lrs + rrs == 0) return std::nullopt;
    return static_cast<double>(rrs) / static_cast<double>(lrs + rrs);
  }
};

/// Randomized initial state for trial `index` (seed = scheme.seed + index).
inline StateVector trial_initial_state(const Model& model, const RandomizationScheme& scheme, std::size_t index) {
  Rng rng(scheme.seed + index);
  const StateVector base = initial_state(model.params(), model.basis());
  if (scheme.kind == SchemeKind::Unitary) return randomize_unitary(base, scheme, rng);
  return randomize_componentwise(base, scheme, initial_scale(model.params(), model.basis()), rng);
}

inline TrialRecord run_trial(const Model& model, const RandomizationScheme& scheme, const IntegratorConfig& integ,
                             std::size_t index) {
  TrialRecord rec;
  rec.index = index;
  rec.seed = scheme.seed + index;
  try {
    const StateVector init = trial_initial_state(model, scheme, index);
    IntegratorConfig cfg = integ;
    cfg.stride = cfg.steps;  // endpoints only
    const Trajectory traj = evolve(init, cfg, model);
    const Sample& last = traj.final();
    const auto reg = classify(last.state, model.basis());
    rec.outcome = reg.outcome;
    rec.left_density = reg.left;
    rec.right_density = reg.right;
    rec.final_force = last.force;
    const double e0 = traj.initial().energy;
    rec.energy_drift = std::abs(last.energy - e0) / std::max(std::abs(e0), std::numeric_limits<double>::min());
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::BlowUp) throw;
    rec.outcome = Outcome::Error;
    rec.error = e.what();
  }
  return rec;
}

struct MonteCarloResult {
  TableRow row;
  /// Completed trials in index order; shorter than reps after a cancel.
  std::vector<TrialRecord> trials;
  bool cancelled = false;
};

inline TableRow aggregate(std::span<const TrialRecord> trials, const ModelParams& params,
                          const RandomizationScheme& scheme) {
  TableRow row;
  row.reps = trials.size();
  row.kind = scheme.kind;
  row.magnitude = scheme.magnitude();
  row.bp = params.born_probability();
  for (const auto& t : trials) {
    switch (t.outcome) {
      case Outcome::LR: ++row.lrs; break;
      case Outcome::RR: ++row.rrs; break;
      case Outcome::ND: ++row.nds; break;
      case Outcome::Error: ++row.errors; break;
    }
  }
  return row;
}

/// Runs trials 0..reps-1 on `jobs` workers. Results depend only on the inputs,
/// not on jobs or scheduling. Setting *cancel stops new trials from starting;
/// the result then holds the completed prefix of trial indices.
inline MonteCarloResult monte_carlo(const ModelParams& params, const RandomizationScheme& scheme, std::size_t reps,
                                    const IntegratorConfig& integ, unsigned jobs = 1,
                                    const std::atomic<bool>* cancel = nullptr) {
  require(reps >= 1, ErrorKind::Config, "reps must be at least 1");
  params.validate();
  scheme.validate();
  integ.validate();
  const Model model(params);
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(reps)));

  std::vector<std::optional<TrialRecord>> slots(reps);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};

  auto worker = [&] {
    for (;;) {
      if (failed.load() || (cancel != nullptr && cancel->load())) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= reps) return;
      try {
        slots[i] = run_trial(model, scheme, integ, i);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
        return;
      }
    }
  };

  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  MonteCarloResult out;
  for (auto& s : slots) {
    if (!s) {
      out.cancelled = true;
      break;
    }
    out.trials.push_back(std::move(*s));
  }
  out.row = aggregate(out.trials, params, scheme);
  return out;
}

}  // namespace nlqm
