#pragma once

// Linear-plus-variance Hamiltonian on the spin register and the real
// dynamical system it generates:
//
//   H(Q, P) = 1/2 (Q.KQ + P.KP) + w/2 (<S^2> - <S>^2)
//   dQ/dt =  KP + f P,   dP/dt = -KQ - f Q,
//   f_i   =  w S_i (S_i - 2 <S>),   <S> = sum_k S_k (Q_k^2 + P_k^2).

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "nlqm/error.hpp"
#include "nlqm/hilbert.hpp"
#include "nlqm/linalg.hpp"

namespace nlqm {

/// How the finite-difference Laplacian treats a spin shifted outside [-J, J].
/// Reflecting: the out-of-range neighbour equals the centre value, giving
/// Delta psi(i) = sum_k [psi(flip_k i) - psi(i)]. Dirichlet: the neighbour is
/// zero, giving sum_k [psi(flip_k i) - 2 psi(i)]. The two differ by the
/// constant q/m on the diagonal of K.
enum class Boundary { Reflecting, Dirichlet };

inline const char* to_string(Boundary b) { return b == Boundary::Reflecting ? "reflecting" : "dirichlet"; }

struct ModelParams {
  int q = 9;
  double height = 10.0;
  double center = 3.0;
  double w = 0.0;
  double beta1 = 1.0 / std::sqrt(2.0);
  double beta2 = 1.0 / std::sqrt(2.0);
  double inv_mass = 0.1;
  double alpha = 1.0;
  Boundary boundary = Boundary::Reflecting;

  /// Sets beta1/beta2 = ratio with beta1^2 + beta2^2 = 1.
  ModelParams& set_beta_ratio(double ratio) {
    require(ratio > 0 && std::isfinite(ratio), ErrorKind::Config, "beta ratio must be positive");
    beta2 = 1.0 / std::sqrt(1.0 + ratio * ratio);
    beta1 = ratio * beta2;
    return *this;
  }

  /// Sets beta2^2 = bp (the Born probability of the spin-up branch).
  ModelParams& set_born_probability(double bp) {
    require(bp >= 0 && bp <= 1, ErrorKind::Config, "born probability must lie in [0, 1]");
    beta2 = std::sqrt(bp);
    beta1 = std::sqrt(1.0 - bp);
    return *this;
  }

  double born_probability() const { return beta2 * beta2; }

  void validate() const {
    require(q >= 1 && q <= kMaxQubits, ErrorKind::DimensionLimit, "q = " + std::to_string(q));
    require(std::abs(beta1 * beta1 + beta2 * beta2 - 1.0) <= 1e-12, ErrorKind::Config,
            "beta1^2 + beta2^2 must equal 1");
    require(height >= 0, ErrorKind::Config, "height must be non-negative");
    require(inv_mass > 0, ErrorKind::Config, "inverse mass must be positive");
    require(w >= 0, ErrorKind::Config, "w must be non-negative");
    require(center >= 0, ErrorKind::Config, "center must be non-negative");
  }

  /// The scenario defaults: q=9, Height=10, Center=3, 1/m=0.1, alpha=1.
  static ModelParams scenario() { return {}; }
};

/// Two-well quartic V(x) = Height/R^4 (x-R)^2 (x+R)^2, R = J(q-1).
inline double potential(double x, const ModelParams& params) {
  const double r = kSpin * (params.q - 1);
  require(r > 0, ErrorKind::DegenerateModel, "potential needs q >= 2 (R = 0)");
  const double a = (x - r) * (x + r);
  return params.height / (r * r * r * r) * a * a;
}

/// K = -(1/m) Delta + V(S) + alpha s1 S, applied matrix-free in O(N q).
class LinearOperator {
 public:
  LinearOperator(const SpinBasis& basis, const ModelParams& params)
      : qubits_(basis.qubits()), hopping_(params.inv_mass), diagonal_(basis.dim()) {
    const double stencil = params.boundary == Boundary::Reflecting ? 1.0 : 2.0;
    const bool has_potential = basis.qubits() >= 2;
    for (std::size_t i = 0; i < basis.dim(); ++i) {
      const double s = basis.total_spin(i);
      const double v = has_potential ? potential(s, params) : 0.0;
      diagonal_[i] = stencil * hopping_ * qubits_ + v + params.alpha * basis.micro_spin(i) * s;
    }
  }

  std::size_t dim() const noexcept { return diagonal_.size(); }
  int qubits() const noexcept { return qubits_; }
  double hopping() const noexcept { return hopping_; }
  std::span<const double> diagonal() const noexcept { return diagonal_; }

  void apply(std::span<const double> v, std::span<double> out) const {
    require(v.size() == dim() && out.size() == dim(), ErrorKind::DimensionMismatch, "apply_linear");
    const std::size_t n = dim();
    for (std::size_t i = 0; i < n; ++i) {
      double flips = 0.0;
      for (int k = 0; k < qubits_; ++k) flips += v[i ^ (std::size_t{1} << k)];
      out[i] = diagonal_[i] * v[i] - hopping_ * flips;
    }
  }

  std::vector<double> apply(std::span<const double> v) const {
    std::vector<double> out(v.size());
    apply(v, out);
    return out;
  }

  DenseMatrix materialize() const {
    const std::size_t n = dim();
    DenseMatrix k(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      k(i, i) = diagonal_[i];
      for (int b = 0; b < qubits_; ++b) k(i, i ^ (std::size_t{1} << b)) = -hopping_;
    }
    return k;
  }

 private:
  int qubits_;
  double hopping_;
  std::vector<double> diagonal_;
};

inline std::vector<double> apply_linear(const LinearOperator& op, std::span<const double> v) {
  return op.apply(v);
}

/// Parameters plus the derived basis and linear operator.
class Model {
 public:
  explicit Model(const ModelParams& params)
      : params_((params.validate(), params)), basis_(params.q), op_(basis_, params_) {}

  const ModelParams& params() const noexcept { return params_; }
  const SpinBasis& basis() const noexcept { return basis_; }
  const LinearOperator& op() const noexcept { return op_; }
  double w() const noexcept { return params_.w; }
  std::size_t dim() const noexcept { return basis_.dim(); }

 private:
  ModelParams params_;
  SpinBasis basis_;
  LinearOperator op_;
};

namespace detail {

inline double spin_mean(std::span<const double> s, std::span<const double> q, std::span<const double> p) {
  double acc = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) acc += s[i] * (q[i] * q[i] + p[i] * p[i]);
  return acc;
}

inline void force_into(std::span<const double> s, std::span<const double> q, std::span<const double> p,
                       double w, std::span<double> f) {
  const double mean = spin_mean(s, q, p);
  for (std::size_t i = 0; i < s.size(); ++i) f[i] = w * s[i] * (s[i] - 2.0 * mean);
}

}  // namespace detail

inline std::vector<double> nonlinear_force(const StateVector& state, const SpinBasis& basis, double w) {
  require(state.dim() == basis.dim(), ErrorKind::DimensionMismatch, "nonlinear_force");
  std::vector<double> f(state.dim());
  detail::force_into(basis.total_spins(), state.q, state.p, w, f);
  return f;
}

/// (dQ/dt, dP/dt) packed as a StateVector.
inline StateVector time_derivative(const StateVector& state, const Model& model) {
  require(state.dim() == model.dim(), ErrorKind::DimensionMismatch, "time_derivative");
  const auto f = nonlinear_force(state, model.basis(), model.w());
  StateVector d(state.dim());
  model.op().apply(state.p, d.q);
  model.op().apply(state.q, d.p);
  for (std::size_t i = 0; i < state.dim(); ++i) {
    d.q[i] += f[i] * state.p[i];
    d.p[i] = -d.p[i] - f[i] * state.q[i];
  }
  return d;
}

namespace detail {

inline double energy(const LinearOperator& op, std::span<const double> s, double w, std::span<const double> q,
                     std::span<const double> p, std::span<double> scratch) {
  double quad = 0.0;
  op.apply(q, scratch);
  for (std::size_t i = 0; i < q.size(); ++i) quad += q[i] * scratch[i];
  op.apply(p, scratch);
  for (std::size_t i = 0; i < p.size(); ++i) quad += p[i] * scratch[i];
  double m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double rho = q[i] * q[i] + p[i] * p[i];
    m1 += s[i] * rho;
    m2 += s[i] * s[i] * rho;
  }
  return 0.5 * quad + 0.5 * w * (m2 - m1 * m1);
}

}  // namespace detail

inline double total_energy(const StateVector& state, const Model& model) {
  require(state.dim() == model.dim(), ErrorKind::DimensionMismatch, "total_energy");
  std::vector<double> scratch(state.dim());
  return detail::energy(model.op(), model.basis().total_spins(), model.w(), state.q, state.p, scratch);
}

/// F = alpha <psi| s1 |psi>.
inline double microsystem_force(const StateVector& state, const SpinBasis& basis, double alpha) {
  require(state.dim() == basis.dim(), ErrorKind::DimensionMismatch, "microsystem_force");
  return alpha * detail::spin_mean(basis.micro_spins(), state.q, state.p);
}

/// Adapter exposing the model to the generic symplectic steppers.
class NlqmSystem {
 public:
  explicit NlqmSystem(const Model& model) : model_(&model), scratch_(model.dim()), force_(model.dim()) {}

  std::size_t dim() const noexcept { return model_->dim(); }
  const Model& model() const noexcept { return *model_; }

  double energy(std::span<const double> q, std::span<const double> p) const {
    return detail::energy(model_->op(), model_->basis().total_spins(), model_->w(), q, p, scratch_);
  }

  /// gq = dH/dQ = KQ + fQ, gp = dH/dP = KP + fP.
  void gradients(std::span<const double> q, std::span<const double> p, std::span<double> gq,
                 std::span<double> gp) const {
    detail::force_into(model_->basis().total_spins(), q, p, model_->w(), force_);
    model_->op().apply(q, gq);
    model_->op().apply(p, gp);
    for (std::size_t i = 0; i < q.size(); ++i) {
      gq[i] += force_[i] * q[i];
      gp[i] += force_[i] * p[i];
    }
  }

  /// The separable quadratic Hamiltonian 1/2 (Q.(K+F)Q + P.(K+F)P) with F = diag(f) held fixed.
  struct Frozen {
    const LinearOperator* op = nullptr;
    std::vector<double> f;

    void drift(std::span<const double> p, std::span<double> out) const {
      op->apply(p, out);
      for (std::size_t i = 0; i < p.size(); ++i) out[i] += f[i] * p[i];
    }
    void kick(std::span<const double> q, std::span<double> out) const {
      op->apply(q, out);
      for (std::size_t i = 0; i < q.size(); ++i) out[i] += f[i] * q[i];
    }
  };

  void freeze(std::span<const double> q, std::span<const double> p, Frozen& into) const {
    into.op = &model_->op();
    into.f.resize(dim());
    detail::force_into(model_->basis().total_spins(), q, p, model_->w(), into.f);
  }

 private:
  const Model* model_;
  mutable std::vector<double> scratch_;
  mutable std::vector<double> force_;
};

}  // namespace nlqm
