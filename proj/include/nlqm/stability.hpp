#pragma once

// Jacobian dynamical system (JDS) of the spin model and its determinant.
//
// At a state (Q, P) the linearization d(xi, eta)/dt = M (xi, eta) has blocks
//   A_ij = -4w S_i S_j P_i Q_j
//   B_ij =  K_ij + f_i d_ij - 4w S_i S_j P_i P_j
//   C_ij = -K_ij - f_i d_ij + 4w S_i S_j Q_i Q_j
//   D_ij =  4w S_i S_j Q_i P_j   (= -A_ji)
// A real even-dimensional M with det M < 0 has a positive and a negative real
// root of p(lambda) = det(M - lambda I).

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "nlqm/dynamics.hpp"
#include "nlqm/error.hpp"
#include "nlqm/hilbert.hpp"
#include "nlqm/linalg.hpp"

namespace nlqm {

struct JacobianMatrix {
  DenseMatrix a, b, c, d;

  std::size_t half_dim() const noexcept { return a.rows(); }
  std::size_t dim() const noexcept { return 2 * a.rows(); }

  DenseMatrix assembled() const {
    const std::size_t n = half_dim();
    DenseMatrix m(2 * n, 2 * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        m(i, j) = a(i, j);
        m(i, n + j) = b(i, j);
        m(n + i, j) = c(i, j);
        m(n + i, n + j) = d(i, j);
      }
    return m;
  }
};

/// Blocks from an explicit K, force vector f and diagonal spin operator s.
inline JacobianMatrix assemble_jacobian(const DenseMatrix& k, std::span<const double> f, std::span<const double> s,
                                        double w, std::span<const double> q, std::span<const double> p) {
  const std::size_t n = k.rows();
  require(k.cols() == n && f.size() == n && s.size() == n && q.size() == n && p.size() == n,
          ErrorKind::DimensionMismatch, "assemble_jacobian");
  JacobianMatrix m{DenseMatrix(n, n), DenseMatrix(n, n), DenseMatrix(n, n), DenseMatrix(n, n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double ss = 4.0 * w * s[i] * s[j];
      m.a(i, j) = -ss * p[i] * q[j];
      m.b(i, j) = k(i, j) - ss * p[i] * p[j];
      m.c(i, j) = -k(i, j) + ss * q[i] * q[j];
      m.d(i, j) = ss * q[i] * p[j];
    }
    m.b(i, i) += f[i];
    m.c(i, i) -= f[i];
  }
  return m;
}

inline JacobianMatrix build_jacobian(const StateVector& state, const Model& model) {
  require(state.dim() == model.dim(), ErrorKind::DimensionMismatch, "build_jacobian");
  const auto f = nonlinear_force(state, model.basis(), model.w());
  return assemble_jacobian(model.op().materialize(), f, model.basis().total_spins(), model.w(), state.q, state.p);
}

struct ConditionedDeterminant {
  LogDeterminant det;     ///< of M itself
  LogDeterminant scaled;  ///< of scale * M, as the LU actually saw it
  double scale = 1.0;
  std::size_t dim = 0;

  bool singular() const noexcept { return det.singular; }
  int sign() const noexcept { return det.sign; }
  double log10_abs() const { return det.log_abs / std::log(10.0); }
  double value() const { return det.value(); }
  double scaled_value() const { return scaled.value(); }
};

/// det M = scale^{-dim} det(scale M), with the LU run on scale * M.
inline ConditionedDeterminant det_conditioned(const DenseMatrix& m, double scale) {
  require(scale > 0 && std::isfinite(scale), ErrorKind::Precondition, "conditioning scale must be positive");
  DenseMatrix scaled = m;
  scaled *= scale;
  ConditionedDeterminant out;
  out.scale = scale;
  out.dim = m.rows();
  out.scaled = log_determinant(std::move(scaled));
  out.det = out.scaled;
  if (!out.det.singular) out.det.log_abs -= static_cast<double>(out.dim) * std::log(scale);
  return out;
}

inline ConditionedDeterminant det_conditioned(const JacobianMatrix& m, double scale) {
  return det_conditioned(m.assembled(), scale);
}

/// Closed form for N = 2, L = 0, P = 0, Q2 = 0, K = diag(k1, k2).
struct TwoSpinCase {
  double k1, k2, f1, f2, w, s1, q1;
};

inline double two_spin_det(const TwoSpinCase& c) {
  const double g1 = c.f1 + c.k1, g2 = c.f2 + c.k2;
  return g2 * g2 * g1 * (g1 - 4.0 * c.w * c.s1 * c.s1 * c.q1 * c.q1);
}

/// The same special case through the generic assembly; s2 is irrelevant since Q2 = P = 0.
inline JacobianMatrix two_spin_jacobian(const TwoSpinCase& c, double s2 = 0.5) {
  DenseMatrix k(2, 2);
  k(0, 0) = c.k1;
  k(1, 1) = c.k2;
  const double f[2] = {c.f1, c.f2};
  const double s[2] = {c.s1, s2};
  const double q[2] = {c.q1, 0.0};
  const double p[2] = {0.0, 0.0};
  return assemble_jacobian(k, f, s, c.w, q, p);
}

/// Pre-scaling applied before LU for large q (1/5 at q = 7, 1/10 at q = 9).
inline double default_conditioning_scale(int q) {
  if (q >= 9) return 0.1;
  if (q >= 7) return 0.2;
  return 1.0;
}

struct ScanOptions {
  double w_start = 0.05;
  double w_step = 0.1;
  double w_max = 4.0;
  double cut = -0.01;
  /// 0 selects default_conditioning_scale(q).
  double scale = 0.0;
};

struct ScanPoint {
  double w = 0.0;
  int sign = 0;
  bool singular = false;
  double log10_abs = 0.0;
  double scaled_log10_abs = 0.0;
};

/// Three readings of "the determinant turned negative": sign alone, the cut
/// applied to det M, and the cut applied to det(scale M).
struct ScanResult {
  std::optional<double> sign_threshold;
  std::optional<double> unscaled_cut_threshold;
  std::optional<double> scaled_cut_threshold;
  double scale = 1.0;
  std::vector<ScanPoint> points;

  std::optional<double> threshold() const { return sign_threshold; }
};

/// Scans w on the grid w_start + k w_step at a fixed state and reports the first
/// negative determinant under each reading. Stops once every reading has fired.
inline ScanResult threshold_scan(ModelParams params, const StateVector& state, const ScanOptions& opt = {}) {
  require(opt.w_step > 0, ErrorKind::Precondition, "w_step must be positive");
  ScanResult out;
  out.scale = opt.scale > 0 ? opt.scale : default_conditioning_scale(params.q);
  const double log_cut = std::log(-opt.cut);
  for (int k = 0;; ++k) {
    const double w = opt.w_start + k * opt.w_step;
    if (w > opt.w_max + 1e-12) break;
    params.w = w;
    const Model model(params);
    const auto det = det_conditioned(build_jacobian(state, model), out.scale);
    ScanPoint pt{w, det.sign(), det.singular(), det.log10_abs(), det.scaled.log_abs / std::log(10.0)};
    out.points.push_back(pt);
    const bool negative = !det.singular() && det.sign() < 0;
    if (negative && !out.sign_threshold) out.sign_threshold = w;
    if (negative && det.det.log_abs > log_cut && !out.unscaled_cut_threshold) out.unscaled_cut_threshold = w;
    if (negative && det.scaled.log_abs > log_cut && !out.scaled_cut_threshold) out.scaled_cut_threshold = w;
    if (out.sign_threshold && out.unscaled_cut_threshold && out.scaled_cut_threshold) break;
  }
  return out;
}

/// p(lambda) = det(M - lambda I); small dimensions only.
inline double characteristic_polynomial(const DenseMatrix& m, double lambda) {
  DenseMatrix shifted = m;
  for (std::size_t i = 0; i < m.rows(); ++i) shifted(i, i) -= lambda;
  return log_determinant(std::move(shifted)).value();
}

inline constexpr std::size_t kMaxWitnessDim = 16;

/// Geometric grid over +-[1e-6, 1e6].
inline std::vector<double> witness_grid(double points_per_decade = 20) {
  std::vector<double> grid;
  const int n = static_cast<int>(12 * points_per_decade);
  for (int i = 0; i <= n; ++i) grid.push_back(std::pow(10.0, -6.0 + 12.0 * i / n));
  return grid;
}

struct RealRootWitness {
  bool found = false;
  double negative_root = 0.0;
  double positive_root = 0.0;
};

/// For det M < 0, brackets a sign change of p on each half-line and bisects it.
inline RealRootWitness real_eigenvalue_witness(const DenseMatrix& m) {
  require(m.rows() == m.cols() && m.rows() % 2 == 0, ErrorKind::Precondition, "needs an even-dimensional square matrix");
  require(m.rows() <= kMaxWitnessDim, ErrorKind::Unsupported, "characteristic polynomial search limited to dim <= 16");
  const double p0 = characteristic_polynomial(m, 0.0);
  require(p0 < 0, ErrorKind::Precondition, "real_eigenvalue_witness needs det M < 0");

  auto bracket = [&](double direction) -> std::optional<double> {
    double inner = 0.0;
    for (double mag : witness_grid()) {
      const double lam = direction * mag;
      if (characteristic_polynomial(m, lam) > 0) {
        double lo = inner, hi = lam;
        for (int it = 0; it < 200; ++it) {
          const double mid = 0.5 * (lo + hi);
          if (mid == lo || mid == hi) break;
          (characteristic_polynomial(m, mid) > 0 ? hi : lo) = mid;
        }
        return 0.5 * (lo + hi);
      }
      inner = lam;
    }
    return std::nullopt;
  };

  RealRootWitness out;
  const auto pos = bracket(1.0);
  const auto neg = bracket(-1.0);
  out.found = pos.has_value() && neg.has_value();
  if (pos) out.positive_root = *pos;
  if (neg) out.negative_root = *neg;
  return out;
}

inline RealRootWitness real_eigenvalue_witness(const JacobianMatrix& m) {
  return real_eigenvalue_witness(m.assembled());
}

/// Brute-force real-root search: sign changes of p on a uniform grid over the
/// Gershgorin interval (which contains every real root), plus min p on the grid.
struct RootScan {
  int sign_changes = 0;
  double min_value = 0.0;
  double bound = 0.0;
};

inline RootScan scan_real_roots(const DenseMatrix& m, int points = 4001) {
  require(m.rows() <= kMaxWitnessDim, ErrorKind::Unsupported, "characteristic polynomial search limited to dim <= 16");
  double bound = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double row = 0.0;
    for (double v : m.row(i)) row += std::abs(v);
    bound = std::max(bound, row);
  }
  RootScan out;
  out.bound = bound;
  double prev = characteristic_polynomial(m, -bound);
  out.min_value = prev;
  for (int i = 1; i < points; ++i) {
    const double lam = -bound + 2.0 * bound * i / (points - 1);
    const double v = characteristic_polynomial(m, lam);
    if ((v > 0) != (prev > 0) || v == 0.0) ++out.sign_changes;
    out.min_value = std::min(out.min_value, v);
    prev = v;
  }
  return out;
}

}  // namespace nlqm
