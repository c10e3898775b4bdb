#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "nlqm/dynamics.hpp"
#include "nlqm/integrate.hpp"
#include "nlqm/measure.hpp"

using namespace nlqm;

namespace {

StateVector random_normalized(std::size_t n, std::mt19937_64& gen) {
  std::normal_distribution<double> nd;
  StateVector s(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.q[i] = nd(gen);
    s.p[i] = nd(gen);
  }
  return normalize(s);
}

ModelParams free_params(int q) {
  ModelParams p;
  p.q = q;
  p.height = 0.0;
  p.alpha = 0.0;
  return p;
}

Eigen::MatrixXd to_eigen(const DenseMatrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
  return e;
}

// Literal finite-difference Laplacian on each spin coordinate: shift by +-1,
// reflecting out-of-range neighbours back onto the centre point.
std::vector<double> literal_laplacian(const SpinBasis& b, std::span<const double> psi) {
  std::vector<double> out(b.dim(), 0.0);
  for (std::size_t i = 0; i < b.dim(); ++i) {
    for (int k = 0; k < b.qubits(); ++k) {
      const double s = SpinBasis::spin(i, k);
      const std::size_t flipped = i ^ (std::size_t{1} << k);
      const double up = s + 1.0 > kSpin ? psi[i] : psi[flipped];
      const double down = s - 1.0 < -kSpin ? psi[i] : psi[flipped];
      out[i] += up - 2.0 * psi[i] + down;
    }
  }
  return out;
}

}  // namespace

TEST(Potential, Examples) {
  ModelParams p;
  EXPECT_DOUBLE_EQ(potential(0.0, p), 10.0);
  EXPECT_EQ(potential(4.0, p), 0.0);
  EXPECT_EQ(potential(-4.0, p), 0.0);
  EXPECT_DOUBLE_EQ(potential(2.0, p), 5.625);
  p.q = 1;
  EXPECT_THROW(potential(0.0, p), Error);
}

TEST(Potential, Even) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-10, 10);
  const ModelParams p;
  for (int t = 0; t < 100; ++t) {
    const double x = u(gen);
    EXPECT_EQ(potential(x, p), potential(-x, p));
  }
}

TEST(LinearOperator, AnnihilatesConstants) {
  const auto p = free_params(5);
  const Model m(p);
  const auto out = apply_linear(m.op(), std::vector<double>(m.dim(), 1.0));
  for (double v : out) EXPECT_NEAR(v, 0.0, 1e-15);
}

TEST(LinearOperator, BasisStateStencil) {
  const auto p = free_params(2);
  const Model m(p);
  std::vector<double> e0(4, 0.0);
  e0[0] = 1.0;
  const auto out = apply_linear(m.op(), e0);
  EXPECT_NEAR(out[0], 0.2, 1e-15);
  EXPECT_NEAR(out[1], -0.1, 1e-15);
  EXPECT_NEAR(out[2], -0.1, 1e-15);
  EXPECT_EQ(out[3], 0.0);
}

TEST(LinearOperator, MatchesLiteralReflection) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> nd;
  for (int q = 1; q <= 3; ++q) {
    const Model m(free_params(q));
    const auto b = build_basis(q);
    std::vector<double> v(b.dim());
    for (double& x : v) x = nd(gen);
    const auto lap = literal_laplacian(b, v);
    const auto kv = apply_linear(m.op(), v);
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(kv[i], -0.1 * lap[i], 1e-14);
  }
}

TEST(LinearOperator, MaterializedSymmetricSingleFlip) {
  ModelParams p;
  p.q = 5;
  const Model m(p);
  const auto k = m.op().materialize();
  for (std::size_t i = 0; i < k.rows(); ++i) {
    for (std::size_t j = 0; j < k.cols(); ++j) {
      EXPECT_EQ(k(i, j), k(j, i));
      if (i == j) continue;
      if (std::popcount(i ^ j) == 1) EXPECT_EQ(k(i, j), -0.1);
      else EXPECT_EQ(k(i, j), 0.0);
    }
  }
  // Diagonal: Laplacian local term + V(S) + alpha s1 S.
  const auto& b = m.basis();
  for (std::size_t i = 0; i < k.rows(); ++i) {
    const double expected = 0.1 * 5 + potential(b.total_spin(i), p) + b.micro_spin(i) * b.total_spin(i);
    EXPECT_NEAR(k(i, i), expected, 1e-13);
  }
}

TEST(LinearOperator, DirichletShiftsDiagonal) {
  ModelParams p;
  p.q = 5;
  const auto kr = Model(p).op().materialize();
  p.boundary = Boundary::Dirichlet;
  const auto kd = Model(p).op().materialize();
  for (std::size_t i = 0; i < kr.rows(); ++i)
    for (std::size_t j = 0; j < kr.cols(); ++j) EXPECT_NEAR(kd(i, j) - kr(i, j), i == j ? 0.5 : 0.0, 1e-13);
}

TEST(LinearOperator, LengthMismatch) {
  const Model m(free_params(3));
  EXPECT_THROW(apply_linear(m.op(), std::vector<double>(5)), Error);
}

TEST(Force, Examples) {
  const auto b = build_basis(3);
  std::mt19937_64 gen(1);
  const auto s = random_normalized(b.dim(), gen);
  for (double f : nonlinear_force(s, b, 0.0)) EXPECT_EQ(f, 0.0);

  StateVector zero_spin(b.dim());
  zero_spin.q[2] = std::sqrt(0.5);  // S = 0
  zero_spin.p[5] = std::sqrt(0.5);  // S = 0
  // <S> = 0, so f = w S^2: zero wherever the mass sits, hence f psi = 0.
  const auto f0 = nonlinear_force(zero_spin, b, 3.7);
  for (std::size_t i = 0; i < b.dim(); ++i) {
    EXPECT_NEAR(f0[i], 3.7 * b.total_spin(i) * b.total_spin(i), 1e-15);
    EXPECT_EQ(f0[i] * zero_spin.q[i], 0.0);
    EXPECT_EQ(f0[i] * zero_spin.p[i], 0.0);
  }

  StateVector split(b.dim());
  split.q[6] = std::sqrt(0.5);  // S = +1
  split.q[0] = std::sqrt(0.5);  // S = -1
  const auto f = nonlinear_force(split, b, 2.0);
  for (std::size_t i = 0; i < b.dim(); ++i) {
    const double s2 = b.total_spin(i) * b.total_spin(i);
    EXPECT_NEAR(f[i], 2.0 * s2, 1e-14);
  }
}

TEST(TimeDerivative, EigenvectorOnset) {
  ModelParams p;
  p.q = 4;
  const Model m(p);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(m.op().materialize()));
  const int col = 3;
  StateVector s(m.dim());
  for (std::size_t i = 0; i < m.dim(); ++i) s.q[i] = es.eigenvectors()(i, col);
  const double lambda = es.eigenvalues()(col);
  const auto d = time_derivative(s, m);
  for (std::size_t i = 0; i < m.dim(); ++i) {
    EXPECT_NEAR(d.q[i], 0.0, 1e-14);
    EXPECT_NEAR(d.p[i], -lambda * s.q[i], 1e-12);
  }
  EXPECT_NEAR(total_energy(s, m), lambda / 2, 1e-12);
}

TEST(TimeDerivative, NormPreservingField) {
  std::mt19937_64 gen(9);
  for (int t = 0; t < 50; ++t) {
    ModelParams p;
    p.q = 1 + t % 6;
    p.w = 0.5 * (t % 5);
    const Model m(p);
    const auto s = random_normalized(m.dim(), gen);
    const auto d = time_derivative(s, m);
    double dot = 0.0;
    for (std::size_t i = 0; i < m.dim(); ++i) dot += s.q[i] * d.q[i] + s.p[i] * d.p[i];
    EXPECT_NEAR(dot, 0.0, 1e-12);
  }
}

TEST(TimeDerivative, HamiltonGradientsByFiniteDifference) {
  std::mt19937_64 gen(21);
  for (int t = 0; t < 20; ++t) {
    ModelParams p;
    p.q = 2 + t % 4;
    p.w = 2.2;
    const Model m(p);
    const auto s = random_normalized(m.dim(), gen);
    const auto d = time_derivative(s, m);
    const double eps = 1e-6;
    double err = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < m.dim(); ++i) {
      auto qp = s, qm = s, pp = s, pm = s;
      qp.q[i] += eps;
      qm.q[i] -= eps;
      pp.p[i] += eps;
      pm.p[i] -= eps;
      const double de_dq = (total_energy(qp, m) - total_energy(qm, m)) / (2 * eps);
      const double de_dp = (total_energy(pp, m) - total_energy(pm, m)) / (2 * eps);
      err = std::max({err, std::abs(d.q[i] - de_dp), std::abs(d.p[i] + de_dq)});
      scale = std::max({scale, std::abs(d.q[i]), std::abs(d.p[i])});
    }
    EXPECT_LE(err / scale, 1e-5);
  }
}

TEST(TimeDerivative, MatchesReferenceEvolution) {
  ModelParams p;
  p.q = 5;
  p.w = 2.2;
  const Model m(p);
  const auto s = initial_state(p, m.basis());
  const auto d = time_derivative(s, m);
  const double dt = 1e-4;
  IntegratorConfig fwd;
  fwd.method = Method::Ruth4Frozen;
  fwd.steps = 100;
  fwd.t_final = dt;
  auto bwd = fwd;
  bwd.t_final = -dt;
  const auto sp = evolve(s, fwd, m).final().state;
  const auto sm = evolve(s, bwd, m).final().state;
  for (std::size_t i = 0; i < m.dim(); ++i) {
    EXPECT_NEAR((sp.q[i] - sm.q[i]) / (2 * dt), d.q[i], 1e-6);
    EXPECT_NEAR((sp.p[i] - sm.p[i]) / (2 * dt), d.p[i], 1e-6);
  }
}

TEST(Energy, ZeroSpinSupportHasNoVariance) {
  ModelParams p;
  p.q = 5;
  const auto b = build_basis(5);
  StateVector s(b.dim());
  double n = 0;
  for (std::size_t i = 0; i < b.dim(); ++i)
    if (b.total_spin(i) == 0) s.q[i] = 1.0, n += 1;
  s = normalize(s);
  p.w = 0.0;
  const double e0 = total_energy(s, Model(p));
  p.w = 7.5;
  EXPECT_NEAR(total_energy(s, Model(p)), e0, 1e-13);
}

TEST(MicrosystemForce, Examples) {
  ModelParams p;
  const auto b = build_basis(p.q);
  EXPECT_NEAR(microsystem_force(initial_state(p, b), b, p.alpha), 0.0, 1e-15);

  StateVector up(b.dim());
  for (std::size_t i = 1; i < b.dim(); i += 2) up.q[i] = 1.0;
  EXPECT_NEAR(microsystem_force(normalize(up), b, 1.0), 0.5, 1e-14);

  p.set_beta_ratio(1.2);
  const double f = microsystem_force(initial_state(p, b), b, p.alpha);
  EXPECT_NEAR(std::abs(f), std::abs(p.beta1 * p.beta1 - p.beta2 * p.beta2) / 2, 1e-14);
  EXPECT_NEAR(std::abs(f), 0.0902, 5e-5);
}
