#pragma once

// Built-in validation suites run by `nlqm selftest`. Each check carries the
// measured value and the tolerance it was judged against.

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "nlqm/dynamics.hpp"
#include "nlqm/error.hpp"
#include "nlqm/hilbert.hpp"
#include "nlqm/integrate.hpp"
#include "nlqm/kepler.hpp"
#include "nlqm/linalg.hpp"
#include "nlqm/measure.hpp"
#include "nlqm/stability.hpp"

namespace nlqm {

struct CheckResult {
  std::string suite;
  std::string name;
  bool pass = false;
  double value = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct SelftestReport {
  std::vector<CheckResult> checks;

  bool passed() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return !checks.empty();
  }
  std::size_t failures() const {
    std::size_t n = 0;
    for (const auto& c : checks) n += c.pass ? 0 : 1;
    return n;
  }
};

namespace detail {

inline CheckResult at_most(std::string suite, std::string name, double value, double tol) {
  return {std::move(suite), std::move(name), std::isfinite(value) && value <= tol, value, tol, {}};
}

inline double max_component_diff(const StateVector& a, const StateVector& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i)
    d = std::max({d, std::abs(a.q[i] - b.q[i]), std::abs(a.p[i] - b.p[i])});
  return d;
}

}  // namespace detail

/// exp(-iKt) psi0 through the Jacobi eigendecomposition of the materialized K.
inline StateVector linear_evolution_oracle(const Model& model, const StateVector& s0, double t) {
  const auto eig = symmetric_eigen(model.op().materialize());
  const std::size_t n = model.dim();
  StateVector out(n);
  for (std::size_t j = 0; j < n; ++j) {
    double cr = 0.0, ci = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      cr += eig.vectors(i, j) * s0.q[i];
      ci += eig.vectors(i, j) * s0.p[i];
    }
    const double c = std::cos(eig.values[j] * t), s = std::sin(eig.values[j] * t);
    // (cr + i ci)(c - i s)
    const double re = cr * c + ci * s, im = ci * c - cr * s;
    for (std::size_t i = 0; i < n; ++i) {
      out.q[i] += eig.vectors(i, j) * re;
      out.p[i] += eig.vectors(i, j) * im;
    }
  }
  return out;
}

/// Deterministic pseudo-random unit state for oracle comparisons.
inline StateVector oracle_state(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  StateVector s(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.q[i] = rng.normal();
    s.p[i] = rng.normal();
  }
  return normalize(s);
}

inline std::vector<CheckResult> selftest_kepler() {
  std::vector<CheckResult> out;
  const auto ruth = kepler_oracle(KeplerRun::eccentric(0.5, KeplerMethod::Ruth4, 10000));
  out.push_back(detail::at_most("kepler", "ruth4 energy (e=0.5)", ruth.max_energy_error, 5e-6));
  out.push_back(detail::at_most("kepler", "ruth4 angular momentum (e=0.5)", ruth.max_angular_momentum_error, 5e-6));
  out.push_back(detail::at_most("kepler", "ruth4 closure (e=0.5)", ruth.closure_error, 5e-6));
  const auto tao = kepler_oracle(KeplerRun::eccentric(0.3, KeplerMethod::Tao, 10000));
  out.push_back(detail::at_most("kepler", "tao position vs analytic (e=0.3)", tao.max_position_error, 5e-6));
  out.push_back(detail::at_most("kepler", "tao closure (e=0.3)", tao.closure_error, 5e-6));
  return out;
}

/// Observed order of Ruth4 on one eccentric orbit. Passes when the error falls
/// monotonically with h at a slope near 4; a step too coarse to resolve the
/// orbit breaks the slope (or blows up) and is flagged.
inline CheckResult kepler_order_check(const std::vector<std::size_t>& step_counts, double min_order = 3.5) {
  CheckResult r{"kepler-order", "ruth4 observed order", false, 0.0, min_order, {}};
  std::vector<double> hs, errs;
  try {
    for (const auto n : step_counts) {
      const auto rep = kepler_oracle(KeplerRun::eccentric(0.5, KeplerMethod::Ruth4, n));
      hs.push_back(2.0 * std::numbers::pi / static_cast<double>(n));
      errs.push_back(rep.max_position_error);
    }
  } catch (const Error& e) {
    r.detail = e.what();
    r.value = std::nan("");
    return r;
  }
  bool monotone = true;
  for (std::size_t i = 1; i < errs.size(); ++i) monotone = monotone && errs[i] < errs[i - 1];
  r.value = observed_order(hs, errs);
  r.pass = monotone && std::isfinite(r.value) && r.value >= min_order && r.value <= 6.0 && errs.front() < 1.0;
  if (!monotone) r.detail = "error not decreasing with h";
  else if (errs.front() >= 1.0) r.detail = "coarsest step does not resolve the orbit";
  return r;
}

inline std::vector<CheckResult> selftest_linear_oracle() {
  ModelParams p;
  p.q = 5;
  p.w = 0.0;
  const Model m(p);
  const auto s0 = oracle_state(m.dim(), 8);
  const auto exact = linear_evolution_oracle(m, s0, 10.0);
  IntegratorConfig c;
  c.method = Method::Ruth4Frozen;
  const auto got = evolve(s0, c, m).final().state;
  return {detail::at_most("linear-oracle", "ruth4 vs eigendecomposition (q=5, t=10)",
                          detail::max_component_diff(got, exact), 1e-5)};
}

inline std::vector<CheckResult> selftest_conservation() {
  std::vector<CheckResult> out;
  {
    ModelParams p;
    p.q = 5;
    const Model m(p);
    IntegratorConfig c;
    c.method = Method::Ruth4Frozen;
    const auto traj = evolve(initial_state(p, m.basis()), c, m);
    double dn = 0.0, de = 0.0;
    for (const auto& s : traj.samples) {
      dn = std::max(dn, std::abs(s.norm - 1.0));
      de = std::max(de, std::abs(s.energy - traj.initial().energy));
    }
    out.push_back(detail::at_most("conservation", "ruth4 norm (w=0)", dn, 1e-9));
    out.push_back(detail::at_most("conservation", "ruth4 energy (w=0)", de, 1e-5));
  }
  {
    ModelParams p;
    p.q = 5;
    p.w = 2.2;
    p.set_beta_ratio(1.2);
    const Model m(p);
    const auto traj = evolve(initial_state(p, m.basis()), IntegratorConfig{}, m);
    const double e0 = traj.initial().extended_energy;
    double de = 0.0, dov = 0.0;
    for (const auto& s : traj.samples) {
      de = std::max(de, std::abs(s.extended_energy - e0));
      dov = std::max(dov, std::abs(s.overlap - traj.initial().overlap));
    }
    out.push_back(detail::at_most("conservation", "tao extended energy (w=2.2)", de, 5e-4));
    out.push_back(detail::at_most("conservation", "tao overlap Q.X+P.Y (w=2.2)", dov, 1e-12));
  }
  return out;
}

/// Builds the full 4x4 matrix for a two-spin case; s2 is the free spin value.
using TwoSpinBuilder = std::function<DenseMatrix(const TwoSpinCase&, double)>;

inline DenseMatrix default_two_spin_builder(const TwoSpinCase& c, double s2) {
  return two_spin_jacobian(c, s2).assembled();
}

/// Closed-form two-spin determinant against LU on the assembled matrix.
inline std::vector<CheckResult> selftest_jacobian(const TwoSpinBuilder& builder = default_two_spin_builder,
                                                  int draws = 1000) {
  Rng rng(2024);
  auto u = [&] { return 3.0 * rng.symmetric(); };
  double worst = 0.0;
  for (int t = 0; t < draws; ++t) {
    const TwoSpinCase c{u(), u(), u(), u(), std::abs(u()), u() > 0 ? 0.5 : -0.5, u() / 3.0};
    const double closed = two_spin_det(c);
    const double lu = det_conditioned(builder(c, u()), 1.0).value();
    const double rel = std::abs(lu - closed) / std::max(std::abs(closed), 1e-300);
    worst = std::max(worst, std::isfinite(rel) ? rel : INFINITY);
  }
  return {detail::at_most("jacobian", "two_spin_det vs LU pipeline", worst, 1e-9)};
}

/// Symmetric superposition: an unperturbed run keeps its mirror symmetry, and
/// randomized trials register left and right about equally often.
inline std::vector<CheckResult> selftest_symmetry(unsigned jobs = 1, std::size_t reps = 40) {
  std::vector<CheckResult> out;
  ModelParams p;
  p.w = 2.2;
  const Model m(p);
  const auto traj = evolve(initial_state(p, m.basis()), IntegratorConfig{}, m);
  const auto& d = traj.final().density;
  double asym = 0.0;
  for (std::size_t l = 0; l < d.size(); ++l) asym = std::max(asym, std::abs(d[l] - d[d.size() - 1 - l]));
  out.push_back(detail::at_most("symmetry", "mirror symmetry of unperturbed density", asym, 1e-6));

  RandomizationScheme sc;
  sc.seed = 1;
  const auto mc = monte_carlo(p, sc, reps, IntegratorConfig{}, jobs);
  const double diff = std::abs(static_cast<double>(mc.row.lrs) - static_cast<double>(mc.row.rrs));
  auto r = detail::at_most("symmetry", "|LRs - RRs| <= 4 sqrt(reps)", diff, 4.0 * std::sqrt(static_cast<double>(reps)));
  r.detail = "LR " + std::to_string(mc.row.lrs) + " RR " + std::to_string(mc.row.rrs) + " ND " +
             std::to_string(mc.row.nds) + " errors " + std::to_string(mc.row.errors);
  r.pass = r.pass && mc.row.errors == 0;
  out.push_back(r);
  return out;
}

struct SelftestOptions {
  unsigned jobs = 1;
  std::size_t symmetry_reps = 40;
  std::vector<std::size_t> order_steps{250, 500, 1000, 2000};
  TwoSpinBuilder jacobian_builder = default_two_spin_builder;
};

inline SelftestReport run_selftest(const SelftestOptions& opt = {}) {
  SelftestReport rep;
  auto add = [&](std::vector<CheckResult> v) { rep.checks.insert(rep.checks.end(), v.begin(), v.end()); };
  add(selftest_kepler());
  add({kepler_order_check(opt.order_steps)});
  add(selftest_linear_oracle());
  add(selftest_conservation());
  add(selftest_jacobian(opt.jacobian_builder));
  add(selftest_symmetry(opt.jobs, opt.symmetry_reps));
  return rep;
}

}  // namespace nlqm
