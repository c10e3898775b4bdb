#pragma once

// State space of q spin-1/2 "qubits": index <-> spin-configuration bookkeeping
// and the elementary operations on a wavefunction psi = Q + iP.
//
// Bit convention: bit 0 of an index is the microsystem spin s1, bits 1..q-1
// are the apparatus spins s2..sq in order. A set bit means +J, a clear bit -J.

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "nlqm/error.hpp"

namespace nlqm {

inline constexpr double kSpin = 0.5;
inline constexpr int kMaxQubits = 14;

class SpinBasis {
 public:
  explicit SpinBasis(int qubits) : qubits_(qubits) {
    require(qubits >= 1 && qubits <= kMaxQubits, ErrorKind::DimensionLimit,
            "qubit count " + std::to_string(qubits) + " outside [1, " +
                std::to_string(kMaxQubits) + "]");
    dim_ = std::size_t{1} << qubits;
    micro_.resize(dim_);
    total_.resize(dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
      micro_[i] = spin(i, 0);
      total_[i] = static_cast<double>(level(i)) - wall();
    }
  }

  int qubits() const noexcept { return qubits_; }
  std::size_t dim() const noexcept { return dim_; }
  double spin_magnitude() const noexcept { return kSpin; }

  /// R = J (q - 1): the largest attainable apparatus total spin.
  double wall() const noexcept { return kSpin * (qubits_ - 1); }

  /// s_{k+1}(i) for k = 0..q-1.
  static double spin(std::size_t index, int k) noexcept {
    return ((index >> k) & 1u) ? kSpin : -kSpin;
  }

  /// Number of apparatus spins up; S(i) = level(i) - R.
  static int level(std::size_t index) noexcept {
    return std::popcount(static_cast<std::uint64_t>(index >> 1));
  }

  double micro_spin(std::size_t i) const { return micro_[i]; }
  double total_spin(std::size_t i) const { return total_[i]; }
  std::span<const double> micro_spins() const noexcept { return micro_; }
  std::span<const double> total_spins() const noexcept { return total_; }

  /// Attainable apparatus total spins, ascending: -R, -R+1, ..., R.
  std::vector<double> spin_values() const {
    std::vector<double> out(static_cast<std::size_t>(qubits_));
    for (int l = 0; l < qubits_; ++l) out[static_cast<std::size_t>(l)] = l - wall();
    return out;
  }

  std::size_t index_of(std::span<const double> spins) const {
    require(spins.size() == static_cast<std::size_t>(qubits_), ErrorKind::DimensionMismatch,
            "spin tuple length");
    std::size_t index = 0;
    for (int k = 0; k < qubits_; ++k) {
      if (spins[static_cast<std::size_t>(k)] > 0) index |= std::size_t{1} << k;
    }
    return index;
  }

  std::vector<double> spins_of(std::size_t index) const {
    std::vector<double> out(static_cast<std::size_t>(qubits_));
    for (int k = 0; k < qubits_; ++k) out[static_cast<std::size_t>(k)] = spin(index, k);
    return out;
  }

 private:
  int qubits_;
  std::size_t dim_ = 0;
  std::vector<double> micro_;
  std::vector<double> total_;
};

inline SpinBasis build_basis(int qubits) { return SpinBasis(qubits); }

/// psi = Q + iP, stored as two real vectors.
struct StateVector {
  std::vector<double> q;
  std::vector<double> p;

  StateVector() = default;
  explicit StateVector(std::size_t n) : q(n, 0.0), p(n, 0.0) {}
  StateVector(std::vector<double> re, std::vector<double> im) : q(std::move(re)), p(std::move(im)) {
    require(q.size() == p.size(), ErrorKind::DimensionMismatch, "Q and P lengths differ");
  }

  std::size_t dim() const noexcept { return q.size(); }

  bool operator==(const StateVector&) const = default;
};

inline double norm_sq(const StateVector& s) {
  double acc = 0.0;
  for (std::size_t i = 0; i < s.dim(); ++i) acc += s.q[i] * s.q[i] + s.p[i] * s.p[i];
  return acc;
}

inline StateVector normalize(StateVector s) {
  const double n2 = norm_sq(s);
  require(n2 > 0.0 && std::isfinite(n2), ErrorKind::DegenerateState, "cannot normalize a zero state");
  const double inv = 1.0 / std::sqrt(n2);
  for (auto& v : s.q) v *= inv;
  for (auto& v : s.p) v *= inv;
  return s;
}

/// Density summed per apparatus level (index l <-> S = l - R).
inline std::vector<double> density_by_level(const StateVector& s, const SpinBasis& basis) {
  require(s.dim() == basis.dim(), ErrorKind::DimensionMismatch, "state/basis dimension");
  std::vector<double> out(static_cast<std::size_t>(basis.qubits()), 0.0);
  for (std::size_t i = 0; i < s.dim(); ++i) {
    out[static_cast<std::size_t>(SpinBasis::level(i))] += s.q[i] * s.q[i] + s.p[i] * s.p[i];
  }
  return out;
}

inline std::map<double, double> density_by_total_spin(const StateVector& s, const SpinBasis& basis) {
  const auto levels = density_by_level(s, basis);
  std::map<double, double> out;
  for (std::size_t l = 0; l < levels.size(); ++l) out[static_cast<double>(l) - basis.wall()] = levels[l];
  return out;
}

}  // namespace nlqm
