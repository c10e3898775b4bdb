#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "nlqm/error.hpp"

namespace nlqm {

/// Row-major dense real matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::span<const double> data() const noexcept { return data_; }

  DenseMatrix transpose() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  DenseMatrix& operator*=(double s) {
    for (auto& v : data_) v *= s;
    return *this;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  bool operator==(const DenseMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline void matvec(const DenseMatrix& m, std::span<const double> x, std::span<double> out) {
  require(x.size() == m.cols() && out.size() == m.rows(), ErrorKind::DimensionMismatch, "matvec");
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto r = m.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) acc += r[j] * x[j];
    out[i] = acc;
  }
}

inline DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.cols() == b.rows(), ErrorKind::DimensionMismatch, "matrix product");
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

/// det = sign * exp(log_abs); `singular` means a pivot vanished to working precision.
struct LogDeterminant {
  int sign = 0;
  double log_abs = -std::numeric_limits<double>::infinity();
  bool singular = true;

  /// May overflow to +-inf for large matrices; use sign/log_abs for decisions.
  double value() const { return singular ? 0.0 : sign * std::exp(log_abs); }
};

/// LU decomposition with partial pivoting, accumulating the pivot product as
/// sign and log-magnitude so that 1000-dimensional determinants do not overflow.
inline LogDeterminant log_determinant(DenseMatrix a) {
  require(a.rows() == a.cols(), ErrorKind::DimensionMismatch, "determinant of non-square matrix");
  const std::size_t n = a.rows();
  LogDeterminant out;
  if (n == 0) return {1, 0.0, false};
  const double tiny = static_cast<double>(n) * std::numeric_limits<double>::epsilon() * a.max_abs();
  int sign = 1;
  double log_abs = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    double best = std::abs(a(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(a(i, k)) > best) {
        best = std::abs(a(i, k));
        piv = i;
      }
    }
    if (!(best > tiny)) return out;
    if (piv != k) {
      std::swap_ranges(a.row(k).begin(), a.row(k).end(), a.row(piv).begin());
      sign = -sign;
    }
    const double pivot = a(k, k);
    if (pivot < 0) sign = -sign;
    log_abs += std::log(std::abs(pivot));
    const auto pivot_row = a.row(k);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double factor = a(i, k) / pivot;
      if (factor == 0.0) continue;
      auto r = a.row(i);
      for (std::size_t j = k + 1; j < n; ++j) r[j] -= factor * pivot_row[j];
    }
  }
  return {sign, log_abs, false};
}

struct SymmetricEigen {
  std::vector<double> values;
  DenseMatrix vectors;  ///< column j is the eigenvector of values[j]
};

/// Cyclic Jacobi rotations; intended for the small dense oracles (N <= a few hundred).
inline SymmetricEigen symmetric_eigen(DenseMatrix a, int max_sweeps = 100) {
  require(a.rows() == a.cols(), ErrorKind::DimensionMismatch, "symmetric_eigen");
  const std::size_t n = a.rows();
  DenseMatrix v = DenseMatrix::identity(n);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (off < 1e-30 * std::max(1.0, a.max_abs() * a.max_abs())) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  SymmetricEigen out{std::vector<double>(n), std::move(v)};
  for (std::size_t i = 0; i < n; ++i) out.values[i] = a(i, i);
  return out;
}

}  // namespace nlqm
