#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "chebbicg/blas.hpp"
#include "chebbicg/errors.hpp"

namespace chebbicg {

// Row-major dense matrix.  Used for small systems (companion oracles,
// shifted tridiagonal blocks, singular value estimation), never for the
// large outer operators.
class DenseMatrix {
 public:
  DenseMatrix() : rows_(0), cols_(0) {}
  DenseMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), a_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) {
    assert(i < rows_ && j < cols_);
    return a_[i * cols_ + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    assert(i < rows_ && j < cols_);
    return a_[i * cols_ + j];
  }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix I(n, n);
    for (std::size_t i = 0; i < n; ++i) I(i, i) = 1.0;
    return I;
  }

 private:
  std::size_t rows_, cols_;
  std::vector<double> a_;
};

inline Vector dense_matvec(const DenseMatrix& A, const Vector& x,
                           bool transpose = false) {
  if ((transpose ? A.rows() : A.cols()) != x.size())
    throw dimension_error("dense_matvec: shape mismatch");
  Vector y(transpose ? A.cols() : A.rows(), 0.0);
  if (!transpose) {
    for (std::size_t i = 0; i < A.rows(); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < A.cols(); ++j) s += A(i, j) * x[j];
      y[i] = s;
    }
  } else {
    for (std::size_t i = 0; i < A.rows(); ++i)
      for (std::size_t j = 0; j < A.cols(); ++j) y[j] += A(i, j) * x[i];
  }
  return y;
}

// LU factorization with partial pivoting, P*A = L*U.  Solves A x = b and
// A^T x = b from the same factors.
class DenseLU {
 public:
  explicit DenseLU(const DenseMatrix& A) : n_(A.rows()), lu_(A), perm_(n_) {
    if (A.rows() != A.cols()) throw dimension_error("DenseLU: matrix not square");
    for (std::size_t i = 0; i < n_; ++i) perm_[i] = i;
    for (std::size_t k = 0; k < n_; ++k) {
      std::size_t piv = k;
      double best = std::abs(lu_(k, k));
      for (std::size_t i = k + 1; i < n_; ++i) {
        if (std::abs(lu_(i, k)) > best) {
          best = std::abs(lu_(i, k));
          piv = i;
        }
      }
      if (best == 0.0) throw singular_error("DenseLU: singular matrix");
      if (piv != k) {
        for (std::size_t j = 0; j < n_; ++j) std::swap(lu_(k, j), lu_(piv, j));
        std::swap(perm_[k], perm_[piv]);
      }
      for (std::size_t i = k + 1; i < n_; ++i) {
        lu_(i, k) /= lu_(k, k);
        const double m = lu_(i, k);
        if (m != 0.0)
          for (std::size_t j = k + 1; j < n_; ++j) lu_(i, j) -= m * lu_(k, j);
      }
    }
  }

  std::size_t size() const { return n_; }

  Vector solve(const Vector& b, bool transpose = false) const {
    if (b.size() != n_) throw dimension_error("DenseLU::solve: length mismatch");
    Vector x(n_);
    if (!transpose) {
      // x = U^{-1} L^{-1} P b
      for (std::size_t i = 0; i < n_; ++i) x[i] = b[perm_[i]];
      for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < i; ++j) x[i] -= lu_(i, j) * x[j];
      for (std::size_t ii = n_; ii-- > 0;) {
        for (std::size_t j = ii + 1; j < n_; ++j) x[ii] -= lu_(ii, j) * x[j];
        x[ii] /= lu_(ii, ii);
      }
    } else {
      // x = P^T L^{-T} U^{-T} b
      Vector z(b);
      for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = 0; j < i; ++j) z[i] -= lu_(j, i) * z[j];
        z[i] /= lu_(i, i);
      }
      for (std::size_t ii = n_; ii-- > 0;)
        for (std::size_t j = ii + 1; j < n_; ++j) z[ii] -= lu_(j, ii) * z[j];
      for (std::size_t i = 0; i < n_; ++i) x[perm_[i]] = z[i];
    }
    return x;
  }

 private:
  std::size_t n_;
  DenseMatrix lu_;
  std::vector<std::size_t> perm_;
};

// Givens rotation [c s; -s c] [a; b] = [r; 0] with r >= 0.
struct Givens {
  double c, s, r;
};

inline Givens givens(double a, double b) {
  if (a == 0.0 && b == 0.0) return {1.0, 0.0, 0.0};
  const double r = std::hypot(a, b);
  return {a / r, b / r, r};
}

// Smallest singular value of a square matrix via inverse iteration on
// A^T A using the LU factors of A.  Returns 0 for an exactly singular A.
inline double smallest_singular_value(const DenseMatrix& A) {
  if (A.rows() != A.cols())
    throw dimension_error("smallest_singular_value: matrix not square");
  const std::size_t n = A.rows();
  if (n == 0) return 0.0;
  std::unique_ptr<DenseLU> lu;
  try {
    lu = std::make_unique<DenseLU>(A);
  } catch (const singular_error&) {
    return 0.0;
  }
  Vector x(n);
  std::uint64_t state = 0x9e3779b97f4a7c15ull;
  for (std::size_t i = 0; i < n; ++i) {
    state = state * 6364136223846793005ull + 1442695040888963407ull;
    x[i] = 0.5 + static_cast<double>(state >> 40) / (1ull << 25);
  }
  scal(1.0 / nrm2(x), x);
  double sigma = 0.0;
  for (int it = 0; it < 200; ++it) {
    Vector w = lu->solve(x, true);   // w = A^{-T} x
    Vector z = lu->solve(w, false);  // z = A^{-1} w
    const double zn = nrm2(z);
    if (!(zn > 0.0) || !std::isfinite(zn)) return 0.0;
    scal(1.0 / zn, z);
    x = std::move(z);
    const double est = nrm2(dense_matvec(A, x));
    if (it > 2 && std::abs(est - sigma) <= 1e-13 * est) return est;
    sigma = est;
  }
  return sigma;
}

}  // namespace chebbicg
