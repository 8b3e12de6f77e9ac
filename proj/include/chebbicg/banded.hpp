#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

#include "chebbicg/blas.hpp"
#include "chebbicg/errors.hpp"
#include "chebbicg/sparse.hpp"

namespace chebbicg {

// LU factorization with partial pivoting for a banded matrix with kl
// subdiagonals and ku superdiagonals.  Band storage with kl extra rows for
// pivoting fill, as in the classic dgbtrf layout: after factorization the
// upper factor has bandwidth kl+ku and the multipliers sit below the
// diagonal of each column.  Solves both A x = b and A^T x = b.
class BandedLU {
 public:
  BandedLU(const SparseMatrix& A, std::size_t kl, std::size_t ku)
      : n_(A.nrows), kl_(kl), ku_(ku), ldab_(2 * kl + ku + 1),
        ab_(ldab_ * A.nrows, 0.0), piv_(A.nrows) {
    if (A.nrows != A.ncols) throw dimension_error("BandedLU: matrix not square");
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t p = A.row_ptr[i]; p < A.row_ptr[i + 1]; ++p) {
        const std::size_t j = A.col_idx[p];
        if ((j > i && j - i > ku_) || (i > j && i - j > kl_))
          throw dimension_error("BandedLU: entry outside declared band");
        at(i, j) += A.values[p];
      }
    factor();
  }

  std::size_t size() const { return n_; }

  Vector solve(const Vector& b, bool transpose = false) const {
    if (b.size() != n_) throw dimension_error("BandedLU::solve: length mismatch");
    Vector x(b);
    const std::size_t ub = kl_ + ku_;  // upper bandwidth of U after fill
    if (!transpose) {
      for (std::size_t k = 0; k < n_; ++k) {
        if (piv_[k] != k) std::swap(x[k], x[piv_[k]]);
        const std::size_t iend = std::min(n_ - 1, k + kl_);
        for (std::size_t i = k + 1; i <= iend; ++i) x[i] -= at(i, k) * x[k];
      }
      for (std::size_t ii = n_; ii-- > 0;) {
        const std::size_t jend = std::min(n_ - 1, ii + ub);
        for (std::size_t j = ii + 1; j <= jend; ++j) x[ii] -= at(ii, j) * x[j];
        x[ii] /= at(ii, ii);
      }
    } else {
      // U^T z = b (forward), then x = (E_{n-1}P_{n-1}...E_0P_0)^T z
      for (std::size_t i = 0; i < n_; ++i) {
        const std::size_t jstart = i > ub ? i - ub : 0;
        for (std::size_t j = jstart; j < i; ++j) x[i] -= at(j, i) * x[j];
        x[i] /= at(i, i);
      }
      for (std::size_t kk = n_; kk-- > 0;) {
        const std::size_t iend = std::min(n_ - 1, kk + kl_);
        for (std::size_t i = kk + 1; i <= iend; ++i) x[kk] -= at(i, kk) * x[i];
        if (piv_[kk] != kk) std::swap(x[kk], x[piv_[kk]]);
      }
    }
    return x;
  }

 private:
  double& at(std::size_t i, std::size_t j) {
    assert(j < n_ && kl_ + ku_ + i >= j && kl_ + ku_ + i - j < ldab_);
    return ab_[(kl_ + ku_ + i - j) * n_ + j];
  }
  double at(std::size_t i, std::size_t j) const {
    assert(j < n_ && kl_ + ku_ + i >= j && kl_ + ku_ + i - j < ldab_);
    return ab_[(kl_ + ku_ + i - j) * n_ + j];
  }

  void factor() {
    const std::size_t ub = kl_ + ku_;
    for (std::size_t k = 0; k < n_; ++k) {
      std::size_t piv = k;
      double best = std::abs(at(k, k));
      const std::size_t iend = std::min(n_ - 1, k + kl_);
      for (std::size_t i = k + 1; i <= iend; ++i)
        if (std::abs(at(i, k)) > best) {
          best = std::abs(at(i, k));
          piv = i;
        }
      if (best == 0.0) throw singular_error("BandedLU: singular matrix");
      piv_[k] = piv;
      const std::size_t jend = std::min(n_ - 1, k + ub);
      if (piv != k)
        for (std::size_t j = k; j <= jend; ++j) std::swap(at(k, j), at(piv, j));
      for (std::size_t i = k + 1; i <= iend; ++i) {
        at(i, k) /= at(k, k);
        const double m = at(i, k);
        if (m != 0.0)
          for (std::size_t j = k + 1; j <= jend; ++j)
            at(i, j) -= m * at(k, j);
      }
    }
  }

  std::size_t n_, kl_, ku_, ldab_;
  std::vector<double> ab_;
  std::vector<std::size_t> piv_;
};

}  // namespace chebbicg
