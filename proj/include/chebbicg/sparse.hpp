#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <tuple>
#include <vector>

#include "chebbicg/blas.hpp"
#include "chebbicg/dense.hpp"
#include "chebbicg/errors.hpp"

namespace chebbicg {

// Compressed sparse row matrix.  row_ptr has nrows+1 offsets; within each
// row the column indices are strictly increasing.
struct SparseMatrix {
  std::size_t nrows = 0;
  std::size_t ncols = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::size_t> col_idx;
  std::vector<double> values;

  std::size_t nnz() const { return values.size(); }

  bool valid() const {
    if (row_ptr.size() != nrows + 1 || row_ptr.front() != 0) return false;
    if (row_ptr.back() != values.size() || col_idx.size() != values.size())
      return false;
    for (std::size_t i = 0; i < nrows; ++i) {
      if (row_ptr[i] > row_ptr[i + 1]) return false;
      for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) {
        if (col_idx[p] >= ncols) return false;
        if (p > row_ptr[i] && col_idx[p] <= col_idx[p - 1]) return false;
      }
    }
    return true;
  }
};

// Assembles CSR from (row, col, value) triplets; duplicates are summed.
inline SparseMatrix sparse_from_triplets(
    std::size_t nrows, std::size_t ncols,
    std::vector<std::tuple<std::size_t, std::size_t, double>> trips) {
  for (const auto& [i, j, v] : trips) {
    (void)v;
    if (i >= nrows || j >= ncols)
      throw dimension_error("sparse_from_triplets: index out of range");
  }
  std::sort(trips.begin(), trips.end(),
            [](const auto& a, const auto& b) {
              return std::tie(std::get<0>(a), std::get<1>(a)) <
                     std::tie(std::get<0>(b), std::get<1>(b));
            });
  SparseMatrix A;
  A.nrows = nrows;
  A.ncols = ncols;
  A.row_ptr.assign(nrows + 1, 0);
  std::size_t last_row = SIZE_MAX, last_col = SIZE_MAX;
  for (const auto& [i, j, v] : trips) {
    if (i == last_row && j == last_col) {
      A.values.back() += v;  // duplicate entry: sum
      continue;
    }
    A.col_idx.push_back(j);
    A.values.push_back(v);
    A.row_ptr[i + 1]++;
    last_row = i;
    last_col = j;
  }
  for (std::size_t i = 0; i < nrows; ++i) A.row_ptr[i + 1] += A.row_ptr[i];
  assert(A.valid());
  return A;
}

inline SparseMatrix sparse_identity(std::size_t n, double scale = 1.0) {
  SparseMatrix I;
  I.nrows = I.ncols = n;
  I.row_ptr.resize(n + 1);
  I.col_idx.resize(n);
  I.values.assign(n, scale);
  for (std::size_t i = 0; i <= n; ++i) I.row_ptr[i] = i;
  for (std::size_t i = 0; i < n; ++i) I.col_idx[i] = i;
  return I;
}

inline SparseMatrix sparse_diag(const Vector& d) {
  SparseMatrix D = sparse_identity(d.size());
  D.values = d;
  return D;
}

// y = A x  or  y = A^T x.  The transposed product is formed by scattering
// row contributions, so A^T is never materialized.
inline void spmv(const SparseMatrix& A, std::span<const double> x,
                 std::span<double> y, bool transpose = false,
                 double alpha = 1.0, bool accumulate = false) {
  if (!transpose) {
    if (x.size() != A.ncols || y.size() != A.nrows)
      throw dimension_error("spmv: shape mismatch");
    for (std::size_t i = 0; i < A.nrows; ++i) {
      double s = 0.0;
      for (std::size_t p = A.row_ptr[i]; p < A.row_ptr[i + 1]; ++p)
        s += A.values[p] * x[A.col_idx[p]];
      y[i] = (accumulate ? y[i] : 0.0) + alpha * s;
    }
  } else {
    if (x.size() != A.nrows || y.size() != A.ncols)
      throw dimension_error("spmv: shape mismatch");
    if (!accumulate) set_zero(y);
    for (std::size_t i = 0; i < A.nrows; ++i) {
      const double xi = alpha * x[i];
      if (xi == 0.0) continue;
      for (std::size_t p = A.row_ptr[i]; p < A.row_ptr[i + 1]; ++p)
        y[A.col_idx[p]] += A.values[p] * xi;
    }
  }
}

inline Vector spmv(const SparseMatrix& A, const Vector& x,
                   bool transpose = false) {
  Vector y(transpose ? A.ncols : A.nrows, 0.0);
  spmv(A, std::span<const double>(x), std::span<double>(y), transpose);
  return y;
}

// C = alpha*A + beta*B on the union sparsity pattern.
inline SparseMatrix sparse_lincomb(double alpha, const SparseMatrix& A,
                                   double beta, const SparseMatrix& B) {
  if (A.nrows != B.nrows || A.ncols != B.ncols)
    throw dimension_error("sparse_lincomb: shape mismatch");
  SparseMatrix C;
  C.nrows = A.nrows;
  C.ncols = A.ncols;
  C.row_ptr.assign(A.nrows + 1, 0);
  C.col_idx.reserve(std::max(A.nnz(), B.nnz()));
  C.values.reserve(std::max(A.nnz(), B.nnz()));
  for (std::size_t i = 0; i < A.nrows; ++i) {
    std::size_t pa = A.row_ptr[i], ea = A.row_ptr[i + 1];
    std::size_t pb = B.row_ptr[i], eb = B.row_ptr[i + 1];
    while (pa < ea || pb < eb) {
      std::size_t ja = pa < ea ? A.col_idx[pa] : SIZE_MAX;
      std::size_t jb = pb < eb ? B.col_idx[pb] : SIZE_MAX;
      if (ja == jb) {
        C.col_idx.push_back(ja);
        C.values.push_back(alpha * A.values[pa++] + beta * B.values[pb++]);
      } else if (ja < jb) {
        C.col_idx.push_back(ja);
        C.values.push_back(alpha * A.values[pa++]);
      } else {
        C.col_idx.push_back(jb);
        C.values.push_back(beta * B.values[pb++]);
      }
    }
    C.row_ptr[i + 1] = C.col_idx.size();
  }
  return C;
}

inline double sparse_frobenius(const SparseMatrix& A) {
  double s = 0.0;
  for (double v : A.values) s += v * v;
  return std::sqrt(s);
}

inline DenseMatrix sparse_to_dense(const SparseMatrix& A) {
  DenseMatrix D(A.nrows, A.ncols);
  for (std::size_t i = 0; i < A.nrows; ++i)
    for (std::size_t p = A.row_ptr[i]; p < A.row_ptr[i + 1]; ++p)
      D(i, A.col_idx[p]) += A.values[p];
  return D;
}

// Lower and upper bandwidths (kl, ku).
inline std::pair<std::size_t, std::size_t> sparse_bandwidth(
    const SparseMatrix& A) {
  std::size_t kl = 0, ku = 0;
  for (std::size_t i = 0; i < A.nrows; ++i)
    for (std::size_t p = A.row_ptr[i]; p < A.row_ptr[i + 1]; ++p) {
      const std::size_t j = A.col_idx[p];
      if (j < i) kl = std::max(kl, i - j);
      if (j > i) ku = std::max(ku, j - i);
    }
  return {kl, ku};
}

}  // namespace chebbicg
