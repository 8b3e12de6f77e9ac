#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "chebbicg/blas.hpp"
#include "chebbicg/chebyshev.hpp"
#include "chebbicg/dense.hpp"
#include "chebbicg/errors.hpp"
#include "chebbicg/sparse.hpp"

namespace chebbicg {

// Extended vectors are d stacked blocks of length n.
using ExtendedVector = Vector;

// Matrix-free companion linearization of the degree-d interpolant
// P(mu) = sum_l P_l tau_l(mu); the pencil (K, M) acts on d blocks.
//
//   K: block row 0 is [0 I 0 ...]; rows 1..d-2 carry I at i-1 and i+1;
//      the last row is [P_0 ... P_{d-3}  (P_{d-2}-P_d)  P_{d-1}].
//   M: (1/a) blockdiag(I, 2I, ..., 2I, -2 P_d).
class CompanionOperator {
 public:
  explicit CompanionOperator(MatrixChebPoly poly) : poly_(std::move(poly)) {
    if (poly_.degree < 2)
      throw dimension_error("CompanionOperator: degree must be >= 2");
    if (poly_.P.size() != poly_.degree + 1)
      throw dimension_error("CompanionOperator: coefficient count mismatch");
  }

  std::size_t n() const { return poly_.n; }
  std::size_t d() const { return poly_.degree; }
  std::size_t dim() const { return poly_.n * poly_.degree; }
  double a() const { return poly_.a; }
  const MatrixChebPoly& poly() const { return poly_; }

  // Last block row of K as weights over P_l: W_l = P_l for l < d-2,
  // W_{d-2} = P_{d-2} - P_d, W_{d-1} = P_{d-1}.
  std::vector<std::pair<double, const SparseMatrix*>> last_row_weight(
      std::size_t l) const {
    assert(l < d());
    if (l == d() - 2) return {{1.0, &poly_.P[l]}, {-1.0, &poly_.P[d()]}};
    return {{1.0, &poly_.P[l]}};
  }

  ExtendedVector apply_K(const ExtendedVector& v, bool transpose = false) const {
    check_dim(v, "apply_K");
    const std::size_t n = poly_.n, d = poly_.degree;
    ExtendedVector out(dim(), 0.0);
    if (!transpose) {
      for (std::size_t i = 0; i < n; ++i) out[i] = v[n + i];
      for (std::size_t k = 1; k + 1 < d; ++k) {
        auto o = block(out, k, n);
        auto lo = block(v, k - 1, n);
        auto hi = block(v, k + 1, n);
        for (std::size_t i = 0; i < n; ++i) o[i] = lo[i] + hi[i];
      }
      auto last = block(out, d - 1, n);
      for (std::size_t l = 0; l < d; ++l)
        for (const auto& [w, P] : last_row_weight(l))
          spmv(*P, block(v, l, n), last, false, w, true);
    } else {
      auto v0 = block(v, 0, n);
      axpy(1.0, v0, block(out, 1, n));
      for (std::size_t k = 1; k + 1 < d; ++k) {
        auto vk = block(v, k, n);
        axpy(1.0, vk, block(out, k - 1, n));
        axpy(1.0, vk, block(out, k + 1, n));
      }
      auto vlast = block(v, d - 1, n);
      for (std::size_t l = 0; l < d; ++l)
        for (const auto& [w, P] : last_row_weight(l))
          spmv(*P, vlast, block(out, l, n), true, w, true);
    }
    return out;
  }

  ExtendedVector apply_M(const ExtendedVector& v, bool transpose = false) const {
    check_dim(v, "apply_M");
    const std::size_t n = poly_.n, d = poly_.degree;
    const double a = poly_.a;
    ExtendedVector out(dim(), 0.0);
    for (std::size_t i = 0; i < n; ++i) out[i] = v[i] / a;
    for (std::size_t k = 1; k + 1 < d; ++k) {
      auto o = block(out, k, n);
      auto vk = block(v, k, n);
      for (std::size_t i = 0; i < n; ++i) o[i] = 2.0 / a * vk[i];
    }
    spmv(poly_.P[d], block(v, d - 1, n), block(out, d - 1, n), transpose,
         -2.0 / a, false);
    return out;
  }

  // (K - sigma M) v
  ExtendedVector apply_pencil(const ExtendedVector& v, double sigma,
                              bool transpose = false) const {
    ExtendedVector out = apply_K(v, transpose);
    const ExtendedVector mv = apply_M(v, transpose);
    axpy(-sigma, mv, out);
    return out;
  }

  // btilde = [0; ...; 0; b]
  ExtendedVector build_btilde(const Vector& b) const {
    if (b.size() != poly_.n)
      throw dimension_error("build_btilde: length mismatch");
    ExtendedVector bt(dim(), 0.0);
    std::copy(b.begin(), b.end(), bt.end() - poly_.n);
    return bt;
  }

  // First block of the extended solution approximates x(mu).
  Vector extract_x(const ExtendedVector& u) const {
    check_dim(u, "extract_x");
    return Vector(u.begin(), u.begin() + poly_.n);
  }

  // Dense K or M for oracle comparisons; guarded to small dimensions.
  enum class Which { K, M };
  DenseMatrix assemble_dense(Which which) const {
    if (dim() > 5000)
      throw dimension_error("assemble_dense: refusing dn > 5000");
    const std::size_t n = poly_.n, d = poly_.degree;
    DenseMatrix out(dim(), dim());
    auto put = [&](std::size_t bi, std::size_t bj, double w,
                   const SparseMatrix* P) {
      if (P == nullptr) {
        for (std::size_t i = 0; i < n; ++i) out(bi * n + i, bj * n + i) += w;
        return;
      }
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = P->row_ptr[i]; p < P->row_ptr[i + 1]; ++p)
          out(bi * n + i, bj * n + P->col_idx[p]) += w * P->values[p];
    };
    if (which == Which::K) {
      put(0, 1, 1.0, nullptr);
      for (std::size_t k = 1; k + 1 < d; ++k) {
        put(k, k - 1, 1.0, nullptr);
        put(k, k + 1, 1.0, nullptr);
      }
      for (std::size_t l = 0; l < d; ++l)
        for (const auto& [w, P] : last_row_weight(l)) put(d - 1, l, w, P);
    } else {
      const double a = poly_.a;
      put(0, 0, 1.0 / a, nullptr);
      for (std::size_t k = 1; k + 1 < d; ++k) put(k, k, 2.0 / a, nullptr);
      put(d - 1, d - 1, -2.0 / a, &poly_.P[d]);
    }
    return out;
  }

 private:
  void check_dim(const ExtendedVector& v, const char* who) const {
    if (v.size() != dim())
      throw dimension_error(std::string(who) + ": expected length d*n");
  }

  MatrixChebPoly poly_;
};

}  // namespace chebbicg
