#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "chebbicg/errors.hpp"
#include "chebbicg/sparse.hpp"

namespace chebbicg {

inline constexpr double pi = 3.14159265358979323846;

// Chebyshev points of the first kind for [-a, a], k = 0..d, strictly
// decreasing in k.
inline Vector cheb_nodes(std::size_t d, double a) {
  if (a <= 0.0) throw dimension_error("cheb_nodes: interval half-width not positive");
  Vector x(d + 1);
  for (std::size_t k = 0; k <= d; ++k)
    x[k] = a * std::cos(pi * (2.0 * k + 1.0) / (2.0 * (d + 1.0)));
  return x;
}

// tau_0(mu), ..., tau_d(mu): Chebyshev basis scaled to [-a, a],
// tau_{l+1} = (2 mu / a) tau_l - tau_{l-1}.
inline Vector cheb_basis(double mu, std::size_t d, double a) {
  Vector tau(d + 1);
  tau[0] = 1.0;
  if (d >= 1) tau[1] = mu / a;
  for (std::size_t l = 2; l <= d; ++l)
    tau[l] = (2.0 * mu / a) * tau[l - 1] - tau[l - 2];
  return tau;
}

// Interpolation coefficients from samples at the d+1 Chebyshev points:
// c_l = (2 - delta_{l0}) / (d+1) * sum_k s_k cos(l pi (2k+1) / (2(d+1))).
inline Vector scalar_cheb_coeffs(const Vector& samples) {
  const std::size_t d = samples.size() - 1;
  if (samples.empty()) throw dimension_error("scalar_cheb_coeffs: no samples");
  Vector c(d + 1, 0.0);
  for (std::size_t l = 0; l <= d; ++l) {
    double s = 0.0;
    for (std::size_t k = 0; k <= d; ++k)
      s += samples[k] * std::cos(l * pi * (2.0 * k + 1.0) / (2.0 * (d + 1.0)));
    c[l] = (l == 0 ? 1.0 : 2.0) / (d + 1.0) * s;
  }
  return c;
}

inline double cheb_eval(const Vector& coeffs, double mu, double a) {
  const Vector tau = cheb_basis(mu, coeffs.size() - 1, a);
  double s = 0.0;
  for (std::size_t l = 0; l < coeffs.size(); ++l) s += coeffs[l] * tau[l];
  return s;
}

// Degree-d matrix-valued Chebyshev interpolant P(mu) = sum_l P_l tau_l(mu).
// All P_l share one sparsity pattern (the union over the coefficient
// matrices) when built through matrix_poly_from_samples.
struct MatrixChebPoly {
  std::size_t n = 0;
  std::size_t degree = 0;  // highest basis index; degree+1 coefficient matrices
  double a = 1.0;
  std::vector<SparseMatrix> P;

  bool shared_pattern() const {
    for (std::size_t l = 1; l < P.size(); ++l)
      if (P[l].row_ptr != P[0].row_ptr || P[l].col_idx != P[0].col_idx)
        return false;
    return true;
  }
};

// Builds the interpolant of A(mu) = sum_i f_i(mu) C_i from per-term samples
// of f_i at the d+1 Chebyshev points.
inline MatrixChebPoly matrix_poly_from_samples(
    const std::vector<SparseMatrix>& C, const std::vector<Vector>& f_samples,
    double a) {
  if (C.empty() || C.size() != f_samples.size())
    throw dimension_error("matrix_poly_from_samples: term count mismatch");
  const std::size_t n = C[0].nrows;
  const std::size_t d = f_samples[0].size() - 1;
  if (d < 2) throw dimension_error("matrix_poly_from_samples: degree must be >= 2");
  for (const auto& Ci : C)
    if (Ci.nrows != n || Ci.ncols != n)
      throw dimension_error("matrix_poly_from_samples: coefficient matrices must be square of equal size");
  for (const auto& s : f_samples)
    if (s.size() != d + 1)
      throw dimension_error("matrix_poly_from_samples: sample count mismatch");

  // zero matrix carrying the union pattern
  SparseMatrix Z;
  Z.nrows = Z.ncols = n;
  Z.row_ptr.assign(n + 1, 0);
  for (const auto& Ci : C) Z = sparse_lincomb(0.0, Z, 0.0, Ci);

  MatrixChebPoly poly;
  poly.n = n;
  poly.degree = d;
  poly.a = a;
  poly.P.assign(d + 1, Z);
  for (std::size_t i = 0; i < C.size(); ++i) {
    const SparseMatrix Ci = sparse_lincomb(1.0, C[i], 0.0, Z);
    const Vector c = scalar_cheb_coeffs(f_samples[i]);
    for (std::size_t l = 0; l <= d; ++l)
      for (std::size_t p = 0; p < Ci.values.size(); ++p)
        poly.P[l].values[p] += c[l] * Ci.values[p];
  }
  return poly;
}

// P(sigma) = sum_l tau_l(sigma) P_l.
inline SparseMatrix assemble_P_at(const MatrixChebPoly& poly, double sigma) {
  const Vector tau = cheb_basis(sigma, poly.degree, poly.a);
  if (poly.P.size() != poly.degree + 1)
    throw dimension_error("assemble_P_at: coefficient count mismatch");
  if (poly.shared_pattern()) {
    SparseMatrix S = poly.P[0];
    for (double& v : S.values) v *= tau[0];
    for (std::size_t l = 1; l <= poly.degree; ++l)
      for (std::size_t p = 0; p < S.values.size(); ++p)
        S.values[p] += tau[l] * poly.P[l].values[p];
    return S;
  }
  SparseMatrix S;
  S.nrows = S.ncols = poly.n;
  S.row_ptr.assign(poly.n + 1, 0);
  for (std::size_t l = 0; l <= poly.degree; ++l)
    S = sparse_lincomb(1.0, S, tau[l], poly.P[l]);
  return S;
}

// max over probes of ||P(mu) - A(mu)||_F / ||A(mu)||_F.
inline double interp_error(const MatrixChebPoly& poly,
                           const std::function<SparseMatrix(double)>& eval_A,
                           const Vector& probe_mus) {
  double worst = 0.0;
  for (double mu : probe_mus) {
    const SparseMatrix Amu = eval_A(mu);
    const SparseMatrix Pmu = assemble_P_at(poly, mu);
    const SparseMatrix D = sparse_lincomb(1.0, Pmu, -1.0, Amu);
    const double denom = sparse_frobenius(Amu);
    if (denom == 0.0) throw error("interp_error: zero matrix at probe point");
    worst = std::max(worst, sparse_frobenius(D) / denom);
  }
  return worst;
}

}  // namespace chebbicg
