#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <string>

#include "chebbicg/banded.hpp"
#include "chebbicg/blas.hpp"
#include "chebbicg/dense.hpp"
#include "chebbicg/errors.hpp"
#include "chebbicg/sparse.hpp"

namespace chebbicg {

enum class InnerMode { direct, iterative };
enum class InnerAlgo { bicg, bicgstab };

struct InnerOptions {
  InnerMode mode = InnerMode::direct;
  InnerAlgo algo = InnerAlgo::bicg;
  std::size_t maxit = 0;  // 0: use 10*n
};

struct InnerResult {
  Vector z;
  double achieved = 0.0;  // relative residual actually reached
  std::size_t iterations = 0;
};

// Solves P z = r (and P^T z = r) for the fixed matrix handed to it, either
// by a factorization reused for both directions or by an unpreconditioned
// Krylov method run to a caller-supplied tolerance.
class InnerSolver {
 public:
  InnerSolver(SparseMatrix P, InnerOptions opts)
      : P_(std::move(P)), opts_(opts) {
    if (P_.nrows != P_.ncols)
      throw dimension_error("InnerSolver: matrix not square");
    if (opts_.maxit == 0) opts_.maxit = 10 * P_.nrows;
    if (opts_.mode == InnerMode::direct) {
      const auto [kl, ku] = sparse_bandwidth(P_);
      if (2 * kl + ku + 1 < P_.nrows)
        banded_ = std::make_unique<BandedLU>(P_, kl, ku);
      else
        dense_ = std::make_unique<DenseLU>(sparse_to_dense(P_));
    }
  }

  InnerMode mode() const { return opts_.mode; }
  std::size_t size() const { return P_.nrows; }
  std::size_t solve_count() const { return solves_; }
  const SparseMatrix& matrix() const { return P_; }

  InnerResult solve(const Vector& rhs, double tol, bool transpose = false) const {
    if (rhs.size() != P_.nrows)
      throw dimension_error("InnerSolver::solve: length mismatch");
    ++solves_;
    if (opts_.mode == InnerMode::direct) {
      InnerResult res;
      res.z = banded_ ? banded_->solve(rhs, transpose)
                      : dense_->solve(rhs, transpose);
      const double bn = nrm2(rhs);
      if (bn > 0.0) {
        Vector r = spmv(P_, res.z, transpose);
        axpy(-1.0, rhs, r);
        res.achieved = nrm2(r) / bn;
      }
      return res;
    }
    return opts_.algo == InnerAlgo::bicg ? bicg(rhs, tol, transpose)
                                         : bicgstab(rhs, tol, transpose);
  }

 private:
  InnerResult bicg(const Vector& b, double tol, bool transpose) const {
    const std::size_t n = P_.nrows;
    const double bnorm = nrm2(b);
    InnerResult res;
    res.z.assign(n, 0.0);
    if (bnorm == 0.0) return res;
    Vector r = b, rs = b, p = b, ps = b;
    double rho_old = dot(rs, r);
    double achieved = 1.0;
    for (std::size_t it = 1; it <= opts_.maxit; ++it) {
      const Vector q = spmv(P_, p, transpose);
      const Vector qs = spmv(P_, ps, !transpose);
      const double denom = dot(ps, q);
      if (denom == 0.0)
        throw inner_solve_error("inner bicg: breakdown (p~'Ap = 0)", achieved);
      const double alpha = rho_old / denom;
      axpy(alpha, p, res.z);
      axpy(-alpha, q, r);
      axpy(-alpha, qs, rs);
      achieved = nrm2(r) / bnorm;
      res.iterations = it;
      if (achieved <= tol) {
        res.achieved = achieved;
        return res;
      }
      const double rho = dot(rs, r);
      if (rho == 0.0)
        throw inner_solve_error("inner bicg: breakdown (r~'r = 0)", achieved);
      const double beta = rho / rho_old;
      rho_old = rho;
      for (std::size_t i = 0; i < n; ++i) {
        p[i] = r[i] + beta * p[i];
        ps[i] = rs[i] + beta * ps[i];
      }
    }
    throw inner_solve_error(
        "inner bicg: tolerance " + std::to_string(tol) + " not reached in " +
            std::to_string(opts_.maxit) + " iterations",
        achieved);
  }

  InnerResult bicgstab(const Vector& b, double tol, bool transpose) const {
    const std::size_t n = P_.nrows;
    const double bnorm = nrm2(b);
    InnerResult res;
    res.z.assign(n, 0.0);
    if (bnorm == 0.0) return res;
    Vector r = b, rhat = b;
    Vector p(n, 0.0), v(n, 0.0);
    double rho_old = 1.0, alpha = 1.0, omega = 1.0;
    double achieved = 1.0;
    for (std::size_t it = 1; it <= opts_.maxit; ++it) {
      const double rho = dot(rhat, r);
      if (rho == 0.0)
        throw inner_solve_error("inner bicgstab: breakdown (rhat'r = 0)",
                                achieved);
      const double beta = (rho / rho_old) * (alpha / omega);
      for (std::size_t i = 0; i < n; ++i)
        p[i] = r[i] + beta * (p[i] - omega * v[i]);
      v = spmv(P_, p, transpose);
      const double dv = dot(rhat, v);
      if (dv == 0.0)
        throw inner_solve_error("inner bicgstab: breakdown (rhat'v = 0)",
                                achieved);
      alpha = rho / dv;
      Vector s = r;
      axpy(-alpha, v, s);
      achieved = nrm2(s) / bnorm;
      res.iterations = it;
      if (achieved <= tol) {
        axpy(alpha, p, res.z);
        res.achieved = achieved;
        return res;
      }
      const Vector t = spmv(P_, s, transpose);
      const double tt = dot(t, t);
      if (tt == 0.0)
        throw inner_solve_error("inner bicgstab: breakdown (t = 0)", achieved);
      omega = dot(t, s) / tt;
      axpy(alpha, p, res.z);
      axpy(omega, s, res.z);
      r = s;
      axpy(-omega, t, r);
      achieved = nrm2(r) / bnorm;
      if (achieved <= tol) {
        res.achieved = achieved;
        return res;
      }
      rho_old = rho;
    }
    throw inner_solve_error(
        "inner bicgstab: tolerance " + std::to_string(tol) +
            " not reached in " + std::to_string(opts_.maxit) + " iterations",
        achieved);
  }

  SparseMatrix P_;
  InnerOptions opts_;
  std::unique_ptr<BandedLU> banded_;
  std::unique_ptr<DenseLU> dense_;
  mutable std::size_t solves_ = 0;
};

}  // namespace chebbicg
