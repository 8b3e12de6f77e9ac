#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "chebbicg/blas.hpp"
#include "chebbicg/chebyshev.hpp"
#include "chebbicg/companion.hpp"
#include "chebbicg/errors.hpp"
#include "chebbicg/inner.hpp"

namespace chebbicg {

// One record per inner solve driven through the preconditioner.
struct InnerResidualLog {
  struct Record {
    std::size_t index;         // running count over the owning run
    bool adjoint;              // true for apply_prec_T solves
    double requested_tol;
    double achieved_rel;       // relative residual of the P(sigma) solve
    std::size_t inner_iterations;
    Vector p;                  // extended inner residual, only if store_vectors
  };
  bool store_vectors = false;
  std::vector<Record> records;
};

// Shift-and-invert preconditioner for the companion pencil.  Based on the
// block factorization (K - sigma M) Pi = L_sigma U_sigma, where Pi cycles
// the blocks so that only one solve with P(sigma) is needed per
// application.  apply_prec computes (K - sigma M)^{-1} y, apply_prec_T its
// adjoint, each with exactly one inner solve.
class Preconditioner {
 public:
  Preconditioner(const CompanionOperator& op, double sigma, InnerOptions inner)
      : op_(&op), sigma_(sigma) {
    const double a = op.a();
    if (!(std::abs(sigma) < a))
      throw dimension_error("Preconditioner: sigma must lie strictly inside (-a, a)");
    tau_ = cheb_basis(sigma, op.d(), a);
    try {
      inner_ = std::make_unique<InnerSolver>(assemble_P_at(op.poly(), sigma),
                                             inner);
    } catch (const singular_error&) {
      throw singular_error("Preconditioner: P(sigma) singular at sigma = " +
                           std::to_string(sigma));
    }
  }

  const CompanionOperator& op() const { return *op_; }
  double sigma() const { return sigma_; }
  const InnerSolver& inner() const { return *inner_; }
  void set_log(InnerResidualLog* log) { log_ = log; }

  // Last block row of L_sigma as weights over P_l: column j carries
  // P_{j+1} for j < d-3, P_{d-2} - P_d at j = d-3, and
  // P_{d-1} + (2 sigma / a) P_d at j = d-2.
  std::vector<std::pair<double, const SparseMatrix*>> l_row_weight(
      std::size_t j) const {
    const auto& P = op_->poly().P;
    const std::size_t d = op_->d();
    assert(j + 1 < d);
    if (d >= 3 && j == d - 3) return {{1.0, &P[d - 2]}, {-1.0, &P[d]}};
    if (j == d - 2)
      return {{1.0, &P[d - 1]}, {2.0 * sigma_ / op_->a(), &P[d]}};
    return {{1.0, &P[j + 1]}};
  }

  // L_sigma^{-1} y: forward substitution; the last block costs one inner
  // solve with P(sigma).
  ExtendedVector apply_Linv(const ExtendedVector& y, double tol) const {
    check_dim(y, "apply_Linv");
    const std::size_t n = op_->n(), d = op_->d();
    const double t = 2.0 * sigma_ / op_->a();
    ExtendedVector out(y.size(), 0.0);
    std::copy(y.begin(), y.begin() + n, out.begin());
    for (std::size_t k = 1; k + 1 < d; ++k) {
      auto o = block(out, k, n);
      auto yk = block(y, k, n);
      auto prev = block(out, k - 1, n);
      for (std::size_t i = 0; i < n; ++i) o[i] = yk[i] + t * prev[i];
      if (k >= 2) axpy(-1.0, block(out, k - 2, n), o);
    }
    Vector g(block(y, d - 1, n).begin(), block(y, d - 1, n).end());
    for (std::size_t j = 0; j + 1 < d; ++j)
      for (const auto& [w, P] : l_row_weight(j))
        spmv(*P, block(out, j, n), std::span<double>(g), false, -w, true);
    const InnerResult res = inner_->solve(g, tol, false);
    std::copy(res.z.begin(), res.z.end(), out.end() - n);
    record(res, g, tol, false);
    return out;
  }

  // U_sigma^{-1} y: adds tau_{k+1}(sigma) times the last block to block k.
  ExtendedVector apply_Uinv(const ExtendedVector& y) const {
    check_dim(y, "apply_Uinv");
    const std::size_t n = op_->n(), d = op_->d();
    ExtendedVector out(y);
    auto last = block(y, d - 1, n);
    for (std::size_t k = 0; k + 1 < d; ++k)
      axpy(tau_[k + 1], last, block(out, k, n));
    return out;
  }

  // (K - sigma M)^{-1} y = Pi U^{-1} L^{-1} y
  ExtendedVector apply_prec(const ExtendedVector& y, double tol) const {
    const std::size_t n = op_->n();
    const ExtendedVector z = apply_Uinv(apply_Linv(y, tol));
    ExtendedVector out(z.size());
    std::copy(z.end() - n, z.end(), out.begin());
    std::copy(z.begin(), z.end() - n, out.begin() + n);
    return out;
  }

  // (K - sigma M)^{-T} y = L^{-T} U^{-T} Pi^T y
  ExtendedVector apply_prec_T(const ExtendedVector& y, double tol) const {
    check_dim(y, "apply_prec_T");
    const std::size_t n = op_->n(), d = op_->d();
    // w = Pi^T y
    ExtendedVector w(y.size());
    std::copy(y.begin() + n, y.end(), w.begin());
    std::copy(y.begin(), y.begin() + n, w.end() - n);
    // z = U^{-T} w: last block accumulates tau-weighted leading blocks
    ExtendedVector z(w);
    auto zlast = block(z, d - 1, n);
    for (std::size_t k = 0; k + 1 < d; ++k)
      axpy(tau_[k + 1], block(w, k, n), zlast);
    // x = L^{-T} z: backward substitution, one adjoint inner solve
    ExtendedVector x(z.size(), 0.0);
    const InnerResult res =
        inner_->solve(Vector(zlast.begin(), zlast.end()), tol, true);
    std::copy(res.z.begin(), res.z.end(), x.end() - n);
    record(res, Vector(zlast.begin(), zlast.end()), tol, true);
    const double t = 2.0 * sigma_ / op_->a();
    auto xlast = block(x, d - 1, n);
    for (std::size_t jj = d - 1; jj-- > 0;) {
      auto xj = block(x, jj, n);
      std::copy(block(z, jj, n).begin(), block(z, jj, n).end(), xj.begin());
      for (const auto& [wgt, P] : l_row_weight(jj))
        spmv(*P, xlast, xj, true, -wgt, true);
      if (jj + 2 < d) axpy(t, block(x, jj + 1, n), xj);
      if (jj + 3 < d) axpy(-1.0, block(x, jj + 2, n), xj);
    }
    return x;
  }

 private:
  void check_dim(const ExtendedVector& v, const char* who) const {
    if (v.size() != op_->dim())
      throw dimension_error(std::string(who) + ": expected length d*n");
  }

  // The defect of an inexact application is confined to one block of
  // p = (K - sigma M) z - y: the inner residual q = P(sigma) z_d - g lands
  // in the last block for apply_prec and (as Pi moves it) in the first
  // block for apply_prec_T.
  void record(const InnerResult& res, const Vector& g, double tol,
              bool adjoint) const {
    if (log_ == nullptr) return;
    InnerResidualLog::Record rec;
    rec.index = log_->records.size();
    rec.adjoint = adjoint;
    rec.requested_tol = tol;
    rec.achieved_rel = res.achieved;
    rec.inner_iterations = res.iterations;
    if (log_->store_vectors) {
      const std::size_t n = op_->n();
      Vector q = spmv(inner_->matrix(), res.z, adjoint);
      axpy(-1.0, g, q);
      rec.p.assign(op_->dim(), 0.0);
      if (!adjoint)
        std::copy(q.begin(), q.end(), rec.p.end() - n);
      else
        std::copy(q.begin(), q.end(), rec.p.begin());
    }
    log_->records.push_back(std::move(rec));
  }

  const CompanionOperator* op_;
  double sigma_;
  Vector tau_;
  std::unique_ptr<InnerSolver> inner_;
  InnerResidualLog* log_ = nullptr;
};

}  // namespace chebbicg
