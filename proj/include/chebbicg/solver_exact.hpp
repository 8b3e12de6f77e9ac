#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "chebbicg/blas.hpp"
#include "chebbicg/companion.hpp"
#include "chebbicg/errors.hpp"
#include "chebbicg/precond.hpp"
#include "chebbicg/report.hpp"
#include "chebbicg/sparse.hpp"

namespace chebbicg {

// zeta recurrence for the shifted residual polynomials:
// zeta_{i+1} = (1 - alpha_i omega - beta_i alpha_i / alpha_{i-1}) zeta_i
//              + (beta_i alpha_i / alpha_{i-1}) zeta_{i-1}
inline double zeta_update(double zeta_cur, double zeta_prev, double alpha,
                          double beta, double alpha_old, double omega) {
  const double ba = beta * alpha / alpha_old;
  return (1.0 - alpha * omega - ba) * zeta_cur + ba * zeta_prev;
}

// Coefficients of the shifted system recurrences:
// alpha~_i = -alpha_i zeta_i / zeta_{i+1},  beta~_i = (zeta_{i-1}/zeta_i)^2 beta_i
inline std::pair<double, double> shifted_coeffs(double alpha, double beta,
                                                double zeta_prev,
                                                double zeta_cur,
                                                double zeta_new) {
  return {-alpha * zeta_cur / zeta_new,
          (zeta_prev / zeta_cur) * (zeta_prev / zeta_cur) * beta};
}

// Maps the shifted-system iterate u~ back to an approximation of x(mu).
// Right preconditioning: x~ = first block of omega (K - sigma M)^{-1} u~;
// left preconditioning (sigma = 0): x~ = first block of omega u~.
inline Vector post_process(const CompanionOperator& op,
                           const Preconditioner& prec, Side side, double mu,
                           const ExtendedVector& ut, double inner_tol = 1e-14) {
  const double omega = 1.0 / (mu - prec.sigma());
  if (side == Side::right) {
    ExtendedVector v3 = prec.apply_prec(ut, inner_tol);
    scal(omega, std::span<double>(v3));
    return op.extract_x(v3);
  }
  Vector x = op.extract_x(ut);
  scal(omega, std::span<double>(x));
  return x;
}

struct ExactIterState {
  std::size_t iteration;                 // 1-based count just completed
  const Vector& r_prev;                  // seed residual entering the step
  const Vector& r;                       // seed residual after the step
  const Vector& s;                       // adjoint residual after the step
  const Vector& u_sd;                    // seed iterate
  double alpha, beta;
  const std::vector<double>& zeta;       // per shift, after the step
  const std::vector<Vector>& ut;         // shifted iterates, after the step
  const std::vector<char>& shift_broken;
};

struct ExactOptions {
  double tol = 1e-10;
  std::size_t maxit = 300;
  Side side = Side::right;
  // With diagnostics on, true residuals are evaluated for every shift at
  // every iteration instead of only for the farthest shift.
  bool diagnostics = false;
  std::function<void(const ExactIterState&)> observer;
};

using TrueMatrixEval = std::function<SparseMatrix(double)>;

// Multishift BiCG on the shift-and-invert preconditioned companion pencil
// (Algorithm: preconditioned BiCG for the seed system at sigma, with the
// shifted systems advanced by the zeta recurrences).  The preconditioner
// must use direct inner solves.  eval_A supplies A(mu) for true residual
// checks; when absent, the interpolant P(mu) is used instead.
inline SolveReport solve_exact(const CompanionOperator& op,
                               const Preconditioner& prec, const Vector& b,
                               const ShiftSet& shifts, const ExactOptions& opts,
                               TrueMatrixEval eval_A = nullptr,
                               const ExtendedVector* ctilde = nullptr) {
  if (prec.inner().mode() != InnerMode::direct)
    throw dimension_error("solve_exact: requires a direct-mode preconditioner");
  if (opts.side == Side::left && prec.sigma() != 0.0)
    throw dimension_error("solve_exact: left preconditioning requires sigma = 0");
  if (b.size() != op.n()) throw dimension_error("solve_exact: b length mismatch");
  const std::size_t k = shifts.mus.size();
  const double bnorm = nrm2(b);
  if (bnorm == 0.0) throw dimension_error("solve_exact: b is zero");

  // residual matrices A(mu_l) (or the interpolant) for the true checks
  std::vector<SparseMatrix> Amu(k);
  for (std::size_t l = 0; l < k; ++l)
    Amu[l] = eval_A ? eval_A(shifts.mus[l])
                    : assemble_P_at(op.poly(), shifts.mus[l]);
  const auto true_relres = [&](std::size_t l, const Vector& x) {
    Vector r = spmv(Amu[l], x);
    axpy(-1.0, b, r);
    return nrm2(r) / bnorm;
  };

  const double nan = std::numeric_limits<double>::quiet_NaN();
  SolveReport rep;
  rep.shifts.resize(k);
  for (std::size_t l = 0; l < k; ++l) rep.shifts[l].mu = shifts.mus[l];

  const ExtendedVector btilde = op.build_btilde(b);
  const double exact_tol = 1e-14;

  // seed system state
  Vector r = opts.side == Side::right ? btilde
                                      : prec.apply_prec(btilde, exact_tol);
  const double r0norm = nrm2(r);
  Vector s = ctilde != nullptr ? *ctilde : btilde;
  if (s.size() != op.dim())
    throw dimension_error("solve_exact: ctilde length mismatch");
  Vector vstar(op.dim(), 0.0), wstar(op.dim(), 0.0), u_sd(op.dim(), 0.0);
  double rho_old = 1.0, alpha_old = 1.0;

  // shifted system state
  std::vector<double> omega(k), zeta_prev(k, 1.0), zeta_cur(k, 1.0);
  std::vector<Vector> vt(k, Vector(op.dim(), 0.0));
  std::vector<Vector> ut(k, Vector(op.dim(), 0.0));
  std::vector<char> broken(k, 0);
  for (std::size_t l = 0; l < k; ++l)
    omega[l] = 1.0 / (shifts.mus[l] - shifts.sigma);

  ResidualHistoryStore history;
  history.push(r);

  const auto t0 = std::chrono::steady_clock::now();
  const auto elapsed = [&t0] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  };

  const auto finalize = [&](Termination reason, const std::string& msg) {
    rep.reason = reason;
    rep.message = msg;
    rep.inner_solve_count = prec.inner().solve_count();
    for (std::size_t l = 0; l < k; ++l) {
      auto& sh = rep.shifts[l];
      sh.broke_down = broken[l] != 0;
      if (!sh.broke_down) {
        sh.x = post_process(op, prec, opts.side, shifts.mus[l], ut[l]);
        sh.final_true_relres = true_relres(l, sh.x);
        sh.converged = sh.final_true_relres <= opts.tol;
      }
      const auto& hist =
          std::any_of(sh.relres_true.begin(), sh.relres_true.end(),
                      [](double v) { return !std::isnan(v); })
              ? sh.relres_true
              : sh.relres_recursive;
      for (std::size_t i = 0; i < hist.size(); ++i)
        if (!std::isnan(hist[i]) && hist[i] <= opts.tol) {
          sh.iterations_to_tol = static_cast<long>(i) + 1;
          break;
        }
    }
    return rep;
  };

  for (std::size_t i = 0; i < opts.maxit; ++i) {
    const double rho = dot(r, s);
    if (!std::isfinite(rho) || std::abs(rho) <= 1e-14 * nrm2(r) * nrm2(s))
      return finalize(Termination::breakdown,
                      "Lanczos breakdown: s'r = " + std::to_string(rho) +
                          " at iteration " + std::to_string(i + 1));
    const double beta = -rho / rho_old;
    for (std::size_t j = 0; j < op.dim(); ++j) {
      vstar[j] = r[j] - beta * vstar[j];
      wstar[j] = s[j] - beta * wstar[j];
    }
    const ExtendedVector vhat1 =
        opts.side == Side::right
            ? op.apply_M(prec.apply_prec(vstar, exact_tol))
            : prec.apply_prec(op.apply_M(vstar), exact_tol);
    const double denom = dot(wstar, vhat1);
    if (!std::isfinite(denom) || denom == 0.0)
      return finalize(Termination::breakdown,
                      "pivot breakdown: w*'v = " + std::to_string(denom) +
                          " at iteration " + std::to_string(i + 1));
    const double alpha = rho / denom;
    const ExtendedVector vhat2 =
        opts.side == Side::right
            ? prec.apply_prec_T(op.apply_M(wstar, true), exact_tol)
            : op.apply_M(prec.apply_prec_T(wstar, exact_tol), true);

    const Vector& r_i = history.col(i);  // residual entering this step
    Vector r_new = r;
    axpy(-alpha, vhat1, r_new);
    Vector s_new = s;
    axpy(-alpha, vhat2, s_new);
    axpy(alpha, vstar, u_sd);

    const double rnorm_new = nrm2(r_new);
    for (std::size_t l = 0; l < k; ++l) {
      if (broken[l]) {
        rep.shifts[l].relres_recursive.push_back(nan);
        rep.shifts[l].relres_true.push_back(nan);
        continue;
      }
      const double zeta_new = zeta_update(zeta_cur[l], zeta_prev[l], alpha,
                                          beta, alpha_old, omega[l]);
      if (!std::isfinite(zeta_new) || zeta_new == 0.0) {
        broken[l] = 1;
        rep.shifts[l].relres_recursive.push_back(nan);
        rep.shifts[l].relres_true.push_back(nan);
        continue;
      }
      const auto [alpha_t, beta_t] =
          shifted_coeffs(alpha, beta, zeta_prev[l], zeta_cur[l], zeta_new);
      for (std::size_t j = 0; j < op.dim(); ++j) {
        vt[l][j] = r_i[j] / zeta_cur[l] - beta_t * vt[l][j];
        ut[l][j] += alpha_t * vt[l][j];
      }
      zeta_prev[l] = zeta_cur[l];
      zeta_cur[l] = zeta_new;
      rep.shifts[l].relres_recursive.push_back(rnorm_new /
                                               (std::abs(zeta_new) * r0norm));
      rep.shifts[l].relres_true.push_back(nan);
    }

    rho_old = rho;
    alpha_old = alpha;
    r = std::move(r_new);
    s = std::move(s_new);
    history.push(r);
    rep.iterations = i + 1;

    if (opts.observer) {
      const ExactIterState st{i + 1, r_i,   r,        s,  u_sd,
                              alpha, beta,  zeta_cur, ut, broken};
      opts.observer(st);
    }

    // farthest unbroken shift drives the convergence check
    std::size_t kf = k;
    for (std::size_t l = k; l-- > 0;)
      if (!broken[l]) {
        kf = l;
        break;
      }
    if (kf == k)
      return finalize(Termination::breakdown, "all shifts broke down");

    bool check_all = false;
    if (opts.diagnostics) {
      for (std::size_t l = 0; l < k; ++l)
        if (!broken[l]) {
          const Vector x =
              post_process(op, prec, opts.side, shifts.mus[l], ut[l]);
          rep.shifts[l].relres_true.back() = true_relres(l, x);
        }
      check_all = rep.shifts[kf].relres_true.back() <= opts.tol;
    } else {
      const Vector xk =
          post_process(op, prec, opts.side, shifts.mus[kf], ut[kf]);
      rep.shifts[kf].relres_true.back() = true_relres(kf, xk);
      check_all = rep.shifts[kf].relres_true.back() <= opts.tol;
    }
    rep.cpu_seconds.push_back(elapsed());

    if (check_all) {
      bool all_ok = true;
      for (std::size_t l = 0; l < k && all_ok; ++l) {
        if (broken[l]) {
          all_ok = false;
          break;
        }
        if (std::isnan(rep.shifts[l].relres_true.back())) {
          const Vector x =
              post_process(op, prec, opts.side, shifts.mus[l], ut[l]);
          rep.shifts[l].relres_true.back() = true_relres(l, x);
        }
        all_ok = rep.shifts[l].relres_true.back() <= opts.tol;
      }
      if (all_ok) return finalize(Termination::converged, "");
    }
  }
  return finalize(Termination::max_iterations,
                  "tolerance not reached within maxit");
}

}  // namespace chebbicg
