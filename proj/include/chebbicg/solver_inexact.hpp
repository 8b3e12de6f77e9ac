#pragma once

#include <algorithm>
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
#include "chebbicg/dense.hpp"
#include "chebbicg/errors.hpp"
#include "chebbicg/precond.hpp"
#include "chebbicg/report.hpp"
#include "chebbicg/solver_exact.hpp"
#include "chebbicg/sparse.hpp"

namespace chebbicg {

// Solution of (I_j + (-mu+sigma) T_j) y = beta e_1 by a progressive Givens
// QR sweep of the shifted tridiagonal, together with the residual
// bookkeeping quantities it yields for free.
struct TridiagSolveResult {
  Vector y;
  // Delta_i = beta |s_1 ... s_{i-1}|, i = 1..j.  Equals the norm of the
  // rotated right-hand side entry, and |r~_{i,i}| |(y_i)_i|.
  Vector Delta;
  // Delta_{j+1}, from the rotation that would eliminate the extended
  // subdiagonal entry (-mu+sigma) bhat_j.
  double Delta_next = std::numeric_limits<double>::quiet_NaN();
  // |r~_{i,i}|: magnitude of the i-th diagonal before rotation i, i.e. the
  // last diagonal entry of the i-step QR factor.
  Vector rdiag_step;
  Vector sines;  // s_1..s_{j-1}, plus s_j when bhat_j is supplied
  Vector cosines;
};

// alphas: ahat_1..ahat_j; betas: bhat_1..bhat_j (the last entry is only
// used for the extended rotation; pass j-1 entries to skip it);
// gammas: ghat_1..ghat_{j-1}; beta_rhs: ||btilde||.
inline TridiagSolveResult shifted_tridiag_solve(const Vector& alphas,
                                                const Vector& betas,
                                                const Vector& gammas,
                                                double mu, double sigma,
                                                double beta_rhs) {
  const std::size_t j = alphas.size();
  if (j == 0) throw dimension_error("shifted_tridiag_solve: empty tridiagonal");
  if (betas.size() + 1 < j || gammas.size() + 1 < j)
    throw dimension_error("shifted_tridiag_solve: band length mismatch");
  const double c_mu = -mu + sigma;

  TridiagSolveResult out;
  out.Delta.resize(j);
  out.rdiag_step.resize(j);
  Vector rdiag(j), super1(j, 0.0), super2(j, 0.0), g(j, 0.0);
  g[0] = beta_rhs;
  double prod_s = 1.0;

  double dd = 1.0 + c_mu * alphas[0];          // active diagonal
  double ee = j > 1 ? c_mu * gammas[0] : 0.0;  // active superdiagonal
  for (std::size_t i = 0; i < j; ++i) {
    out.rdiag_step[i] = std::abs(dd);
    out.Delta[i] = beta_rhs * prod_s;
    if (i + 1 < j) {
      const double sub = c_mu * betas[i];
      const Givens G = givens(dd, sub);
      out.cosines.push_back(G.c);
      out.sines.push_back(G.s);
      prod_s *= std::abs(G.s);
      rdiag[i] = G.r;
      const double d_next = 1.0 + c_mu * alphas[i + 1];
      super1[i] = G.c * ee + G.s * d_next;
      dd = -G.s * ee + G.c * d_next;
      if (i + 2 < j) {
        const double e_next = c_mu * gammas[i + 1];
        super2[i] = G.s * e_next;
        ee = G.c * e_next;
      } else {
        ee = 0.0;
      }
      g[i + 1] = -G.s * g[i];
      g[i] *= G.c;
    } else {
      rdiag[i] = dd;
    }
  }
  if (betas.size() >= j) {
    const Givens G = givens(dd, c_mu * betas[j - 1]);
    out.cosines.push_back(G.c);
    out.sines.push_back(G.s);
    out.Delta_next = beta_rhs * prod_s * std::abs(G.s);
  }

  out.y.assign(j, 0.0);
  for (std::size_t ii = j; ii-- > 0;) {
    if (rdiag[ii] == 0.0)
      throw singular_error("shifted_tridiag_solve: singular at mu = " +
                           std::to_string(mu));
    double v = g[ii];
    if (ii + 1 < j) v -= super1[ii] * out.y[ii + 1];
    if (ii + 2 < j) v -= super2[ii] * out.y[ii + 2];
    out.y[ii] = v / rdiag[ii];
  }
  return out;
}

// Inner tolerance that keeps the residual gap of the shifted system near
// epsilon: tol_i = epsilon / |(y_{i-1})_{i-1}| for the farthest shift.
inline double adaptive_tol(double epsilon, double y_prev_last) {
  const double raw = epsilon / std::abs(y_prev_last);
  return std::clamp(raw, 1e-14, 0.5);
}

// Sufficient per-iteration bound on ||p_i|| so that the residual gap after
// j_budget iterations stays below epsilon.
inline double theorem_bound(double epsilon, std::size_t j_budget,
                            double sigma_min_Tj, double Delta_i) {
  return (1.0 / static_cast<double>(j_budget)) * (sigma_min_Tj / Delta_i) *
         epsilon;
}

// r_in = btilde - (K - mu M) uhat and the gap delta = ||r_in - r_ex||.
inline std::pair<Vector, double> residual_gap(const CompanionOperator& op,
                                              const ExtendedVector& btilde,
                                              double mu,
                                              const ExtendedVector& uhat,
                                              const ExtendedVector& r_ex) {
  Vector r_in = op.apply_pencil(uhat, mu);
  for (std::size_t i = 0; i < r_in.size(); ++i) r_in[i] = btilde[i] - r_in[i];
  Vector diff = r_in;
  axpy(-1.0, r_ex, diff);
  return {std::move(r_in), nrm2(diff)};
}

struct InjectionContext {
  std::size_t iteration;  // 1-based
  double Delta_i;         // for the farthest shift, computable at step start
  double beta;            // ||btilde||
  const Vector& v;        // current Lanczos vector
};

struct InexactIterState {
  std::size_t iteration;
  double beta0;                       // bhat_0 = ||btilde||
  double gamma0;                      // ghat_0
  const std::vector<double>& alphas;  // ahat_1..ahat_i
  const std::vector<double>& betas;   // bhat_1..bhat_i
  const std::vector<double>& gammas;  // ghat_1..ghat_i
  const std::vector<Vector>& Zhat;    // zhat_1..zhat_i
  const Vector& v;                    // v_i
  const Vector& w;                    // w_i
  const Vector& rhat;                 // rhat_i
  const Vector& shat;                 // shat_i
  double inner_tol;                   // tol_i used this iteration
};

struct InexactOptions {
  double tol = 1e-8;
  std::size_t maxit = 300;
  double epsilon = 1e-12;
  TolPolicy policy = TolPolicy::adaptive;
  double fixed_tol = 1e-6;
  // With diagnostics on, true residuals are evaluated for every shift at
  // every iteration.
  bool diagnostics = false;
  std::function<void(const InexactIterState&)> observer;
  // Optional perturbation added to the preconditioner input, so that the
  // inner defect p_i equals the returned vector (up to the exactness of
  // the inner solve).  Used to exercise the residual-gap bound.
  std::function<Vector(const InjectionContext&)> inject;
  InnerResidualLog* log = nullptr;
};

// Inexact shift-and-invert two-sided Lanczos for the companion pencil.
// Builds the tridiagonal T and the (unorthogonal) basis Zhat with one
// flexible preconditioner application per side and iteration; solutions
// for every shift are recovered through shifted tridiagonal solves.
inline InexactReport solve_inexact(const CompanionOperator& op,
                                   Preconditioner& prec, const Vector& b,
                                   const ShiftSet& shifts,
                                   const InexactOptions& opts,
                                   TrueMatrixEval eval_A = nullptr,
                                   const ExtendedVector* ctilde = nullptr) {
  if (b.size() != op.n())
    throw dimension_error("solve_inexact: b length mismatch");
  const std::size_t k = shifts.mus.size();
  const std::size_t dn = op.dim();
  const double bnorm = nrm2(b);
  if (bnorm == 0.0) throw dimension_error("solve_inexact: b is zero");

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
  InexactReport rep;
  rep.epsilon = opts.epsilon;
  rep.shifts.resize(k);
  for (std::size_t l = 0; l < k; ++l) rep.shifts[l].mu = shifts.mus[l];

  InnerResidualLog local_log;
  InnerResidualLog* log = opts.log != nullptr ? opts.log : &local_log;
  prec.set_log(log);

  const ExtendedVector btilde = op.build_btilde(b);
  const double beta0 = nrm2(btilde);  // equals ||b||
  Vector ct = ctilde != nullptr ? *ctilde : btilde;
  if (ct.size() != dn)
    throw dimension_error("solve_inexact: ctilde length mismatch");
  const double gamma0 = dot(ct, btilde) / beta0;
  if (gamma0 == 0.0)
    throw breakdown_error("solve_inexact: ctilde'btilde = 0");

  // T entries and basis
  std::vector<double> alphas, betas, gammas;
  std::vector<Vector> Zhat;
  std::vector<Vector> Zx;  // first n entries of each zhat
  Vector rhat = btilde, shat = ct;
  Vector v_prev(dn, 0.0), w_prev(dn, 0.0);
  double beta_prev = beta0, gamma_prev = gamma0;

  std::vector<char> broken(k, 0);
  // cache from the previous farthest-shift tridiagonal sweep
  double y_last_cache = nan, Delta_next_cache = nan, sigma_min_cache = 1.0;

  const auto t0 = std::chrono::steady_clock::now();
  const auto elapsed = [&t0] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  };

  const auto eval_u = [&](const Vector& y) {
    Vector u(dn, 0.0);
    for (std::size_t c = 0; c < y.size(); ++c) axpy(y[c], Zhat[c], u);
    return u;
  };
  const auto eval_x = [&](std::size_t l) {
    const auto ts = shifted_tridiag_solve(alphas, betas, gammas,
                                          shifts.mus[l], shifts.sigma, beta0);
    return op.extract_x(eval_u(ts.y));
  };
  // same accumulation as extract_x(eval_u(y)) restricted to the first block
  const auto eval_x_blocks = [&](const Vector& y) {
    Vector x(op.n(), 0.0);
    for (std::size_t c = 0; c < y.size(); ++c) axpy(y[c], Zx[c], x);
    return x;
  };

  const auto finalize = [&](Termination reason, const std::string& msg) {
    rep.reason = reason;
    rep.message = msg;
    rep.inner_solve_count = log->records.size();
    for (std::size_t l = 0; l < k; ++l) {
      auto& sh = rep.shifts[l];
      sh.broke_down = broken[l] != 0;
      if (!sh.broke_down && !alphas.empty()) {
        try {
          sh.x = eval_x(l);
          sh.final_true_relres = true_relres(l, sh.x);
          sh.converged = sh.final_true_relres <= opts.tol;
        } catch (const singular_error&) {
          sh.broke_down = true;
        }
      }
      const auto& hist =
          std::any_of(sh.relres_true.begin(), sh.relres_true.end(),
                      [](double x) { return !std::isnan(x); })
              ? sh.relres_true
              : sh.relres_recursive;
      for (std::size_t i = 0; i < hist.size(); ++i)
        if (!std::isnan(hist[i]) && hist[i] <= opts.tol) {
          sh.iterations_to_tol = static_cast<long>(i) + 1;
          break;
        }
    }
    prec.set_log(nullptr);
    return rep;
  };

  for (std::size_t i = 1; i <= opts.maxit; ++i) {
    if (beta_prev == 0.0 || !std::isfinite(beta_prev))
      return finalize(Termination::breakdown,
                      "breakdown: ||rhat|| = " + std::to_string(beta_prev) +
                          " at iteration " + std::to_string(i));
    if (gamma_prev == 0.0 || !std::isfinite(gamma_prev))
      return finalize(Termination::breakdown,
                      "breakdown: shat'rhat = 0 at iteration " +
                          std::to_string(i));
    Vector v = rhat;
    scal(1.0 / beta_prev, v);
    Vector w = shat;
    scal(1.0 / gamma_prev, w);

    // inner tolerance for this iteration
    double tol_i;
    const double Delta_i = i == 1 ? beta0 : Delta_next_cache;
    switch (opts.policy) {
      case TolPolicy::fixed:
        tol_i = opts.fixed_tol;
        break;
      case TolPolicy::theorem:
        tol_i = i == 1 || !std::isfinite(Delta_i)
                    ? 1e-14
                    : std::clamp(theorem_bound(opts.epsilon, opts.maxit,
                                               sigma_min_cache, Delta_i),
                                 1e-14, 0.5);
        break;
      default:
        tol_i = i == 1 || !std::isfinite(y_last_cache)
                    ? 1e-14
                    : adaptive_tol(opts.epsilon, y_last_cache);
    }
    rep.inner_tols.push_back(tol_i);

    Vector v_input = v;
    if (opts.inject) {
      const InjectionContext ctx{i, Delta_i, beta0, v};
      const Vector q = opts.inject(ctx);
      if (q.size() != dn)
        throw dimension_error("solve_inexact: injected vector length mismatch");
      axpy(1.0, q, v_input);
    }

    const std::size_t log_mark = log->records.size();
    Vector zhat = prec.apply_prec(v_input, tol_i);
    double achieved = nan;
    for (std::size_t rix = log_mark; rix < log->records.size(); ++rix)
      if (!log->records[rix].adjoint) achieved = log->records[rix].achieved_rel;
    rep.inner_achieved.push_back(achieved);
    Vector xhat = prec.apply_prec_T(op.apply_M(w, true), tol_i);

    const Vector Mz = op.apply_M(zhat);
    const double alpha = dot(w, Mz);

    Vector rhat_new = Mz;
    axpy(-alpha, v, rhat_new);
    if (i >= 2) axpy(-gamma_prev, v_prev, rhat_new);
    Vector shat_new = std::move(xhat);
    axpy(-alpha, w, shat_new);
    if (i >= 2) axpy(-beta_prev, w_prev, shat_new);

    alphas.push_back(alpha);
    Zhat.push_back(std::move(zhat));
    // first blocks only, so the per-iteration true check stays O(i n)
    Zx.push_back(Vector(Zhat.back().begin(), Zhat.back().begin() + op.n()));
    const double beta_i = nrm2(rhat_new);
    betas.push_back(beta_i);
    const double gamma_i = beta_i > 0.0 ? dot(shat_new, rhat_new) / beta_i : 0.0;
    gammas.push_back(gamma_i);

    rep.iterations = i;

    if (opts.observer) {
      const InexactIterState st{i,    beta0, gamma0,   alphas,   betas, gammas,
                                Zhat, v,     w,        rhat_new, shat_new,
                                tol_i};
      opts.observer(st);
    }

    // per-shift recursive residuals and the farthest-shift true check
    std::size_t kf = k;
    for (std::size_t l = k; l-- > 0;)
      if (!broken[l]) {
        kf = l;
        break;
      }
    if (kf == k) return finalize(Termination::breakdown, "all shifts broke down");

    bool check_all = false;
    for (std::size_t l = 0; l < k; ++l) {
      auto& sh = rep.shifts[l];
      if (broken[l]) {
        sh.relres_recursive.push_back(nan);
        sh.relres_true.push_back(nan);
        continue;
      }
      try {
        const auto ts = shifted_tridiag_solve(alphas, betas, gammas,
                                              shifts.mus[l], shifts.sigma,
                                              beta0);
        // ||r_i^ex|| = |t_{i+1,i}| / |r~_{i,i}| * Delta_i
        const double t_sub = std::abs((-shifts.mus[l] + shifts.sigma) * beta_i);
        const double rel =
            t_sub / ts.rdiag_step.back() * ts.Delta.back() / beta0;
        sh.relres_recursive.push_back(rel);
        sh.relres_true.push_back(nan);
        if (l == kf) {
          y_last_cache = ts.y.back();
          Delta_next_cache = ts.Delta_next;
          if (opts.policy == TolPolicy::theorem) {
            DenseMatrix T(i, i);
            const double c_mu = -shifts.mus[l] + shifts.sigma;
            for (std::size_t q = 0; q < i; ++q) {
              T(q, q) = 1.0 + c_mu * alphas[q];
              if (q + 1 < i) {
                T(q + 1, q) = c_mu * betas[q];
                T(q, q + 1) = c_mu * gammas[q];
              }
            }
            sigma_min_cache = smallest_singular_value(T);
          }
          sh.relres_true.back() = true_relres(l, eval_x_blocks(ts.y));
          check_all = sh.relres_true.back() <= opts.tol;
        } else if (opts.diagnostics) {
          sh.relres_true.back() = true_relres(l, eval_x_blocks(ts.y));
        }
      } catch (const singular_error&) {
        broken[l] = 1;
        sh.relres_recursive.push_back(nan);
        sh.relres_true.push_back(nan);
      }
    }
    rep.cpu_seconds.push_back(elapsed());

    if (check_all) {
      bool all_ok = true;
      for (std::size_t l = 0; l < k && all_ok; ++l) {
        if (broken[l]) {
          all_ok = false;
          break;
        }
        if (std::isnan(rep.shifts[l].relres_true.back()))
          rep.shifts[l].relres_true.back() = true_relres(l, eval_x(l));
        all_ok = rep.shifts[l].relres_true.back() <= opts.tol;
      }
      if (all_ok) return finalize(Termination::converged, "");
    }

    v_prev = std::move(v);
    w_prev = std::move(w);
    rhat = std::move(rhat_new);
    shat = std::move(shat_new);
    beta_prev = beta_i;
    gamma_prev = gamma_i;
  }
  return finalize(Termination::max_iterations,
                  "tolerance not reached within maxit");
}

}  // namespace chebbicg
