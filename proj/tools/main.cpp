// chebbicg command line driver.
//
//   chebbicg solve        approximate x(mu) for a list of parameter values
//   chebbicg interp-check report the Chebyshev interpolation error of A(mu)
//   chebbicg verify       run the built-in self checks
//
// `solve` writes residuals.csv, solutions.mtx and report.json into --out.
// Exit codes: 0 all shifts converged, 2 partial or no convergence, 1 error.

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "chebbicg/chebbicg.hpp"

namespace {

using nlohmann::json;
using namespace chebbicg;

struct SolveConfig {
  std::string problem = "time_delay";
  std::string manifest;
  std::size_t n = 200;
  std::size_t nx = 20, ny = 20;
  std::uint64_t seed = 1;
  std::size_t d = 17;
  double a = 0.0;  // 0 keeps the problem default
  double sigma = 0.0;
  std::vector<double> mus;
  std::string mu_linspace;  // lo:hi:count
  double tol = 1e-10;
  std::size_t maxit = 300;
  std::string solver = "exact";
  std::string side = "right";
  std::string inner = "direct";
  std::string inner_algo = "bicg";
  std::size_t inner_maxit = 0;
  double epsilon = 1e-12;
  std::string tol_policy = "adaptive";
  double fixed_tol = 1e-6;
  std::string out_dir;
  bool diagnostics = false;
  bool quiet = false;
};

ParamProblem make_problem(const SolveConfig& cfg) {
  if (!cfg.manifest.empty()) return load_problem_manifest(cfg.manifest);
  if (cfg.problem == "time_delay") return gen_time_delay(cfg.n, cfg.seed);
  if (cfg.problem == "helmholtz") return gen_helmholtz_fd(cfg.nx, cfg.ny);
  throw error("unknown problem '" + cfg.problem +
              "' (expected time_delay, helmholtz, or --manifest FILE)");
}

std::vector<double> parse_mus(const SolveConfig& cfg) {
  std::vector<double> mus = cfg.mus;
  if (!cfg.mu_linspace.empty()) {
    double lo = 0.0, hi = 0.0;
    long count = 0;
    char c1 = 0, c2 = 0;
    std::istringstream is(cfg.mu_linspace);
    if (!(is >> lo >> c1 >> hi >> c2 >> count) || c1 != ':' || c2 != ':' ||
        count < 1 || !is.eof())
      throw error("bad --mu-linspace '" + cfg.mu_linspace +
                  "' (expected lo:hi:count)");
    for (long i = 0; i < count; ++i)
      mus.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
  }
  if (mus.empty()) throw error("no parameter values given (--mu or --mu-linspace)");
  return mus;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

void write_residuals_csv(const std::string& path, const SolveReport& rep) {
  std::ofstream out(path);
  if (!out) throw error("cannot write '" + path + "'");
  out << "iteration,mu,relres_recursive,relres_true,cpu_seconds\n";
  for (std::size_t i = 0; i < rep.iterations; ++i)
    for (const auto& sh : rep.shifts) {
      out << (i + 1) << ',' << fmt(sh.mu) << ',';
      if (i < sh.relres_recursive.size() && !std::isnan(sh.relres_recursive[i]))
        out << fmt(sh.relres_recursive[i]);
      out << ',';
      if (i < sh.relres_true.size() && !std::isnan(sh.relres_true[i]))
        out << fmt(sh.relres_true[i]);
      out << ',';
      if (i < rep.cpu_seconds.size()) out << fmt(rep.cpu_seconds[i]);
      out << '\n';
    }
}

void write_solutions_mtx(const std::string& path, std::size_t n,
                         const SolveReport& rep) {
  DenseMatrix X(n, rep.shifts.size());
  for (std::size_t l = 0; l < rep.shifts.size(); ++l)
    if (rep.shifts[l].x.size() == n)
      for (std::size_t i = 0; i < n; ++i) X(i, l) = rep.shifts[l].x[i];
  write_matrix_market_array(path, X);
}

json report_to_json(const SolveReport& rep) {
  json j;
  j["termination"] = to_string(rep.reason);
  j["iterations"] = rep.iterations;
  j["inner_solve_count"] = rep.inner_solve_count;
  j["message"] = rep.message;
  j["cpu_seconds_total"] =
      rep.cpu_seconds.empty() ? 0.0 : rep.cpu_seconds.back();
  j["all_converged"] = rep.all_converged();
  j["shifts"] = json::array();
  for (const auto& sh : rep.shifts) {
    json s;
    s["mu"] = sh.mu;
    s["converged"] = sh.converged;
    s["broke_down"] = sh.broke_down;
    s["iterations_to_tol"] = sh.iterations_to_tol;
    s["final_true_relres"] = sh.final_true_relres;  // null when NaN
    j["shifts"].push_back(std::move(s));
  }
  return j;
}

int run_solve(const SolveConfig& cfg) {
  ParamProblem prob = make_problem(cfg);
  const double a = cfg.a > 0.0 ? cfg.a : prob.a;
  const ShiftSet shifts = make_shift_set(cfg.sigma, parse_mus(cfg), a);
  if (cfg.solver != "exact" && cfg.solver != "inexact")
    throw error("unknown solver '" + cfg.solver + "'");
  if (cfg.side != "right" && cfg.side != "left")
    throw error("unknown side '" + cfg.side + "'");

  InnerOptions inner;
  inner.mode = cfg.inner == "iterative" ? InnerMode::iterative
                                        : InnerMode::direct;
  if (cfg.inner != "direct" && cfg.inner != "iterative")
    throw error("unknown inner mode '" + cfg.inner + "'");
  inner.algo =
      cfg.inner_algo == "bicgstab" ? InnerAlgo::bicgstab : InnerAlgo::bicg;
  if (cfg.inner_algo != "bicg" && cfg.inner_algo != "bicgstab")
    throw error("unknown inner algorithm '" + cfg.inner_algo + "'");
  inner.maxit = cfg.inner_maxit;

  const MatrixChebPoly poly = make_interpolant(prob, cfg.d, a);
  const CompanionOperator op(poly);
  Preconditioner prec(op, cfg.sigma, inner);

  TrueMatrixEval eval_A = nullptr;
  if (has_true_evaluator(prob))
    eval_A = [&prob](double mu) { return eval_A_at(prob, mu); };

  json j;
  SolveReport base;
  if (cfg.solver == "exact") {
    ExactOptions opts;
    opts.tol = cfg.tol;
    opts.maxit = cfg.maxit;
    opts.side = cfg.side == "left" ? Side::left : Side::right;
    opts.diagnostics = cfg.diagnostics;
    base = solve_exact(op, prec, prob.b, shifts, opts, eval_A);
    j = report_to_json(base);
  } else {
    InexactOptions opts;
    opts.tol = cfg.tol;
    opts.maxit = cfg.maxit;
    opts.epsilon = cfg.epsilon;
    if (cfg.tol_policy == "adaptive")
      opts.policy = TolPolicy::adaptive;
    else if (cfg.tol_policy == "theorem")
      opts.policy = TolPolicy::theorem;
    else if (cfg.tol_policy == "fixed")
      opts.policy = TolPolicy::fixed;
    else
      throw error("unknown tolerance policy '" + cfg.tol_policy + "'");
    opts.fixed_tol = cfg.fixed_tol;
    opts.diagnostics = cfg.diagnostics;
    const InexactReport rep =
        solve_inexact(op, prec, prob.b, shifts, opts, eval_A);
    base = rep;
    j = report_to_json(rep);
    j["epsilon"] = rep.epsilon;
    j["tol_policy"] = cfg.tol_policy;
    j["inner_tols"] = rep.inner_tols;
    j["inner_achieved"] = rep.inner_achieved;
  }

  j["solver"] = cfg.solver;
  j["problem"] = prob.name;
  j["n"] = prob.n;
  j["d"] = cfg.d;
  j["a"] = a;
  j["sigma"] = cfg.sigma;
  j["tol"] = cfg.tol;
  j["maxit"] = cfg.maxit;
  j["side"] = cfg.side;
  j["inner_mode"] = cfg.inner;
  j["true_matrix"] = eval_A ? "analytic" : "interpolant";

  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    const std::filesystem::path dir(cfg.out_dir);
    write_residuals_csv((dir / "residuals.csv").string(), base);
    write_solutions_mtx((dir / "solutions.mtx").string(), prob.n, base);
    std::ofstream jf(dir / "report.json");
    if (!jf) throw error("cannot write report.json");
    jf << j.dump(2) << '\n';
  }
  if (!cfg.quiet) {
    std::cout << "termination: " << to_string(base.reason) << " after "
              << base.iterations << " iterations, " << base.inner_solve_count
              << " inner solves\n";
    for (const auto& sh : base.shifts)
      std::cout << "  mu = " << sh.mu << "  true relres = "
                << sh.final_true_relres
                << (sh.converged ? "  (converged)"
                                 : sh.broke_down ? "  (breakdown)" : "") << '\n';
  }
  return base.all_converged() ? 0 : 2;
}

int run_interp_check(const SolveConfig& cfg, std::size_t probes, double bound) {
  ParamProblem prob = make_problem(cfg);
  if (!has_true_evaluator(prob))
    throw error("interp-check needs an analytic A(mu); this problem only has "
                "node samples");
  const double a = cfg.a > 0.0 ? cfg.a : prob.a;
  const MatrixChebPoly poly = make_interpolant(prob, cfg.d, a);
  Vector grid(probes);
  for (std::size_t i = 0; i < probes; ++i)
    grid[i] = probes == 1 ? 0.0
                          : -a + 2.0 * a * static_cast<double>(i) /
                                    static_cast<double>(probes - 1);
  const double err = interp_error(
      poly, [&prob](double mu) { return eval_A_at(prob, mu); }, grid);
  std::cout << "problem " << prob.name << ", n = " << prob.n << ", degree "
            << cfg.d << " on [" << -a << ", " << a << "]\n"
            << "max relative interpolation error over " << probes
            << " probes: " << err << '\n';
  if (bound > 0.0 && !(err <= bound)) {
    std::cout << "exceeds bound " << bound << '\n';
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chebyshev + companion multishift solver for A(mu) x = b"};
  app.require_subcommand(1);
  app.set_config("--config");

  SolveConfig cfg;
  std::size_t probes = 101;
  double bound = 0.0;
  std::string level = "quick";

  const auto add_problem_flags = [&](CLI::App* c) {
    c->add_option("--problem", cfg.problem,
                  "built-in problem: time_delay or helmholtz");
    c->add_option("--manifest", cfg.manifest,
                  "load the problem from a manifest file instead");
    c->add_option("--n", cfg.n, "time_delay dimension");
    c->add_option("--nx", cfg.nx, "helmholtz interior grid points in x");
    c->add_option("--ny", cfg.ny, "helmholtz interior grid points in y");
    c->add_option("--seed", cfg.seed, "random seed for time_delay");
    c->add_option("--d", cfg.d, "interpolation degree (>= 2)");
    c->add_option("--a", cfg.a, "half width of the parameter interval");
  };

  CLI::App* solve = app.add_subcommand("solve", "solve A(mu) x = b");
  add_problem_flags(solve);
  solve->add_option("--sigma", cfg.sigma, "shift-and-invert pole");
  solve->add_option("--mu", cfg.mus, "parameter values (repeatable)");
  solve->add_option("--mu-linspace", cfg.mu_linspace,
                    "equally spaced values lo:hi:count");
  solve->add_option("--tol", cfg.tol, "outer relative residual tolerance");
  solve->add_option("--maxit", cfg.maxit, "outer iteration cap");
  solve->add_option("--solver", cfg.solver, "exact or inexact");
  solve->add_option("--side", cfg.side,
                    "exact solver preconditioning side (right or left)");
  solve->add_option("--inner", cfg.inner, "inner solves: direct or iterative");
  solve->add_option("--inner-algo", cfg.inner_algo,
                    "iterative inner algorithm: bicg or bicgstab");
  solve->add_option("--inner-maxit", cfg.inner_maxit,
                    "inner iteration cap (0 = 10n)");
  solve->add_option("--epsilon", cfg.epsilon,
                    "residual gap budget (inexact solver)");
  solve->add_option("--tol-policy", cfg.tol_policy,
                    "inner tolerance policy: adaptive, theorem, or fixed");
  solve->add_option("--fixed-tol", cfg.fixed_tol,
                    "inner tolerance under the fixed policy");
  solve->add_option("--out", cfg.out_dir,
                    "directory for residuals.csv, solutions.mtx, report.json");
  solve->add_flag("--diagnostics", cfg.diagnostics,
                  "evaluate true residuals for every shift at every iteration");
  solve->add_flag("--quiet", cfg.quiet, "suppress the terminal summary");

  CLI::App* interp =
      app.add_subcommand("interp-check", "interpolation error of A(mu)");
  add_problem_flags(interp);
  interp->add_option("--probes", probes, "number of probe points");
  interp->add_option("--bound", bound,
                     "exit with status 2 if the error exceeds this");

  CLI::App* verify = app.add_subcommand("verify", "run built-in self checks");
  verify->add_option("level", level, "quick or full")
      ->check(CLI::IsMember({"quick", "full"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return run_solve(cfg);
    if (interp->parsed()) return run_interp_check(cfg, probes, bound);
    return run_verify(level, std::cout) == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
