#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "chebbicg/chebyshev.hpp"
#include "chebbicg/errors.hpp"
#include "chebbicg/matrix_market.hpp"
#include "chebbicg/sparse.hpp"

namespace chebbicg {

// xoshiro256** seeded through splitmix64; bit-identical streams across
// platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    for (auto& word : s_) {
      seed += 0x9e3779b97f4a7c15ull;
      std::uint64_t z = seed;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
      word = z ^ (z >> 31);
    }
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  // uniform in [-1, 1)
  double uniform_pm1() { return 2.0 * uniform() - 1.0; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4];
};

// Parameter dependence of one term f_i(mu) C_i.
enum class FTag { one, mu, mu_squared, sin_sq, cos_sq, exp_neg, samples };

inline const char* to_string(FTag t) {
  switch (t) {
    case FTag::one: return "one";
    case FTag::mu: return "mu";
    case FTag::mu_squared: return "mu_squared";
    case FTag::sin_sq: return "sin_sq";
    case FTag::cos_sq: return "cos_sq";
    case FTag::exp_neg: return "exp_neg";
    default: return "samples";
  }
}

inline FTag ftag_from_string(const std::string& s) {
  if (s == "one") return FTag::one;
  if (s == "mu") return FTag::mu;
  if (s == "mu_squared") return FTag::mu_squared;
  if (s == "sin_sq") return FTag::sin_sq;
  if (s == "cos_sq") return FTag::cos_sq;
  if (s == "exp_neg") return FTag::exp_neg;
  if (s == "samples") return FTag::samples;
  throw error("unknown coefficient function tag '" + s + "'");
}

struct ProblemTerm {
  SparseMatrix C;
  FTag tag = FTag::one;
  Vector samples;  // only for FTag::samples: values at the d+1 nodes
};

// A(mu) = sum_i f_i(mu) C_i with right-hand side b.
struct ParamProblem {
  std::string name;
  std::size_t n = 0;
  double a = 1.0;  // suggested interval half-width
  std::vector<ProblemTerm> terms;
  Vector b;
};

inline double eval_f(FTag tag, double mu) {
  switch (tag) {
    case FTag::one: return 1.0;
    case FTag::mu: return mu;
    case FTag::mu_squared: return mu * mu;
    case FTag::sin_sq: return std::sin(mu) * std::sin(mu);
    case FTag::cos_sq: return std::cos(mu) * std::cos(mu);
    case FTag::exp_neg: return std::exp(-mu);
    default:
      throw true_residual_unavailable(
          "coefficient function known only through node samples");
  }
}

// Values of f_i at interpolation nodes; sample-table terms are passed
// through after a count check.
inline Vector sample_f_at_nodes(const ProblemTerm& term, const Vector& nodes) {
  if (term.tag == FTag::samples) {
    if (term.samples.size() != nodes.size())
      throw dimension_error(
          "sample_f_at_nodes: sample table has " +
          std::to_string(term.samples.size()) + " entries, need " +
          std::to_string(nodes.size()));
    return term.samples;
  }
  Vector out(nodes.size());
  for (std::size_t k = 0; k < nodes.size(); ++k)
    out[k] = eval_f(term.tag, nodes[k]);
  return out;
}

// A(mu); throws true_residual_unavailable if any term is samples-only.
inline SparseMatrix eval_A_at(const ParamProblem& prob, double mu) {
  SparseMatrix A;
  A.nrows = A.ncols = prob.n;
  A.row_ptr.assign(prob.n + 1, 0);
  for (const auto& term : prob.terms)
    A = sparse_lincomb(1.0, A, eval_f(term.tag, mu), term.C);
  return A;
}

inline bool has_true_evaluator(const ParamProblem& prob) {
  for (const auto& term : prob.terms)
    if (term.tag == FTag::samples) return false;
  return true;
}

// Degree-d Chebyshev interpolant of A(mu) on [-a, a].
inline MatrixChebPoly make_interpolant(const ParamProblem& prob, std::size_t d,
                                       double a) {
  const Vector nodes = cheb_nodes(d, a);
  std::vector<SparseMatrix> C;
  std::vector<Vector> samples;
  C.reserve(prob.terms.size());
  samples.reserve(prob.terms.size());
  for (const auto& term : prob.terms) {
    C.push_back(term.C);
    samples.push_back(sample_f_at_nodes(term, nodes));
  }
  return matrix_poly_from_samples(C, samples, a);
}

// Delay system A(mu) = -mu I + A_0 + exp(-mu) A_1 with dense random
// A_0, A_1 (entries uniform in [-1,1] scaled by 1/n, drawn row-major in
// that order) and random b; a is the suggested interval half-width.
inline ParamProblem gen_time_delay(std::size_t n, std::uint64_t seed,
                                   double a = 2.0) {
  if (n == 0) throw dimension_error("gen_time_delay: n must be positive");
  if (!(a > 0.0)) throw dimension_error("gen_time_delay: a must be positive");
  Rng rng(seed);
  const auto random_dense = [&](double scale) {
    std::vector<std::tuple<std::size_t, std::size_t, double>> trips;
    trips.reserve(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        trips.emplace_back(i, j, scale * rng.uniform_pm1());
    return sparse_from_triplets(n, n, std::move(trips));
  };
  ParamProblem prob;
  prob.name = "time_delay";
  prob.n = n;
  prob.a = a;
  prob.terms.resize(3);
  prob.terms[0].C = sparse_identity(n, -1.0);
  prob.terms[0].tag = FTag::mu;
  prob.terms[1].C = random_dense(1.0 / static_cast<double>(n));
  prob.terms[1].tag = FTag::one;
  prob.terms[2].C = random_dense(1.0 / static_cast<double>(n));
  prob.terms[2].tag = FTag::exp_neg;
  prob.b.resize(n);
  for (auto& v : prob.b) v = rng.uniform_pm1();
  return prob;
}

// Helmholtz-type finite difference problem on the unit square with
// homogeneous Dirichlet boundary:
//   A(mu) = A_0 + sin^2(mu) A_1 + mu^2 I + cos^2(mu) A_3
// where A_0 is the 5-point Laplacian on an nx-by-ny interior grid
// (h_x = 1/(nx+1), h_y = 1/(ny+1), interior points ordered row-major),
// A_1 = diag(1 + sin x), A_3 = diag(1 + cos y), b_i = exp(-x_i y_i).
inline ParamProblem gen_helmholtz_fd(std::size_t nx, std::size_t ny) {
  if (nx == 0 || ny == 0)
    throw dimension_error("gen_helmholtz_fd: grid must be nonempty");
  const std::size_t n = nx * ny;
  const double hx = 1.0 / static_cast<double>(nx + 1);
  const double hy = 1.0 / static_cast<double>(ny + 1);
  const double ihx2 = 1.0 / (hx * hx), ihy2 = 1.0 / (hy * hy);

  std::vector<std::tuple<std::size_t, std::size_t, double>> trips;
  trips.reserve(5 * n);
  Vector alpha_diag(n), beta_diag(n), b(n);
  for (std::size_t iy = 0; iy < ny; ++iy)
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const std::size_t row = iy * nx + ix;
      const double x = static_cast<double>(ix + 1) * hx;
      const double y = static_cast<double>(iy + 1) * hy;
      trips.emplace_back(row, row, -2.0 * (ihx2 + ihy2));
      if (ix > 0) trips.emplace_back(row, row - 1, ihx2);
      if (ix + 1 < nx) trips.emplace_back(row, row + 1, ihx2);
      if (iy > 0) trips.emplace_back(row, row - nx, ihy2);
      if (iy + 1 < ny) trips.emplace_back(row, row + nx, ihy2);
      alpha_diag[row] = 1.0 + std::sin(x);
      beta_diag[row] = 1.0 + std::cos(y);
      b[row] = std::exp(-x * y);
    }

  ParamProblem prob;
  prob.name = "helmholtz_fd";
  prob.n = n;
  prob.a = 5.0;
  prob.terms.resize(4);
  prob.terms[0].C = sparse_from_triplets(n, n, std::move(trips));
  prob.terms[0].tag = FTag::one;
  prob.terms[1].C = sparse_diag(alpha_diag);
  prob.terms[1].tag = FTag::sin_sq;
  prob.terms[2].C = sparse_identity(n);
  prob.terms[2].tag = FTag::mu_squared;
  prob.terms[3].C = sparse_diag(beta_diag);
  prob.terms[3].tag = FTag::cos_sq;
  prob.b = std::move(b);
  return prob;
}

// Loads a problem from a manifest of key = value lines:
//   a = 4.0
//   b = rhs.mtx
//   term.1.matrix = C1.mtx
//   term.1.f = exp_neg            (or term.1.samples = v0 v1 ... vd)
// Matrix Market paths are resolved relative to the manifest location.
inline ParamProblem load_problem_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw error("cannot open manifest '" + path + "'");
  const std::filesystem::path base = std::filesystem::path(path).parent_path();

  std::map<std::string, std::pair<std::string, long>> kv;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw parse_error("manifest: expected key = value", lineno);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw parse_error("manifest: empty key or value", lineno);
    if (kv.count(key)) throw parse_error("manifest: duplicate key '" + key + "'", lineno);
    kv[key] = {value, lineno};
  }

  ParamProblem prob;
  prob.name = "manifest:" + std::filesystem::path(path).filename().string();
  if (kv.count("a")) {
    prob.a = std::stod(kv["a"].first);
    if (!(prob.a > 0.0))
      throw parse_error("manifest: a must be positive", kv["a"].second);
    kv.erase("a");
  }
  if (!kv.count("b")) throw error("manifest '" + path + "': missing b");
  prob.b = read_matrix_market_vector((base / kv["b"].first).string());
  kv.erase("b");

  for (std::size_t t = 1;; ++t) {
    const std::string prefix = "term." + std::to_string(t) + ".";
    if (!kv.count(prefix + "matrix")) break;
    ProblemTerm term;
    term.C = read_matrix_market((base / kv[prefix + "matrix"].first).string());
    const bool has_f = kv.count(prefix + "f") != 0;
    const bool has_samples = kv.count(prefix + "samples") != 0;
    if (has_f == has_samples)
      throw error("manifest '" + path + "': term " + std::to_string(t) +
                  " needs exactly one of f or samples");
    if (has_f) {
      term.tag = ftag_from_string(kv[prefix + "f"].first);
      if (term.tag == FTag::samples)
        throw error("manifest '" + path + "': use the samples key for sample tables");
      kv.erase(prefix + "f");
    } else {
      term.tag = FTag::samples;
      std::istringstream ss(kv[prefix + "samples"].first);
      double v;
      while (ss >> v) term.samples.push_back(v);
      if (term.samples.empty())
        throw parse_error("manifest: empty sample table",
                          kv[prefix + "samples"].second);
      kv.erase(prefix + "samples");
    }
    kv.erase(prefix + "matrix");
    prob.terms.push_back(std::move(term));
  }
  if (prob.terms.empty())
    throw error("manifest '" + path + "': no terms (term.1.matrix missing?)");
  if (!kv.empty())
    throw error("manifest '" + path + "': unrecognized key '" +
                kv.begin()->first + "'");

  prob.n = prob.terms[0].C.nrows;
  for (const auto& term : prob.terms)
    if (term.C.nrows != prob.n || term.C.ncols != prob.n)
      throw dimension_error("manifest '" + path +
                            "': coefficient matrices must be square of equal size");
  if (prob.b.size() != prob.n)
    throw dimension_error("manifest '" + path + "': b length mismatch");
  return prob;
}

}  // namespace chebbicg
