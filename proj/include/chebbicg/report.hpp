#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "chebbicg/blas.hpp"
#include "chebbicg/errors.hpp"

namespace chebbicg {

enum class Side { right, left };
enum class Termination { converged, max_iterations, breakdown };
enum class TolPolicy { adaptive, theorem, fixed };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::converged: return "converged";
    case Termination::max_iterations: return "max_iterations";
    default: return "breakdown";
  }
}

// Shift-and-invert pole sigma together with the parameter values to solve
// for.  mus are kept sorted by distance from sigma, ascending, so the last
// entry is the farthest shift (ties resolved toward the larger mu).
struct ShiftSet {
  double sigma = 0.0;
  double a = 1.0;
  std::vector<double> mus;

  double farthest() const { return mus.back(); }
};

inline ShiftSet make_shift_set(double sigma, std::vector<double> mus, double a) {
  if (mus.empty()) throw dimension_error("make_shift_set: no shifts given");
  if (!(std::abs(sigma) < a))
    throw dimension_error("make_shift_set: sigma must lie strictly inside (-a, a)");
  for (double mu : mus) {
    if (!(std::abs(mu) <= a))
      throw dimension_error("make_shift_set: mu = " + std::to_string(mu) +
                            " outside [-a, a]");
    if (mu == sigma)
      throw dimension_error("make_shift_set: mu coincides with sigma");
  }
  std::sort(mus.begin(), mus.end(), [sigma](double x, double y) {
    const double dx = std::abs(x - sigma), dy = std::abs(y - sigma);
    return dx != dy ? dx < dy : x < y;
  });
  return ShiftSet{sigma, a, std::move(mus)};
}

struct ShiftResult {
  double mu = 0.0;
  bool converged = false;
  bool broke_down = false;
  // First iteration at which the residual was observed at or below tol:
  // taken from the true-residual history when one was recorded for this
  // shift, otherwise from the recursive history.  -1 if never.
  long iterations_to_tol = -1;
  double final_true_relres = std::numeric_limits<double>::quiet_NaN();
  Vector x;
  std::vector<double> relres_recursive;  // entry i: after iteration i+1
  std::vector<double> relres_true;       // NaN where not evaluated
};

struct SolveReport {
  Termination reason = Termination::max_iterations;
  std::size_t iterations = 0;
  std::vector<ShiftResult> shifts;  // ordered as in the ShiftSet
  std::vector<double> cpu_seconds;  // cumulative, one entry per iteration
  std::size_t inner_solve_count = 0;
  std::string message;

  bool all_converged() const {
    for (const auto& s : shifts)
      if (!s.converged) return false;
    return true;
  }
};

struct InexactReport : SolveReport {
  double epsilon = 0.0;
  std::vector<double> inner_tols;      // requested tol_i per iteration
  std::vector<double> inner_achieved;  // achieved inner residual per iteration
};

// Seed residual vectors r_0, r_1, ... kept for the shifted search
// direction updates; column i is the seed residual after i iterations.
class ResidualHistoryStore {
 public:
  void push(const Vector& r) {
    if (!cols_.empty() && r.size() != cols_.front().size())
      throw dimension_error("ResidualHistoryStore: length mismatch");
    cols_.push_back(r);
  }
  const Vector& col(std::size_t i) const { return cols_.at(i); }
  std::size_t count() const { return cols_.size(); }

 private:
  std::vector<Vector> cols_;
};

}  // namespace chebbicg
