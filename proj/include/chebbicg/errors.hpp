#pragma once

#include <stdexcept>
#include <string>

namespace chebbicg {

// Base class for all library errors.
struct error : std::runtime_error {
  explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

struct dimension_error : error {
  explicit dimension_error(const std::string& msg) : error(msg) {}
};

// Singular or numerically singular matrix encountered in a factorization
// or a shifted tridiagonal solve.
struct singular_error : error {
  explicit singular_error(const std::string& msg) : error(msg) {}
};

// Krylov breakdown (zero bilinear form or zero pivot in a short recurrence).
struct breakdown_error : error {
  explicit breakdown_error(const std::string& msg) : error(msg) {}
};

// Inner solver failed to reach the requested tolerance within its
// iteration cap.  Carries the residual it did achieve.
struct inner_solve_error : error {
  inner_solve_error(const std::string& msg, double achieved_)
      : error(msg), achieved(achieved_) {}
  double achieved;
};

// Parse failure in a text input (Matrix Market file, manifest, config).
struct parse_error : error {
  parse_error(const std::string& msg, long line_)
      : error(msg + " (line " + std::to_string(line_) + ")"), line(line_) {}
  long line;
};

// Raised when a true residual is requested but the parameter dependence is
// known only through node samples, so A(mu) cannot be evaluated off-node.
struct true_residual_unavailable : error {
  explicit true_residual_unavailable(const std::string& msg) : error(msg) {}
};

}  // namespace chebbicg
