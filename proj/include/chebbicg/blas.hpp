#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace chebbicg {

using Vector = std::vector<double>;

inline double dot(std::span<const double> x, std::span<const double> y) {
  assert(x.size() == y.size());
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline double nrm2(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

// y = y + alpha*x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scal(double alpha, std::span<double> x) {
  for (double& v : x) v *= alpha;
}

inline void set_zero(std::span<double> x) {
  for (double& v : x) v = 0.0;
}

// Vectors of length d*n are addressed as d stacked blocks of length n.
inline std::span<double> block(Vector& v, std::size_t k, std::size_t n) {
  assert((k + 1) * n <= v.size());
  return std::span<double>(v.data() + k * n, n);
}

inline std::span<const double> block(const Vector& v, std::size_t k,
                                     std::size_t n) {
  assert((k + 1) * n <= v.size());
  return std::span<const double>(v.data() + k * n, n);
}

}  // namespace chebbicg
