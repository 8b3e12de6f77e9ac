#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "chebbicg/errors.hpp"
#include "chebbicg/sparse.hpp"

namespace chebbicg {

namespace detail {

inline std::string mm_lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

struct MMHeader {
  std::string format;    // coordinate | array
  std::string field;     // real | integer
  std::string symmetry;  // general | symmetric
};

inline MMHeader mm_parse_header(const std::string& line, long lineno) {
  std::istringstream is(line);
  std::string banner, object, format, field, symmetry;
  is >> banner >> object >> format >> field >> symmetry;
  if (mm_lower(banner) != "%%matrixmarket" || mm_lower(object) != "matrix")
    throw parse_error("matrix market: bad banner", lineno);
  MMHeader h{mm_lower(format), mm_lower(field), mm_lower(symmetry)};
  if (h.format != "coordinate" && h.format != "array")
    throw parse_error("matrix market: unsupported format '" + format + "'",
                      lineno);
  if (h.field != "real" && h.field != "integer")
    throw parse_error("matrix market: unsupported field '" + field + "'",
                      lineno);
  if (h.symmetry != "general" && h.symmetry != "symmetric")
    throw parse_error("matrix market: unsupported symmetry '" + symmetry + "'",
                      lineno);
  return h;
}

// Reads the next line that is neither blank nor a '%' comment.
inline bool mm_next_data_line(std::istream& in, std::string& line,
                              long& lineno) {
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos || line[pos] == '%') continue;
    return true;
  }
  return false;
}

}  // namespace detail

// Reads a Matrix Market file (coordinate or array, real, general or
// symmetric) into CSR.  Indices are 1-based in the file; duplicates are
// summed; symmetric storage is expanded to both triangles.
inline SparseMatrix read_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw error("cannot open '" + path + "'");
  long lineno = 0;
  std::string line;
  if (!std::getline(in, line)) throw parse_error("matrix market: empty file", 1);
  ++lineno;
  const detail::MMHeader h = detail::mm_parse_header(line, lineno);
  if (!detail::mm_next_data_line(in, line, lineno))
    throw parse_error("matrix market: missing size line", lineno);

  std::istringstream sz(line);
  if (h.format == "coordinate") {
    std::size_t nrows, ncols, nnz;
    if (!(sz >> nrows >> ncols >> nnz))
      throw parse_error("matrix market: bad size line", lineno);
    std::vector<std::tuple<std::size_t, std::size_t, double>> trips;
    trips.reserve(h.symmetry == "symmetric" ? 2 * nnz : nnz);
    for (std::size_t k = 0; k < nnz; ++k) {
      if (!detail::mm_next_data_line(in, line, lineno))
        throw parse_error("matrix market: expected " + std::to_string(nnz) +
                              " entries, got " + std::to_string(k),
                          lineno);
      std::istringstream es(line);
      std::size_t i, j;
      double v;
      if (!(es >> i >> j >> v))
        throw parse_error("matrix market: bad entry", lineno);
      if (i < 1 || i > nrows || j < 1 || j > ncols)
        throw parse_error("matrix market: index out of range", lineno);
      trips.emplace_back(i - 1, j - 1, v);
      if (h.symmetry == "symmetric" && i != j)
        trips.emplace_back(j - 1, i - 1, v);
    }
    return sparse_from_triplets(nrows, ncols, std::move(trips));
  }

  // array format: dense column-major listing
  std::size_t nrows, ncols;
  if (!(sz >> nrows >> ncols))
    throw parse_error("matrix market: bad size line", lineno);
  if (h.symmetry != "general")
    throw parse_error("matrix market: symmetric array not supported", lineno);
  std::vector<std::tuple<std::size_t, std::size_t, double>> trips;
  trips.reserve(nrows * ncols);
  for (std::size_t j = 0; j < ncols; ++j)
    for (std::size_t i = 0; i < nrows; ++i) {
      if (!detail::mm_next_data_line(in, line, lineno))
        throw parse_error("matrix market: truncated array data", lineno);
      std::istringstream es(line);
      double v;
      if (!(es >> v)) throw parse_error("matrix market: bad value", lineno);
      if (v != 0.0) trips.emplace_back(i, j, v);
    }
  return sparse_from_triplets(nrows, ncols, std::move(trips));
}

// Reads a one-column Matrix Market file as a dense vector.
inline Vector read_matrix_market_vector(const std::string& path) {
  const SparseMatrix A = read_matrix_market(path);
  if (A.ncols != 1)
    throw error("'" + path + "': expected a one-column vector, got " +
                std::to_string(A.ncols) + " columns");
  Vector v(A.nrows, 0.0);
  for (std::size_t i = 0; i < A.nrows; ++i)
    for (std::size_t p = A.row_ptr[i]; p < A.row_ptr[i + 1]; ++p)
      v[i] = A.values[p];
  return v;
}

// Writes a dense matrix in Matrix Market array format (column-major).
inline void write_matrix_market_array(const std::string& path,
                                      const DenseMatrix& A) {
  std::ofstream out(path);
  if (!out) throw error("cannot write '" + path + "'");
  out << "%%MatrixMarket matrix array real general\n";
  out << A.rows() << " " << A.cols() << "\n";
  out.precision(17);
  out << std::scientific;
  for (std::size_t j = 0; j < A.cols(); ++j)
    for (std::size_t i = 0; i < A.rows(); ++i) out << A(i, j) << "\n";
  if (!out) throw error("write failed for '" + path + "'");
}

}  // namespace chebbicg
