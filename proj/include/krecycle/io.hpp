#pragma once

/// \file krecycle/io.hpp
/// \brief Matrix Market and plain-vector text I/O, and lossless number
///        formatting for CSV output.

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "krecycle/sparsela.hpp"

namespace krecycle {

/// %.17g, with "inf", "-inf" and "nan" for non-finite values
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// coordinate real general, 1-based indices
inline void write_matrix_market(std::ostream &os, const CsrMatrix &A) {
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << A.n_rows << ' ' << A.n_cols << ' ' << A.nnz() << '\n';
  for (std::size_t i = 0; i < A.n_rows; ++i)
    for (std::size_t p = A.row_offsets[i]; p < A.row_offsets[i + 1]; ++p)
      os << i + 1 << ' ' << A.col_indices[p] + 1 << ' ' << format_double(A.values[p]) << '\n';
}

inline CsrMatrix read_matrix_market(std::istream &is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("%%MatrixMarket", 0) != 0)
    throw std::runtime_error("read_matrix_market: missing banner");
  if (line.find("coordinate") == std::string::npos || line.find("real") == std::string::npos ||
      line.find("general") == std::string::npos)
    throw std::runtime_error("read_matrix_market: only coordinate real general is supported");
  while (std::getline(is, line))
    if (!line.empty() && line[0] != '%') break;
  std::size_t rows = 0, cols = 0, nnz = 0;
  {
    std::istringstream hdr(line);
    if (!(hdr >> rows >> cols >> nnz)) throw std::runtime_error("read_matrix_market: bad size line");
  }
  std::vector<std::tuple<std::size_t, std::size_t, double>> t;
  t.reserve(nnz);
  for (std::size_t k = 0; k < nnz; ++k) {
    std::size_t i = 0, j = 0;
    double v = 0.0;
    if (!(is >> i >> j >> v) || i < 1 || j < 1 || i > rows || j > cols)
      throw std::runtime_error("read_matrix_market: bad entry " + std::to_string(k));
    t.emplace_back(i - 1, j - 1, v);
  }
  return CsrMatrix::from_triplets(rows, cols, std::move(t));
}

/// one value per line
inline void write_vector(std::ostream &os, std::span<const double> v) {
  for (double x : v) os << format_double(x) << '\n';
}

inline Vector read_vector(std::istream &is) {
  Vector v;
  std::string tok;
  while (is >> tok) v.push_back(std::stod(tok));
  return v;
}

}  // namespace krecycle
