#pragma once

/// \file krecycle/precond.hpp
/// \brief Stationary left preconditioners: identity and SSOR.

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "krecycle/sparsela.hpp"

namespace krecycle {

struct IdentityPrecond {
  void apply(std::span<const double> r, std::span<double> z) const {
    if (r.size() != z.size()) throw DimensionError("identity_apply: size mismatch");
    std::copy(r.begin(), r.end(), z.begin());
  }
  Vector apply(std::span<const double> r) const { return Vector(r.begin(), r.end()); }
};

/// SSOR preconditioner M = (D + wL) D^{-1} (D + wU) / (w (2 - w)).
///
/// Holds a reference to A; the matrix must outlive the preconditioner.
class SsorPrecond {
 public:
  explicit SsorPrecond(const CsrMatrix &A, double omega = 1.0) : A_(&A), omega_(omega) {
    if (A.n_rows != A.n_cols) throw DimensionError("SsorPrecond: matrix must be square");
    if (!(omega > 0.0 && omega < 2.0))
      throw std::invalid_argument("SsorPrecond: omega must lie in (0, 2)");
    diag_.resize(A.n_rows);
    diag_pos_.resize(A.n_rows);
    for (std::size_t i = 0; i < A.n_rows; ++i) {
      std::size_t p = A.row_offsets[i];
      while (p < A.row_offsets[i + 1] && A.col_indices[p] < i) ++p;
      if (p == A.row_offsets[i + 1] || A.col_indices[p] != i || A.values[p] == 0.0)
        throw std::invalid_argument("SsorPrecond: zero diagonal entry in row " +
                                    std::to_string(i));
      diag_pos_[i] = p;
      diag_[i] = A.values[p];
    }
  }

  double omega() const noexcept { return omega_; }
  std::size_t dim() const noexcept { return A_->n_rows; }

  /// z = M^{-1} r: forward sweep, diagonal scaling, backward sweep
  void apply(std::span<const double> r, std::span<double> z) const {
    const auto &A = *A_;
    const std::size_t n = A.n_rows;
    if (r.size() != n || z.size() != n) throw DimensionError("ssor_apply: size mismatch");
    const double w = omega_;
    // (D + wL) y = r
    for (std::size_t i = 0; i < n; ++i) {
      double s = r[i];
      for (std::size_t p = A.row_offsets[i]; p < diag_pos_[i]; ++p)
        s -= w * A.values[p] * z[A.col_indices[p]];
      z[i] = s / diag_[i];
    }
    for (std::size_t i = 0; i < n; ++i) z[i] *= diag_[i];
    // (D + wU) z = D y
    for (std::size_t i = n; i-- > 0;) {
      double s = z[i];
      for (std::size_t p = diag_pos_[i] + 1; p < A.row_offsets[i + 1]; ++p)
        s -= w * A.values[p] * z[A.col_indices[p]];
      z[i] = s / diag_[i];
    }
    const double f = w * (2.0 - w);
    for (std::size_t i = 0; i < n; ++i) z[i] *= f;
  }

  Vector apply(std::span<const double> r) const {
    Vector z(r.size());
    apply(r, z);
    return z;
  }

 private:
  const CsrMatrix *A_;
  double omega_;
  std::vector<double> diag_;
  std::vector<std::size_t> diag_pos_;
};

inline Vector identity_apply(std::span<const double> r) { return IdentityPrecond{}.apply(r); }
inline Vector ssor_apply(const SsorPrecond &P, std::span<const double> r) { return P.apply(r); }

}  // namespace krecycle
