#pragma once

/// \file krecycle/sparsela.hpp
/// \brief Dense and sparse kernels: CSR products, modified Gram-Schmidt,
///        small dense LU and the thin SVD of tall-skinny matrices.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace krecycle {

using Vector = std::vector<double>;

/// thrown on operand size mismatches
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// thrown by lu_factor when no nonzero pivot is left in a column
class SingularMatrixError : public std::runtime_error {
 public:
  SingularMatrixError(const std::string &what, std::size_t column)
      : std::runtime_error(what), column_(column) {}
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t column_;
};

namespace detail {

inline void require(bool cond, const char *msg) {
  if (!cond) throw DimensionError(msg);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// vector helpers
// ---------------------------------------------------------------------------

inline double dot(std::span<const double> x, std::span<const double> y) {
  detail::require(x.size() == y.size(), "dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline double norm2(std::span<const double> x) {
  // scaled accumulation keeps tiny/huge entries from under/overflowing
  double scale = 0.0, ssq = 1.0;
  for (double v : x) {
    if (v == 0.0) continue;
    const double a = std::abs(v);
    if (scale < a) {
      ssq = 1.0 + ssq * (scale / a) * (scale / a);
      scale = a;
    } else {
      ssq += (a / scale) * (a / scale);
    }
  }
  return scale * std::sqrt(ssq);
}

/// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  detail::require(x.size() == y.size(), "axpy: size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scale(double alpha, std::span<double> x) {
  for (double &v : x) v *= alpha;
}

inline Vector subtract(std::span<const double> x, std::span<const double> y) {
  detail::require(x.size() == y.size(), "subtract: size mismatch");
  Vector z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = x[i] - y[i];
  return z;
}

// ---------------------------------------------------------------------------
// DenseColumns
// ---------------------------------------------------------------------------

/// Column-major dense matrix. Used for tall bases (n x s) as well as the
/// small square matrices of the recycling algebra.
class DenseColumns {
 public:
  DenseColumns() = default;
  DenseColumns(std::size_t n_rows, std::size_t n_cols)
      : n_rows_(n_rows), n_cols_(n_cols), values_(n_rows * n_cols, 0.0) {}
  DenseColumns(std::size_t n_rows, std::size_t n_cols, std::vector<double> values)
      : n_rows_(n_rows), n_cols_(n_cols), values_(std::move(values)) {
    detail::require(values_.size() == n_rows_ * n_cols_,
                    "DenseColumns: values size != rows*cols");
  }

  static DenseColumns identity(std::size_t n) {
    DenseColumns I(n, n);
    for (std::size_t i = 0; i < n; ++i) I(i, i) = 1.0;
    return I;
  }

  /// builds a matrix from equally sized columns
  static DenseColumns from_columns(std::span<const Vector> cols) {
    if (cols.empty()) return {};
    DenseColumns X(cols.front().size(), cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) {
      detail::require(cols[j].size() == X.n_rows_, "from_columns: ragged columns");
      std::copy(cols[j].begin(), cols[j].end(), X.col(j).begin());
    }
    return X;
  }

  std::size_t n_rows() const noexcept { return n_rows_; }
  std::size_t n_cols() const noexcept { return n_cols_; }
  bool empty() const noexcept { return n_cols_ == 0 || n_rows_ == 0; }

  double &operator()(std::size_t i, std::size_t j) { return values_[i + j * n_rows_]; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i + j * n_rows_]; }

  std::span<double> col(std::size_t j) { return {values_.data() + j * n_rows_, n_rows_}; }
  std::span<const double> col(std::size_t j) const {
    return {values_.data() + j * n_rows_, n_rows_};
  }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  void append_column(std::span<const double> c) {
    if (n_cols_ == 0 && n_rows_ == 0) n_rows_ = c.size();
    detail::require(c.size() == n_rows_, "append_column: size mismatch");
    values_.insert(values_.end(), c.begin(), c.end());
    ++n_cols_;
  }

  /// keeps the first \a k columns
  void truncate_columns(std::size_t k) {
    if (k >= n_cols_) return;
    n_cols_ = k;
    values_.resize(n_rows_ * n_cols_);
  }

  DenseColumns transpose() const {
    DenseColumns T(n_cols_, n_rows_);
    for (std::size_t j = 0; j < n_cols_; ++j)
      for (std::size_t i = 0; i < n_rows_; ++i) T(j, i) = (*this)(i, j);
    return T;
  }

  double frobenius_norm() const { return norm2(values_); }

 private:
  std::size_t n_rows_ = 0;
  std::size_t n_cols_ = 0;
  std::vector<double> values_;
};

/// y = X c
inline Vector multiply(const DenseColumns &X, std::span<const double> c) {
  detail::require(c.size() == X.n_cols(), "multiply: size mismatch");
  Vector y(X.n_rows(), 0.0);
  for (std::size_t j = 0; j < X.n_cols(); ++j)
    if (c[j] != 0.0) axpy(c[j], X.col(j), y);
  return y;
}

/// y = X^T v
inline Vector multiply_transpose(const DenseColumns &X, std::span<const double> v) {
  detail::require(v.size() == X.n_rows(), "multiply_transpose: size mismatch");
  Vector y(X.n_cols());
  for (std::size_t j = 0; j < X.n_cols(); ++j) y[j] = dot(X.col(j), v);
  return y;
}

/// C = X Y
inline DenseColumns multiply(const DenseColumns &X, const DenseColumns &Y) {
  detail::require(X.n_cols() == Y.n_rows(), "multiply: inner dimension mismatch");
  DenseColumns C(X.n_rows(), Y.n_cols());
  for (std::size_t j = 0; j < Y.n_cols(); ++j)
    for (std::size_t k = 0; k < X.n_cols(); ++k) {
      const double y = Y(k, j);
      if (y != 0.0) axpy(y, X.col(k), C.col(j));
    }
  return C;
}

/// G = X^T Y
inline DenseColumns multiply_transpose(const DenseColumns &X, const DenseColumns &Y) {
  detail::require(X.n_rows() == Y.n_rows(), "multiply_transpose: row mismatch");
  DenseColumns G(X.n_cols(), Y.n_cols());
  for (std::size_t j = 0; j < Y.n_cols(); ++j)
    for (std::size_t i = 0; i < X.n_cols(); ++i) G(i, j) = dot(X.col(i), Y.col(j));
  return G;
}

// ---------------------------------------------------------------------------
// CsrMatrix
// ---------------------------------------------------------------------------

/// Compressed sparse row matrix.
///
/// Row \a i owns entries [row_offsets[i], row_offsets[i+1]) of col_indices and
/// values; column indices inside a row are strictly increasing.
struct CsrMatrix {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<std::size_t> row_offsets{0};
  std::vector<std::size_t> col_indices;
  std::vector<double> values;

  std::size_t nnz() const noexcept { return values.size(); }

  /// throws DimensionError if the structural invariants are broken
  void validate() const {
    detail::require(row_offsets.size() == n_rows + 1, "csr: row_offsets size");
    detail::require(row_offsets.front() == 0, "csr: row_offsets[0] != 0");
    detail::require(row_offsets.back() == values.size(), "csr: row_offsets tail != nnz");
    detail::require(col_indices.size() == values.size(), "csr: col/value size mismatch");
    for (std::size_t i = 0; i < n_rows; ++i) {
      detail::require(row_offsets[i] <= row_offsets[i + 1], "csr: offsets decrease");
      for (std::size_t p = row_offsets[i]; p < row_offsets[i + 1]; ++p) {
        detail::require(col_indices[p] < n_cols, "csr: column out of range");
        if (p > row_offsets[i])
          detail::require(col_indices[p - 1] < col_indices[p],
                          "csr: columns not strictly increasing");
      }
    }
  }

  /// entry (i, j), zero if structurally absent
  double at(std::size_t i, std::size_t j) const {
    const auto first = col_indices.begin() + static_cast<std::ptrdiff_t>(row_offsets[i]);
    const auto last = col_indices.begin() + static_cast<std::ptrdiff_t>(row_offsets[i + 1]);
    const auto it = std::lower_bound(first, last, j);
    if (it == last || *it != j) return 0.0;
    return values[static_cast<std::size_t>(it - col_indices.begin())];
  }

  /// builds from (row, col, value) triplets; duplicates are summed
  static CsrMatrix from_triplets(std::size_t n_rows, std::size_t n_cols,
                                 std::vector<std::tuple<std::size_t, std::size_t, double>> t) {
    std::sort(t.begin(), t.end(), [](const auto &a, const auto &b) {
      return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
    });
    CsrMatrix A;
    A.n_rows = n_rows;
    A.n_cols = n_cols;
    A.row_offsets.assign(n_rows + 1, 0);
    for (std::size_t k = 0; k < t.size(); ++k) {
      const auto [i, j, v] = t[k];
      detail::require(i < n_rows && j < n_cols, "from_triplets: index out of range");
      if (!A.col_indices.empty() && k > 0 && std::get<0>(t[k - 1]) == i &&
          std::get<1>(t[k - 1]) == j) {
        A.values.back() += v;
        continue;
      }
      A.col_indices.push_back(j);
      A.values.push_back(v);
      ++A.row_offsets[i + 1];
    }
    std::partial_sum(A.row_offsets.begin(), A.row_offsets.end(), A.row_offsets.begin());
    return A;
  }

  /// builds from a dense matrix, keeping entries with |a_ij| > drop
  static CsrMatrix from_dense(const DenseColumns &D, double drop = 0.0) {
    CsrMatrix A;
    A.n_rows = D.n_rows();
    A.n_cols = D.n_cols();
    A.row_offsets.assign(A.n_rows + 1, 0);
    for (std::size_t i = 0; i < A.n_rows; ++i) {
      for (std::size_t j = 0; j < A.n_cols; ++j)
        if (std::abs(D(i, j)) > drop) {
          A.col_indices.push_back(j);
          A.values.push_back(D(i, j));
        }
      A.row_offsets[i + 1] = A.values.size();
    }
    return A;
  }

  static CsrMatrix identity(std::size_t n) {
    CsrMatrix A;
    A.n_rows = A.n_cols = n;
    A.row_offsets.resize(n + 1);
    std::iota(A.row_offsets.begin(), A.row_offsets.end(), std::size_t{0});
    A.col_indices.resize(n);
    std::iota(A.col_indices.begin(), A.col_indices.end(), std::size_t{0});
    A.values.assign(n, 1.0);
    return A;
  }

  DenseColumns to_dense() const {
    DenseColumns D(n_rows, n_cols);
    for (std::size_t i = 0; i < n_rows; ++i)
      for (std::size_t p = row_offsets[i]; p < row_offsets[i + 1]; ++p)
        D(i, col_indices[p]) = values[p];
    return D;
  }

  double frobenius_norm() const { return norm2(values); }
};

/// y = A x (output overload, no allocation)
inline void spmv(const CsrMatrix &A, std::span<const double> x, std::span<double> y) {
  if (x.size() != A.n_cols || y.size() != A.n_rows)
    throw DimensionError("spmv: dimension mismatch");
  for (std::size_t i = 0; i < A.n_rows; ++i) {
    double s = 0.0;
    for (std::size_t p = A.row_offsets[i]; p < A.row_offsets[i + 1]; ++p)
      s += A.values[p] * x[A.col_indices[p]];
    y[i] = s;
  }
}

inline Vector spmv(const CsrMatrix &A, std::span<const double> x) {
  Vector y(A.n_rows);
  spmv(A, x, y);
  return y;
}

/// y = A^T x
inline Vector spmv_transpose(const CsrMatrix &A, std::span<const double> x) {
  if (x.size() != A.n_rows) throw DimensionError("spmv_transpose: dimension mismatch");
  Vector y(A.n_cols, 0.0);
  for (std::size_t i = 0; i < A.n_rows; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    for (std::size_t p = A.row_offsets[i]; p < A.row_offsets[i + 1]; ++p)
      y[A.col_indices[p]] += A.values[p] * xi;
  }
  return y;
}

/// explicit transpose, used by tests as an independent route to A^T x
inline CsrMatrix transpose(const CsrMatrix &A) {
  std::vector<std::tuple<std::size_t, std::size_t, double>> t;
  t.reserve(A.nnz());
  for (std::size_t i = 0; i < A.n_rows; ++i)
    for (std::size_t p = A.row_offsets[i]; p < A.row_offsets[i + 1]; ++p)
      t.emplace_back(A.col_indices[p], i, A.values[p]);
  return CsrMatrix::from_triplets(A.n_cols, A.n_rows, std::move(t));
}

/// W = A V column by column
inline DenseColumns spmm(const CsrMatrix &A, const DenseColumns &V) {
  DenseColumns W(A.n_rows, V.n_cols());
  for (std::size_t j = 0; j < V.n_cols(); ++j) spmv(A, V.col(j), W.col(j));
  return W;
}

// ---------------------------------------------------------------------------
// modified Gram-Schmidt
// ---------------------------------------------------------------------------

struct Orthonormalized {
  DenseColumns Q;
  std::size_t rank = 0;
};

/// Orthonormalizes the columns of \a X left to right.
///
/// A column is projected once more when its norm falls below 1/sqrt(2) of the
/// pre-projection norm. Columns whose remainder is at most
/// drop_tol * ||original column|| are dropped.
inline Orthonormalized mgs_orthonormalize(const DenseColumns &X, double drop_tol = 1e-12) {
  detail::require(X.n_rows() >= X.n_cols(), "mgs_orthonormalize: needs n_rows >= n_cols");
  Orthonormalized out;
  out.Q = DenseColumns(X.n_rows(), 0);
  Vector v(X.n_rows());
  for (std::size_t j = 0; j < X.n_cols(); ++j) {
    std::copy(X.col(j).begin(), X.col(j).end(), v.begin());
    const double original = norm2(v);
    if (original == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass) {
      const double before = norm2(v);
      for (std::size_t k = 0; k < out.rank; ++k) axpy(-dot(out.Q.col(k), v), out.Q.col(k), v);
      const double after = norm2(v);
      if (after >= before / std::sqrt(2.0)) break;
    }
    const double nv = norm2(v);
    if (nv <= drop_tol * original) continue;
    scale(1.0 / nv, v);
    out.Q.append_column(v);
    ++out.rank;
  }
  return out;
}

// ---------------------------------------------------------------------------
// dense LU with partial pivoting
// ---------------------------------------------------------------------------

struct LuFactors {
  std::size_t dim = 0;
  DenseColumns lu;                ///< unit-lower L below the diagonal, U on and above
  std::vector<std::size_t> perm;  ///< row i of PA is row perm[i] of A
  double min_pivot = 0.0;         ///< smallest |u_ii|
  double max_pivot = 0.0;         ///< largest |u_ii|
};

inline LuFactors lu_factor(const DenseColumns &M) {
  detail::require(M.n_rows() == M.n_cols(), "lu_factor: matrix must be square");
  const std::size_t n = M.n_rows();
  LuFactors F;
  F.dim = n;
  F.lu = M;
  F.perm.resize(n);
  std::iota(F.perm.begin(), F.perm.end(), std::size_t{0});
  F.min_pivot = std::numeric_limits<double>::infinity();
  F.max_pivot = 0.0;
  auto &a = F.lu;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(p, k))) p = i;
    if (a(p, k) == 0.0)
      throw SingularMatrixError("lu_factor: zero pivot in column " + std::to_string(k), k);
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(p, j));
      std::swap(F.perm[k], F.perm[p]);
    }
    const double piv = a(k, k);
    F.min_pivot = std::min(F.min_pivot, std::abs(piv));
    F.max_pivot = std::max(F.max_pivot, std::abs(piv));
    for (std::size_t i = k + 1; i < n; ++i) a(i, k) /= piv;
    for (std::size_t j = k + 1; j < n; ++j) {
      const double akj = a(k, j);
      if (akj == 0.0) continue;
      for (std::size_t i = k + 1; i < n; ++i) a(i, j) -= a(i, k) * akj;
    }
  }
  if (n == 0) F.min_pivot = 0.0;
  return F;
}

inline Vector lu_solve(const LuFactors &F, std::span<const double> b) {
  detail::require(b.size() == F.dim, "lu_solve: dimension mismatch");
  const std::size_t n = F.dim;
  const auto &a = F.lu;
  Vector x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[F.perm[i]];
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = j + 1; i < n; ++i) x[i] -= a(i, j) * x[j];
  for (std::size_t j = n; j-- > 0;) {
    x[j] /= a(j, j);
    for (std::size_t i = 0; i < j; ++i) x[i] -= a(i, j) * x[j];
  }
  return x;
}

// ---------------------------------------------------------------------------
// thin SVD
// ---------------------------------------------------------------------------

struct ThinSvd {
  DenseColumns left_vectors;           ///< n x rank, for sigma_i > rank_tol * sigma_max
  std::vector<double> singular_values; ///< all m values, non-increasing
  DenseColumns right_vectors;          ///< m x m, column i pairs with sigma_i
  std::size_t rank = 0;
};

struct SymmetricEigen {
  std::vector<double> values;  ///< descending
  DenseColumns vectors;        ///< column i pairs with values[i]
};

/// Cyclic Jacobi eigensolver for a small symmetric matrix. Sweeps until the
/// off-diagonal Frobenius norm is at most rel_tol * ||G||_F.
inline SymmetricEigen jacobi_eigen(DenseColumns G, double rel_tol = 1e-14,
                                   int max_sweeps = 100) {
  detail::require(G.n_rows() == G.n_cols(), "jacobi_eigen: matrix must be square");
  const std::size_t m = G.n_rows();
  DenseColumns V = DenseColumns::identity(m);
  const double gnorm = G.frobenius_norm();
  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t i = 0; i < m; ++i)
        if (i != j) s += G(i, j) * G(i, j);
    return std::sqrt(s);
  };
  for (int sweep = 0; sweep < max_sweeps && off_norm() > rel_tol * gnorm; ++sweep) {
    for (std::size_t p = 0; p + 1 < m; ++p)
      for (std::size_t q = p + 1; q < m; ++q) {
        const double gpq = G(p, q);
        if (gpq == 0.0) continue;
        const double theta = (G(q, q) - G(p, p)) / (2.0 * gpq);
        const double t = std::copysign(1.0, theta) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < m; ++k) {
          const double gkp = G(k, p), gkq = G(k, q);
          G(k, p) = c * gkp - s * gkq;
          G(k, q) = s * gkp + c * gkq;
        }
        for (std::size_t k = 0; k < m; ++k) {
          const double gpk = G(p, k), gqk = G(q, k);
          G(p, k) = c * gpk - s * gqk;
          G(q, k) = s * gpk + c * gqk;
        }
        for (std::size_t k = 0; k < m; ++k) {
          const double vkp = V(k, p), vkq = V(k, q);
          V(k, p) = c * vkp - s * vkq;
          V(k, q) = s * vkp + c * vkq;
        }
      }
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return G(a, a) > G(b, b); });
  SymmetricEigen out;
  out.values.resize(m);
  out.vectors = DenseColumns(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    out.values[i] = G(order[i], order[i]);
    std::copy(V.col(order[i]).begin(), V.col(order[i]).end(), out.vectors.col(i).begin());
  }
  return out;
}

/// Thin SVD of a tall matrix through the eigendecomposition of X^T X.
///
/// Left vectors are formed as X v_i / sigma_i for sigma_i > rank_tol *
/// sigma_max and then passed through one MGS sweep; the rest are omitted.
/// Through X^T X, sigma below ~1e-8 sigma_max is noise, so rank_tol is
/// floored at gram_rank_floor.
inline constexpr double gram_rank_floor = 1e-7;

inline ThinSvd thin_svd(const DenseColumns &X, double rank_tol = 1e-12) {
  rank_tol = std::max(rank_tol, gram_rank_floor);
  detail::require(X.n_cols() >= 1 && X.n_rows() >= X.n_cols(),
                  "thin_svd: needs n_rows >= n_cols >= 1");
  const auto eig = jacobi_eigen(multiply_transpose(X, X));
  const std::size_t m = X.n_cols();
  ThinSvd svd;
  svd.singular_values.resize(m);
  for (std::size_t i = 0; i < m; ++i)
    svd.singular_values[i] = std::sqrt(std::max(eig.values[i], 0.0));
  // eigenvalues are sorted, but clamping can break ties into tiny inversions
  for (std::size_t i = 1; i < m; ++i)
    svd.singular_values[i] = std::min(svd.singular_values[i], svd.singular_values[i - 1]);
  svd.right_vectors = eig.vectors;

  const double smax = svd.singular_values.front();
  DenseColumns U(X.n_rows(), 0);
  std::size_t kept = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double s = svd.singular_values[i];
    if (!(s > rank_tol * smax) || s == 0.0) break;
    Vector u = multiply(X, eig.vectors.col(i));
    scale(1.0 / s, u);
    U.append_column(u);
    ++kept;
  }
  auto orth = mgs_orthonormalize(U.n_cols() ? U : DenseColumns(X.n_rows(), 0), 1e-8);
  if (orth.rank == kept) {
    svd.left_vectors = std::move(orth.Q);
    svd.rank = kept;
  } else {
    svd.left_vectors = std::move(U);
    svd.rank = kept;
  }
  if (svd.left_vectors.n_rows() == 0) svd.left_vectors = DenseColumns(X.n_rows(), 0);
  return svd;
}

/// sum_{i<s} sigma_i u_i v_i^T
inline DenseColumns truncated_reconstruction(const ThinSvd &svd, std::size_t s) {
  const std::size_t n = svd.left_vectors.n_rows();
  const std::size_t m = svd.right_vectors.n_rows();
  DenseColumns Y(n, m);
  s = std::min(s, svd.rank);
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t j = 0; j < m; ++j)
      axpy(svd.singular_values[i] * svd.right_vectors(j, i), svd.left_vectors.col(i), Y.col(j));
  return Y;
}

}  // namespace krecycle
