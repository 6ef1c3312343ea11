#pragma once

/// \file krecycle/recycle.hpp
/// \brief Recycling-space algebra: the orthogonal, oblique and least-squares
///        projectors, the six augmented/deflated GMRES variants, spectrum
///        shifting, and extrapolated or projected initial guesses.

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "krecycle/krylov.hpp"
#include "krecycle/precond.hpp"
#include "krecycle/sparsela.hpp"

namespace krecycle {

/// E_s = V^T A V is too close to singular to factor reliably.
class SingularRestrictionError : public std::runtime_error {
 public:
  SingularRestrictionError(const std::string &what, double pivot_ratio)
      : std::runtime_error(what), pivot_ratio_(pivot_ratio) {}
  /// smallest / largest pivot magnitude
  double pivot_ratio() const noexcept { return pivot_ratio_; }

 private:
  double pivot_ratio_;
};

enum class RecycleMethod {
  NoRecycle,
  AugmentedOrthogonal,
  AugmentedOblique,
  AugmentedLS,
  DeflatedOrthogonal,
  DeflatedOblique,
  DeflatedLS,
};

inline constexpr std::array<RecycleMethod, 7> all_recycle_methods{
    RecycleMethod::NoRecycle,          RecycleMethod::AugmentedOrthogonal,
    RecycleMethod::AugmentedOblique,   RecycleMethod::AugmentedLS,
    RecycleMethod::DeflatedOrthogonal, RecycleMethod::DeflatedOblique,
    RecycleMethod::DeflatedLS};

enum class ProjectorKind { Orthogonal, Oblique, LeastSquares };

inline bool is_deflated(RecycleMethod m) {
  return m == RecycleMethod::DeflatedOrthogonal || m == RecycleMethod::DeflatedOblique ||
         m == RecycleMethod::DeflatedLS;
}

inline std::optional<ProjectorKind> projector_of(RecycleMethod m) {
  switch (m) {
    case RecycleMethod::AugmentedOrthogonal:
    case RecycleMethod::DeflatedOrthogonal: return ProjectorKind::Orthogonal;
    case RecycleMethod::AugmentedOblique:
    case RecycleMethod::DeflatedOblique: return ProjectorKind::Oblique;
    case RecycleMethod::AugmentedLS:
    case RecycleMethod::DeflatedLS: return ProjectorKind::LeastSquares;
    case RecycleMethod::NoRecycle: break;
  }
  return std::nullopt;
}

inline bool needs_ls_factors(RecycleMethod m) {
  return projector_of(m) == ProjectorKind::LeastSquares;
}

inline std::string_view to_string(RecycleMethod m) {
  switch (m) {
    case RecycleMethod::NoRecycle: return "no_recycle";
    case RecycleMethod::AugmentedOrthogonal: return "augmented_orthogonal";
    case RecycleMethod::AugmentedOblique: return "augmented_oblique";
    case RecycleMethod::AugmentedLS: return "augmented_ls";
    case RecycleMethod::DeflatedOrthogonal: return "deflated_orthogonal";
    case RecycleMethod::DeflatedOblique: return "deflated_oblique";
    case RecycleMethod::DeflatedLS: return "deflated_ls";
  }
  return "?";
}

inline RecycleMethod recycle_method_from_string(std::string_view s) {
  for (auto m : all_recycle_methods)
    if (to_string(m) == s) return m;
  throw std::invalid_argument("unknown recycle method '" + std::string(s) + "'");
}

struct InitialGuess {
  enum class Kind { Zero, Extrapolate, Project };
  Kind kind = Kind::Zero;
  int order = 1;  ///< extrapolation order, 1..3

  static InitialGuess zero() { return {Kind::Zero, 1}; }
  static InitialGuess project() { return {Kind::Project, 1}; }
  static InitialGuess extrapolate(int order) {
    if (order < 1 || order > 3)
      throw std::invalid_argument("extrapolation order must be 1, 2 or 3");
    return {Kind::Extrapolate, order};
  }
  friend bool operator==(const InitialGuess &, const InitialGuess &) = default;
};

/// Which side of the preconditioner the projector sits on. The default is
/// M^{-1} P A: W and E come from the unpreconditioned A, and with P applied
/// after M^{-1} the projected system is generally inconsistent.
enum class CompositionOrder {
  ProjectorAfterPreconditioner,  ///< P M^{-1} A
  ProjectorBeforePreconditioner  ///< M^{-1} P A
};

/// Orthonormal basis V, W = A V and the factored restrictions.
class RecyclingSpace {
 public:
  const DenseColumns &V() const noexcept { return V_; }
  const DenseColumns &W() const noexcept { return W_; }
  const DenseColumns &E() const noexcept { return E_; }
  const LuFactors &E_lu() const noexcept { return E_lu_; }
  bool has_ls() const noexcept { return N_lu_.has_value(); }
  const LuFactors &N_lu() const {
    if (!N_lu_) throw std::logic_error("RecyclingSpace: least-squares factors were not built");
    return *N_lu_;
  }
  std::size_t s() const noexcept { return V_.n_cols(); }
  std::size_t dim() const noexcept { return V_.n_rows(); }

  /// V E^{-1} V^T x
  Vector oblique_lift(std::span<const double> x) const {
    return multiply(V_, lu_solve(E_lu_, multiply_transpose(V_, x)));
  }

  friend RecyclingSpace build_space(const CsrMatrix &, const DenseColumns &, bool, double);

 private:
  DenseColumns V_, W_, E_;
  LuFactors E_lu_;
  std::optional<LuFactors> N_lu_;
};

/// Orthonormalizes \a raw_basis (dropping dependent columns), forms W = A V,
/// and factors E = V^T W (and W^T W when \a needs_ls).
///
/// Throws SingularRestrictionError if min |pivot| <= singular_tol * scale,
/// where scale is the largest pivot or the largest entry bound from the
/// column norms of W (so a 1 x 1 restriction is still checked).
inline RecyclingSpace build_space(const CsrMatrix &A, const DenseColumns &raw_basis,
                                  bool needs_ls, double singular_tol = 1e-12) {
  if (raw_basis.n_cols() == 0) throw std::invalid_argument("build_space: empty basis");
  if (raw_basis.n_rows() != A.n_rows || A.n_rows != A.n_cols)
    throw DimensionError("build_space: basis rows must match the square operator");
  RecyclingSpace S;
  auto orth = mgs_orthonormalize(raw_basis);
  if (orth.rank == 0) throw std::invalid_argument("build_space: basis is numerically zero");
  S.V_ = std::move(orth.Q);
  S.W_ = spmm(A, S.V_);
  S.E_ = multiply_transpose(S.V_, S.W_);
  double wmax = 0.0;
  for (std::size_t j = 0; j < S.W_.n_cols(); ++j) wmax = std::max(wmax, norm2(S.W_.col(j)));
  auto factor_checked = [singular_tol](const DenseColumns &M, const char *name, double bound) {
    LuFactors F;
    try {
      F = lu_factor(M);
    } catch (const SingularMatrixError &) {
      throw SingularRestrictionError(std::string("build_space: ") + name + " is singular", 0.0);
    }
    const double ratio = F.min_pivot / std::max(F.max_pivot, bound);
    if (ratio <= singular_tol)
      throw SingularRestrictionError(std::string("build_space: ") + name +
                                         " is numerically singular (pivot ratio " +
                                         std::to_string(ratio) + ")",
                                     ratio);
    return F;
  };
  S.E_lu_ = factor_checked(S.E_, "V^T A V", wmax);
  if (needs_ls) S.N_lu_ = factor_checked(multiply_transpose(S.W_, S.W_), "W^T W", wmax * wmax);
  return S;
}

/// (I - V V^T) x
inline Vector proj_orthogonal(const RecyclingSpace &S, std::span<const double> x) {
  Vector y(x.begin(), x.end());
  const auto c = multiply_transpose(S.V(), x);
  for (std::size_t j = 0; j < S.s(); ++j) axpy(-c[j], S.V().col(j), y);
  return y;
}

/// (I - A V E^{-1} V^T) x
inline Vector proj_oblique(const RecyclingSpace &S, std::span<const double> x) {
  Vector y(x.begin(), x.end());
  const auto c = lu_solve(S.E_lu(), multiply_transpose(S.V(), x));
  for (std::size_t j = 0; j < S.s(); ++j) axpy(-c[j], S.W().col(j), y);
  return y;
}

/// (I - W (W^T W)^{-1} W^T) x
inline Vector proj_ls(const RecyclingSpace &S, std::span<const double> x) {
  Vector y(x.begin(), x.end());
  const auto c = lu_solve(S.N_lu(), multiply_transpose(S.W(), x));
  for (std::size_t j = 0; j < S.s(); ++j) axpy(-c[j], S.W().col(j), y);
  return y;
}

inline Vector apply_projector(ProjectorKind kind, const RecyclingSpace &S,
                              std::span<const double> x) {
  switch (kind) {
    case ProjectorKind::Orthogonal: return proj_orthogonal(S, x);
    case ProjectorKind::Oblique: return proj_oblique(S, x);
    case ProjectorKind::LeastSquares: return proj_ls(S, x);
  }
  throw std::logic_error("apply_projector: bad kind");
}

/// (I - A V E^{-1} V^T + lambda* V E^{-1} V^T) x
inline Vector shift_spectrum_apply(const RecyclingSpace &S, double lambda_star,
                                   std::span<const double> x) {
  Vector y(x.begin(), x.end());
  const auto c = lu_solve(S.E_lu(), multiply_transpose(S.V(), x));
  for (std::size_t j = 0; j < S.s(); ++j) {
    axpy(-c[j], S.W().col(j), y);
    axpy(lambda_star * c[j], S.V().col(j), y);
  }
  return y;
}

/// Polynomial extrapolation from previous solutions, newest first.
///
/// order 1: 2x1 - x2; order 2: 3x1 - 3x2 + x3; order 3: 4x1 - 6x2 + 4x3 - x4.
/// Falls back to the highest order the history supports; a single entry is
/// returned unchanged and an empty history yields an empty vector.
inline Vector initial_guess_extrapolate(std::span<const Vector> history, int order) {
  if (order < 1 || order > 3) throw std::invalid_argument("extrapolation order must be 1..3");
  if (history.empty()) return {};
  const int usable = std::min<int>(order, static_cast<int>(history.size()) - 1);
  if (usable <= 0) return history.front();
  static constexpr double coeff[3][4] = {
      {2.0, -1.0, 0.0, 0.0}, {3.0, -3.0, 1.0, 0.0}, {4.0, -6.0, 4.0, -1.0}};
  Vector x(history.front().size(), 0.0);
  for (int k = 0; k <= usable; ++k) {
    if (history[static_cast<std::size_t>(k)].size() != x.size())
      throw DimensionError("initial_guess_extrapolate: ragged history");
    axpy(coeff[usable - 1][k], history[static_cast<std::size_t>(k)], x);
  }
  return x;
}

/// x0 = V E^{-1} V^T b, so that V^T (b - A x0) = 0
inline Vector initial_guess_project(const RecyclingSpace &S, std::span<const double> b) {
  return S.oblique_lift(b);
}

/// Solves A x = b with GMRES accelerated by the recycling space \a S.
///
/// The Krylov operator is M^{-1} P A (or P M^{-1} A); the Krylov start vector
/// is M^{-1} r0 for augmented methods and the projected one for deflated
/// methods. Each cycle ends with the correction x += V E^{-1} V^T (b - A x),
/// which is also what the true-residual monitor sees. \a history holds
/// previous solutions newest first and is only read for extrapolation.
template <class Precond>
std::pair<Vector, SolveReport> recycled_solve(
    const CsrMatrix &A, std::span<const double> b, const RecyclingSpace *S, RecycleMethod method,
    InitialGuess guess, const Precond &precond, const GmresConfig &cfg,
    std::span<const Vector> history = {},
    CompositionOrder order = CompositionOrder::ProjectorBeforePreconditioner) {
  cfg.validate();
  const std::size_t n = A.n_rows;
  if (A.n_cols != n || b.size() != n) throw DimensionError("recycled_solve: dimension mismatch");
  const auto kind = projector_of(method);
  if (kind && !S) throw std::invalid_argument("recycled_solve: method needs a recycling space");
  if (S && S->dim() != n) throw DimensionError("recycled_solve: space dimension mismatch");
  if (kind == ProjectorKind::LeastSquares && !S->has_ls())
    throw std::logic_error("recycled_solve: least-squares factors were not built");

  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    SolveReport rep;
    rep.converged = true;
    return {Vector(n, 0.0), rep};
  }

  Vector x0(n, 0.0);
  switch (guess.kind) {
    case InitialGuess::Kind::Zero: break;
    case InitialGuess::Kind::Extrapolate:
      if (!history.empty()) x0 = initial_guess_extrapolate(history, guess.order);
      if (x0.size() != n) throw DimensionError("recycled_solve: history dimension mismatch");
      break;
    case InitialGuess::Kind::Project:
      if (S) x0 = initial_guess_project(*S, b);
      break;
  }

  const bool after = order == CompositionOrder::ProjectorAfterPreconditioner;
  auto project = [&](std::span<const double> v) { return apply_projector(*kind, *S, v); };

  Vector t(n), u(n);
  LinearOperator op(n, [&](std::span<const double> in, std::span<double> out) {
    spmv(A, in, t);
    if (!kind) {
      precond.apply(t, out);
    } else if (after) {
      precond.apply(t, u);
      const auto p = project(u);
      std::copy(p.begin(), p.end(), out.begin());
    } else {
      const auto p = project(t);
      precond.apply(p, out);
    }
  });

  auto residual = [&](std::span<const double> x) {
    Vector r = spmv(A, x);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
    return r;
  };
  auto start = [&](std::span<const double> x) {
    Vector r = residual(x);
    Vector c(n);
    if (kind && is_deflated(method)) {
      if (after) {
        precond.apply(r, c);
        return project(c);
      }
      precond.apply(project(r), c);
      return c;
    }
    precond.apply(r, c);
    return c;
  };

  ResidualCallback callback;
  if (kind) {
    callback.relative_residual = [&](std::span<const double> x) {
      return norm2(proj_oblique(*S, residual(x))) / bnorm;
    };
    callback.finalize = [&](Vector &x) { axpy(1.0, S->oblique_lift(residual(x)), x); };
  } else {
    callback.relative_residual = [&](std::span<const double> x) {
      return norm2(residual(x)) / bnorm;
    };
  }

  Vector pb(n);
  precond.apply(b, pb);
  auto [x, report] = solve_restarted_from(op, start, x0, cfg, callback, norm2(pb));
  report.true_relative_residual = norm2(residual(x)) / bnorm;
  // the monitor sees the projected residual; re-check the plain one and resume
  // while the two disagree across the tolerance
  for (int extra = 0; report.converged && report.true_relative_residual > cfg.rel_tol &&
                      report.restarts < cfg.max_restarts && extra < 3;
       ++extra) {
    auto [x2, more] = solve_restarted_from(op, start, x, cfg, callback, norm2(pb));
    x = std::move(x2);
    report.iterations += more.iterations;
    report.restarts += more.restarts + 1;
    for (auto &c : more.cycle_starts) c += report.residual_history.size();
    report.cycle_starts.insert(report.cycle_starts.end(), more.cycle_starts.begin(),
                               more.cycle_starts.end());
    report.residual_history.insert(report.residual_history.end(), more.residual_history.begin(),
                                   more.residual_history.end());
    report.wall_time += more.wall_time;
    report.converged = more.converged;
    report.true_relative_residual = norm2(residual(x)) / bnorm;
  }
  report.converged = report.true_relative_residual <= cfg.rel_tol;
  return {std::move(x), std::move(report)};
}

}  // namespace krecycle
