#pragma once

/// \file krecycle/krylov.hpp
/// \brief Restarted GMRES (Arnoldi with modified Gram-Schmidt, Givens least
///        squares) over an abstract linear operator.

#include <chrono>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "krecycle/sparsela.hpp"

namespace krecycle {

/// anything with dim() and apply(in, out)
template <class Op>
concept LinearOperatorLike = requires(const Op &op, std::span<const double> in,
                                      std::span<double> out) {
  { op.dim() } -> std::convertible_to<std::size_t>;
  op.apply(in, out);
};

/// Type-erased square linear operator.
class LinearOperator {
 public:
  using ApplyFn = std::function<void(std::span<const double>, std::span<double>)>;

  LinearOperator() = default;
  LinearOperator(std::size_t dim, ApplyFn fn) : dim_(dim), fn_(std::move(fn)) {}

  std::size_t dim() const noexcept { return dim_; }
  void apply(std::span<const double> in, std::span<double> out) const { fn_(in, out); }
  Vector operator()(std::span<const double> in) const {
    Vector out(dim_);
    fn_(in, out);
    return out;
  }

 private:
  std::size_t dim_ = 0;
  ApplyFn fn_;
};

inline LinearOperator as_operator(const CsrMatrix &A) {
  if (A.n_rows != A.n_cols) throw DimensionError("as_operator: matrix must be square");
  return {A.n_rows, [&A](std::span<const double> in, std::span<double> out) { spmv(A, in, out); }};
}

inline LinearOperator as_operator(const DenseColumns &A) {
  if (A.n_rows() != A.n_cols()) throw DimensionError("as_operator: matrix must be square");
  return {A.n_rows(), [&A](std::span<const double> in, std::span<double> out) {
            std::fill(out.begin(), out.end(), 0.0);
            for (std::size_t j = 0; j < A.n_cols(); ++j) axpy(in[j], A.col(j), out);
          }};
}

/// When the true residual is evaluated.
enum class ResidualMonitor {
  CycleEnd,       ///< only at the end of each Arnoldi cycle
  EveryIteration  ///< after every Arnoldi step, so the cycle can stop early
};

struct GmresConfig {
  std::size_t restart = 30;           ///< Krylov dimension per cycle
  double rel_tol = 1e-8;
  std::size_t max_restarts = 200;
  double happy_breakdown_tol = 1e-14;
  ResidualMonitor monitor = ResidualMonitor::EveryIteration;
  /// With a cycle-end correction present, restart as soon as one step fails to
  /// shrink the monitored residual by this factor. 0 disables.
  double stagnation_factor = 0.5;

  void validate() const {
    if (restart < 1) throw std::invalid_argument("GmresConfig: restart must be >= 1");
    if (!(rel_tol > 0.0 && rel_tol < 1.0))
      throw std::invalid_argument("GmresConfig: rel_tol must lie in (0, 1)");
    if (!(happy_breakdown_tol >= 0.0))
      throw std::invalid_argument("GmresConfig: happy_breakdown_tol must be >= 0");
    if (!(stagnation_factor >= 0.0 && stagnation_factor <= 1.0))
      throw std::invalid_argument("GmresConfig: stagnation_factor must lie in [0, 1]");
  }
};

struct SolveReport {
  std::size_t iterations = 0;          ///< total inner iterations
  std::size_t restarts = 0;            ///< cycles started after the first
  std::vector<double> residual_history;///< inner (preconditioned) estimate per iteration
  std::vector<std::size_t> cycle_starts; ///< index into residual_history where each cycle begins
  double true_relative_residual = 0.0;
  bool converged = false;
  double wall_time = 0.0;              ///< seconds
};

/// Hooks through which the restart driver sees the original system.
struct ResidualCallback {
  /// true relative residual of x as it would be after finalize()
  std::function<double(std::span<const double>)> relative_residual;
  /// optional in-place correction applied at the end of every cycle
  std::function<void(Vector &)> finalize;
};

struct CycleResult {
  Vector x;
  SolveReport report;  ///< fragment for this cycle only
  double estimate = 0.0;  ///< final least-squares residual estimate
  bool happy_breakdown = false;
  bool monitor_converged = false;  ///< stopped because the monitor met rel_tol
  bool stagnated = false;          ///< stopped early on a stalled monitor
};

namespace detail {

/// Generates the rotation zeroing b in (a, b).
inline void givens(double a, double b, double &c, double &s) {
  if (b == 0.0) {
    c = 1.0;
    s = 0.0;
  } else if (std::abs(b) > std::abs(a)) {
    const double t = a / b;
    s = 1.0 / std::sqrt(1.0 + t * t);
    c = s * t;
  } else {
    const double t = b / a;
    c = 1.0 / std::sqrt(1.0 + t * t);
    s = c * t;
  }
}

}  // namespace detail

/// One Arnoldi cycle starting from the residual-like vector \a r0.
///
/// Minimizes ||r0 - op z|| over z in K_k(op, r0) and returns x0 + z. The cycle
/// stops at `cfg.restart` steps, on happy breakdown, and either when the
/// least-squares estimate drops to rel_tol * reference_norm or, if \a monitor
/// is set, when it reports a relative residual <= rel_tol. With
/// \a stagnation_restart the cycle also ends when a step barely moves the
/// monitored residual.
template <LinearOperatorLike Op>
CycleResult gmres_cycle_from_residual(const Op &op, std::span<const double> r0,
                                      std::span<const double> x0, const GmresConfig &cfg,
                                      double reference_norm,
                                      const std::function<double(std::span<const double>)> &monitor = {},
                                      bool stagnation_restart = false) {
  const std::size_t n = op.dim();
  if (r0.size() != n || x0.size() != n) throw DimensionError("gmres_cycle: dimension mismatch");
  CycleResult out;
  out.x.assign(x0.begin(), x0.end());
  const double beta = norm2(r0);
  out.estimate = beta;
  if (beta == 0.0) return out;

  const std::size_t kmax = std::min(cfg.restart, n);
  DenseColumns Q(n, kmax + 1);
  DenseColumns H(kmax + 1, kmax);
  std::vector<double> cs(kmax), sn(kmax), g(kmax + 1, 0.0);
  g[0] = beta;
  for (std::size_t i = 0; i < n; ++i) Q(i, 0) = r0[i] / beta;

  auto solve_coefficients = [&](std::size_t k) {
    std::vector<double> y(g.begin(), g.begin() + static_cast<std::ptrdiff_t>(k));
    for (std::size_t i = k; i-- > 0;) {
      for (std::size_t j = i + 1; j < k; ++j) y[i] -= H(i, j) * y[j];
      y[i] /= H(i, i);
    }
    return y;
  };
  auto iterate = [&](std::size_t k) {
    Vector x(x0.begin(), x0.end());
    const auto y = solve_coefficients(k);
    for (std::size_t j = 0; j < k; ++j) axpy(y[j], Q.col(j), x);
    return x;
  };

  // with a monitor, the cycle returns the iterate with the smallest monitored
  // residual so an inconsistent projected system cannot make things worse
  std::size_t best_k = 0;
  double best_val = monitor ? monitor(x0) : 0.0;
  double prev_val = best_val;

  Vector w(n);
  std::size_t k = 0;
  while (k < kmax) {
    const std::size_t j = k;
    op.apply(Q.col(j), w);
    // MGS with one conditional second pass
    for (int pass = 0; pass < 2; ++pass) {
      const double before = norm2(w);
      for (std::size_t i = 0; i <= j; ++i) {
        const double h = dot(Q.col(i), w);
        H(i, j) += h;
        axpy(-h, Q.col(i), w);
      }
      if (norm2(w) >= before / std::sqrt(2.0)) break;
    }
    const double hnext = norm2(w);
    H(j + 1, j) = hnext;
    if (hnext != 0.0)
      for (std::size_t i = 0; i < n; ++i) Q(i, j + 1) = w[i] / hnext;

    for (std::size_t i = 0; i < j; ++i) {
      const double a = H(i, j), b = H(i + 1, j);
      H(i, j) = cs[i] * a + sn[i] * b;
      H(i + 1, j) = -sn[i] * a + cs[i] * b;
    }
    detail::givens(H(j, j), H(j + 1, j), cs[j], sn[j]);
    H(j, j) = cs[j] * H(j, j) + sn[j] * H(j + 1, j);
    H(j + 1, j) = 0.0;
    g[j + 1] = -sn[j] * g[j];
    g[j] = cs[j] * g[j];

    ++k;
    out.estimate = std::abs(g[k]);
    out.report.residual_history.push_back(out.estimate);
    ++out.report.iterations;

    if (H(j, j) == 0.0) {
      // singular projected operator: keep the previous minimizer
      --k;
      out.happy_breakdown = true;
      break;
    }
    if (monitor) {
      const double val = monitor(iterate(k));
      if (val < best_val) {
        best_val = val;
        best_k = k;
      }
      if (val <= cfg.rel_tol) {
        out.monitor_converged = true;
        break;
      }
      if (val > 1e2 * best_val) break;  // diverging
      if (stagnation_restart && best_k > 0 && cfg.stagnation_factor > 0.0 &&
          val > cfg.stagnation_factor * prev_val) {
        out.stagnated = true;
        break;
      }
      prev_val = val;
    }
    if (hnext <= cfg.happy_breakdown_tol * beta) {
      out.happy_breakdown = true;
      break;
    }
    // with a monitor the estimate (possibly of a preconditioned residual)
    // does not decide convergence
    if (!monitor && out.estimate <= cfg.rel_tol * reference_norm) break;
  }
  if (monitor) k = best_k;
  if (k > 0) out.x = iterate(k);
  return out;
}

/// Single GMRES cycle for op x = rhs from x0.
template <LinearOperatorLike Op>
CycleResult gmres_cycle(const Op &op, std::span<const double> rhs, std::span<const double> x0,
                        const GmresConfig &cfg) {
  cfg.validate();
  if (rhs.size() != op.dim() || x0.size() != op.dim())
    throw DimensionError("gmres_cycle: dimension mismatch");
  Vector r0(op.dim());
  op.apply(x0, r0);
  for (std::size_t i = 0; i < r0.size(); ++i) r0[i] = rhs[i] - r0[i];
  const double bnorm = norm2(rhs);
  auto out = gmres_cycle_from_residual(op, r0, x0, cfg, bnorm > 0.0 ? bnorm : norm2(r0));
  out.report.converged = bnorm == 0.0 ? out.estimate == 0.0
                                      : out.estimate <= cfg.rel_tol * bnorm;
  out.report.true_relative_residual = bnorm > 0.0 ? out.estimate / bnorm : 0.0;
  return out;
}

/// Restart driver over a caller-defined cycle start vector.
///
/// \a start(x) returns the vector the next cycle's Krylov space is built on.
/// Convergence is declared only on callback.relative_residual, evaluated at
/// every cycle end (and after every step in EveryIteration mode).
template <LinearOperatorLike Op, class StartFn>
std::pair<Vector, SolveReport> solve_restarted_from(const Op &op, StartFn &&start,
                                                    std::span<const double> x0,
                                                    const GmresConfig &cfg,
                                                    const ResidualCallback &callback,
                                                    double reference_norm) {
  cfg.validate();
  if (!callback.relative_residual)
    throw std::invalid_argument("solve_restarted: residual callback is required");
  const auto t0 = std::chrono::steady_clock::now();
  SolveReport report;
  Vector x(x0.begin(), x0.end());

  double rel = callback.relative_residual(x);
  if (rel <= cfg.rel_tol) {
    if (callback.finalize) callback.finalize(x);
    report.true_relative_residual = callback.relative_residual(x);
    report.converged = true;
  }
  std::function<double(std::span<const double>)> monitor;
  if (cfg.monitor == ResidualMonitor::EveryIteration) monitor = callback.relative_residual;

  int stalls = 0;
  for (std::size_t cycle = 0; !report.converged && cycle <= cfg.max_restarts; ++cycle) {
    if (cycle > 0) ++report.restarts;
    const Vector r = start(std::as_const(x));
    report.cycle_starts.push_back(report.residual_history.size());
    auto res = gmres_cycle_from_residual(op, r, x, cfg, reference_norm, monitor,
                                         static_cast<bool>(callback.finalize));
    report.iterations += res.report.iterations;
    report.residual_history.insert(report.residual_history.end(),
                                   res.report.residual_history.begin(),
                                   res.report.residual_history.end());
    x = std::move(res.x);
    if (callback.finalize) callback.finalize(x);
    const double prev = rel;
    rel = callback.relative_residual(x);
    report.true_relative_residual = rel;
    if (rel <= cfg.rel_tol) {
      report.converged = true;
      break;
    }
    // an empty cycle cannot make progress from here on; one stalled cycle is
    // tolerated because finalize() may have moved the start vector
    stalls = rel >= prev ? stalls + 1 : 0;
    if (res.report.iterations == 0 || stalls >= 2) break;
  }
  report.true_relative_residual = rel;
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(x), std::move(report)};
}

/// Restarted GMRES for op x = rhs. Without a callback the true residual is
/// ||rhs - op x|| / ||rhs||. A zero rhs returns x = 0, converged.
template <LinearOperatorLike Op>
std::pair<Vector, SolveReport> solve_restarted(const Op &op, std::span<const double> rhs,
                                               std::span<const double> x0,
                                               const GmresConfig &cfg,
                                               ResidualCallback callback = {}) {
  cfg.validate();
  const std::size_t n = op.dim();
  if (rhs.size() != n || x0.size() != n) throw DimensionError("solve_restarted: dimension mismatch");
  const double bnorm = norm2(rhs);
  if (bnorm == 0.0) {
    SolveReport rep;
    rep.converged = true;
    return {Vector(n, 0.0), rep};
  }
  auto residual = [&op, rhs](std::span<const double> x) {
    Vector r(op.dim());
    op.apply(x, r);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = rhs[i] - r[i];
    return r;
  };
  if (!callback.relative_residual)
    callback.relative_residual = [&residual, bnorm](std::span<const double> x) {
      return norm2(residual(x)) / bnorm;
    };
  return solve_restarted_from(op, residual, x0, cfg, callback, bnorm);
}

}  // namespace krecycle
