#pragma once

/// \file krecycle/sequence.hpp
/// \brief Time-stepping driver: assemble, solve with recycling, update the
///        solution window, refresh the space.

#include <cstddef>
#include <deque>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "krecycle/convdiff.hpp"
#include "krecycle/krylov.hpp"
#include "krecycle/precond.hpp"
#include "krecycle/recycle.hpp"
#include "krecycle/svdwindow.hpp"

namespace krecycle {

enum class PrecondKind { Identity, Ssor };

struct WindowSettings {
  std::size_t m = 20;  ///< stored solutions
  std::size_t s = 20;  ///< recycling dimension
  std::size_t ell = 20;  ///< SVD interval
  SvdMode mode = SvdMode::Largest;
};

struct RecyclingSettings {
  RecycleMethod method = RecycleMethod::NoRecycle;
  InitialGuess guess = InitialGuess::zero();
  WindowSettings window;
  CompositionOrder order = CompositionOrder::ProjectorBeforePreconditioner;
};

struct SolverSettings {
  GmresConfig gmres;
  PrecondKind precond = PrecondKind::Ssor;
  double omega = 1.0;
};

struct StepRecord {
  std::size_t step = 0;
  SolveReport report;
  bool recycled = false;         ///< a recycling space was available
  std::size_t space_dim = 0;
  bool singular_restriction = false;  ///< space rejected, step ran without it
};

struct SequenceOptions {
  bool keep_solutions = false;
  /// called with every assembled system before it is solved
  std::function<void(const StepSystem &)> on_system;
};

struct SequenceResult {
  std::vector<StepRecord> steps;
  Vector final_solution;
  std::vector<Vector> solutions;  ///< filled only when requested
  std::size_t nonconverged = 0;
};

/// Runs params.n_steps steps from u = 0. Non-convergent steps are recorded
/// and the run continues.
inline SequenceResult run_sequence(const ProblemParams &params, const SolverSettings &solver,
                                   const RecyclingSettings &rec,
                                   const SequenceOptions &opts = {}) {
  params.validate();
  solver.gmres.validate();
  const ConvectionDiffusion problem(params);
  const std::size_t n = problem.n_unknowns();
  SolutionWindow window(rec.window.m, rec.window.ell, rec.window.s, rec.window.mode);
  Xoshiro256 rng(params.seed);

  const bool wants_space =
      projector_of(rec.method).has_value() || rec.guess.kind == InitialGuess::Kind::Project;
  std::optional<DenseColumns> refreshed;
  std::deque<Vector> history;  // newest first, for extrapolation

  SequenceResult out;
  Vector u(n, 0.0);
  for (std::size_t k = 1; k <= params.n_steps; ++k) {
    const auto sys = problem.assemble_step(u, k, rng);
    if (opts.on_system) opts.on_system(sys);

    StepRecord rec_k;
    rec_k.step = k;
    std::optional<RecyclingSpace> space;
    if (wants_space && window.size() > 0) {
      const DenseColumns raw = refreshed ? *refreshed : window.recent_solutions();
      try {
        space = build_space(sys.A, raw, needs_ls_factors(rec.method));
      } catch (const SingularRestrictionError &) {
        rec_k.singular_restriction = true;
      }
    }
    const RecycleMethod method = space ? rec.method : RecycleMethod::NoRecycle;
    rec_k.recycled = space.has_value() && method != RecycleMethod::NoRecycle;
    rec_k.space_dim = space ? space->s() : 0;

    const std::vector<Vector> hist(history.begin(), history.end());
    const RecyclingSpace *S = space ? &*space : nullptr;
    std::pair<Vector, SolveReport> res;
    if (solver.precond == PrecondKind::Ssor) {
      const SsorPrecond M(sys.A, solver.omega);
      res = recycled_solve(sys.A, sys.b, S, method, rec.guess, M, solver.gmres, hist, rec.order);
    } else {
      res = recycled_solve(sys.A, sys.b, S, method, rec.guess, IdentityPrecond{}, solver.gmres,
                           hist, rec.order);
    }
    u = std::move(res.first);
    rec_k.report = std::move(res.second);
    if (!rec_k.report.converged) ++out.nonconverged;
    out.steps.push_back(std::move(rec_k));

    history.push_front(u);
    if (history.size() > 4) history.pop_back();
    window.push_solution(u);
    if (auto basis = window.maybe_refresh()) refreshed = std::move(basis);
    if (opts.keep_solutions) out.solutions.push_back(u);
  }
  out.final_solution = std::move(u);
  return out;
}

inline std::string_view to_string(PrecondKind k) {
  return k == PrecondKind::Ssor ? "ssor" : "identity";
}

}  // namespace krecycle
