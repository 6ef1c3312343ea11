#include <gtest/gtest.h>

#include "krecycle/krylov.hpp"
#include "test_util.hpp"

using namespace krecycle;
using testutil::Rng;

namespace {

double true_rel(const CsrMatrix &A, const Vector &b, const Vector &x) {
  const auto Ax = spmv(A, x);
  return norm2(subtract(b, Ax)) / norm2(b);
}

}  // namespace

TEST(Givens, ZeroesSecondComponent) {
  const double pairs[][2] = {{3, 4}, {-1, 1e-20}, {0, 2}, {1e-300, -1e-300}, {5, 0}};
  for (const auto &p : pairs) {
    double c = 0, s = 0;
    detail::givens(p[0], p[1], c, s);
    EXPECT_NEAR(c * c + s * s, 1.0, 1e-15);
    EXPECT_NEAR(-s * p[0] + c * p[1], 0.0, 1e-15 * (std::abs(p[0]) + std::abs(p[1])));
  }
}

TEST(GmresConfig, Validation) {
  GmresConfig cfg;
  cfg.validate();
  auto bad = cfg;
  bad.restart = 0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.rel_tol = 0.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad.rel_tol = 1.5;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.stagnation_factor = 1.1;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(Gmres, FullCycleIsExactOnSmallSystem) {
  Rng rng(1);
  const auto A = testutil::random_well_conditioned(rng, 12);
  const auto b = rng.vec(12);
  GmresConfig cfg;
  cfg.restart = 12;
  cfg.rel_tol = 1e-12;
  const Vector x0(12, 0.0);
  const auto res = gmres_cycle(as_operator(A), b, x0, cfg);
  EXPECT_LE(res.report.iterations, 12u);
  const auto ref = testutil::dense_solve(testutil::to_rows(A), b);
  EXPECT_LE(testutil::diff_norm(res.x, ref), 1e-9 * testutil::norm(ref));
}

TEST(Gmres, EstimateIsNonIncreasingWithinCycle) {
  Rng rng(2);
  const auto A = testutil::random_well_conditioned(rng, 40, 0.2);
  const auto b = rng.vec(40);
  GmresConfig cfg;
  cfg.restart = 25;
  cfg.rel_tol = 1e-14;
  const auto res = gmres_cycle(as_operator(A), b, Vector(40, 0.0), cfg);
  const auto &h = res.report.residual_history;
  ASSERT_FALSE(h.empty());
  for (std::size_t i = 1; i < h.size(); ++i) EXPECT_LE(h[i], h[i - 1] * (1 + 1e-12));
  // the estimate tracks the true residual
  EXPECT_NEAR(res.estimate / norm2(b), true_rel(A, b, res.x), 1e-10);
}

TEST(Gmres, HappyBreakdownOnIdentity) {
  const auto I = CsrMatrix::identity(9);
  Vector b(9, 2.0);
  GmresConfig cfg;
  const auto [x, rep] = solve_restarted(as_operator(I), b, Vector(9, 0.0), cfg);
  EXPECT_TRUE(rep.converged);
  EXPECT_EQ(rep.iterations, 1u);
  for (double v : x) EXPECT_NEAR(v, 2.0, 1e-15);
}

TEST(Gmres, ZeroRhsReturnsZero) {
  Rng rng(3);
  const auto A = testutil::random_well_conditioned(rng, 5);
  const auto [x, rep] = solve_restarted(as_operator(A), Vector(5, 0.0), rng.vec(5), GmresConfig{});
  EXPECT_TRUE(rep.converged);
  EXPECT_EQ(rep.iterations, 0u);
  for (double v : x) EXPECT_EQ(v, 0.0);
}

TEST(Gmres, ExactInitialGuessNeedsNoIterations) {
  Rng rng(4);
  const auto A = testutil::random_well_conditioned(rng, 8);
  const auto xs = rng.vec(8);
  const auto b = spmv(A, xs);
  const auto [x, rep] = solve_restarted(as_operator(A), b, xs, GmresConfig{});
  EXPECT_TRUE(rep.converged);
  EXPECT_EQ(rep.iterations, 0u);
}

TEST(Gmres, DimensionErrors) {
  const auto I = CsrMatrix::identity(3);
  EXPECT_THROW(solve_restarted(as_operator(I), Vector(2, 1.0), Vector(3, 0.0), GmresConfig{}),
               DimensionError);
  EXPECT_THROW(gmres_cycle(as_operator(I), Vector(3, 1.0), Vector(4, 0.0), GmresConfig{}),
               DimensionError);
  const auto R = CsrMatrix::from_triplets(2, 3, {{0, 0, 1.0}});
  EXPECT_THROW(as_operator(R), DimensionError);
}

TEST(Gmres, DriverRequiresCallback) {
  const auto I = CsrMatrix::identity(3);
  auto start = [](const Vector &x) { return x; };
  EXPECT_THROW(solve_restarted_from(as_operator(I), start, Vector(3, 0.0), GmresConfig{},
                                    ResidualCallback{}, 1.0),
               std::invalid_argument);
}

// property: restarted GMRES reaches the tolerance on random well-conditioned
// systems, in both monitor modes, and agrees with the dense oracle
TEST(GmresProperty, RestartedConvergesOnRandomSystems) {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = rng.index(5, 60);
    const auto A = testutil::random_well_conditioned(rng, n, 0.3);
    const auto b = rng.vec(n);
    for (auto mode : {ResidualMonitor::EveryIteration, ResidualMonitor::CycleEnd}) {
      GmresConfig cfg;
      cfg.restart = rng.index(3, 15);
      cfg.monitor = mode;
      cfg.max_restarts = 500;
      const auto [x, rep] = solve_restarted(as_operator(A), b, Vector(n, 0.0), cfg);
      ASSERT_TRUE(rep.converged) << "n=" << n << " restart=" << cfg.restart;
      EXPECT_LE(true_rel(A, b, x), cfg.rel_tol * (1 + 1e-12));
      EXPECT_NEAR(rep.true_relative_residual, true_rel(A, b, x), 1e-14);
      EXPECT_EQ(rep.cycle_starts.size(), rep.restarts + 1);
      EXPECT_EQ(rep.residual_history.size(), rep.iterations);
      const auto ref = testutil::dense_solve(testutil::to_rows(A), b);
      EXPECT_LE(testutil::diff_norm(x, ref), 1e-6 * testutil::norm(ref));
    }
  }
}

TEST(Gmres, EveryIterationStopsNoLaterThanCycleEnd) {
  Rng rng(6);
  const auto A = testutil::random_well_conditioned(rng, 50, 0.2);
  const auto b = rng.vec(50);
  GmresConfig a, c;
  a.restart = c.restart = 50;
  c.monitor = ResidualMonitor::CycleEnd;
  const auto ra = solve_restarted(as_operator(A), b, Vector(50, 0.0), a).second;
  const auto rc = solve_restarted(as_operator(A), b, Vector(50, 0.0), c).second;
  EXPECT_TRUE(ra.converged);
  EXPECT_TRUE(rc.converged);
  EXPECT_LE(ra.iterations, rc.iterations);
}

TEST(Gmres, NonConvergenceIsReported) {
  // skew rotation: restart 1 GMRES stalls completely
  const auto A = CsrMatrix::from_triplets(2, 2, {{0, 1, 1.0}, {1, 0, -1.0}});
  GmresConfig cfg;
  cfg.restart = 1;
  cfg.max_restarts = 10;
  const auto [x, rep] = solve_restarted(as_operator(A), Vector{1.0, 0.0}, Vector(2, 0.0), cfg);
  EXPECT_FALSE(rep.converged);
  EXPECT_NEAR(rep.true_relative_residual, 1.0, 1e-12);
  (void)x;
}

TEST(Gmres, DenseOperatorAdapter) {
  Rng rng(7);
  const auto D = rng.dense(6, 6);
  auto M = D;
  for (std::size_t i = 0; i < 6; ++i) M(i, i) += 6.0;
  const auto b = rng.vec(6);
  const auto [x, rep] = solve_restarted(as_operator(M), b, Vector(6, 0.0), GmresConfig{});
  EXPECT_TRUE(rep.converged);
  const auto ref = testutil::dense_solve(testutil::to_rows(M), b);
  EXPECT_LE(testutil::diff_norm(x, ref), 1e-7 * testutil::norm(ref));
}
