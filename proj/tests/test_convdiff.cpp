#include <gtest/gtest.h>

#include <numbers>

#include "krecycle/convdiff.hpp"
#include "test_util.hpp"

using namespace krecycle;
using std::numbers::pi;

namespace {

ProblemParams small(std::size_t N = 8) {
  ProblemParams p;
  p.N = N;
  p.n_steps = 5;
  return p;
}

double sum_entries(const CsrMatrix &A) {
  double s = 0.0;
  for (double v : A.values) s += v;
  return s;
}

}  // namespace

TEST(Quadrature, KnownTwoPointRule) {
  const auto q = gauss_legendre_01(2);
  const double d = 0.5 / std::sqrt(3.0);
  EXPECT_NEAR(std::min(q.points[0], q.points[1]), 0.5 - d, 1e-15);
  EXPECT_NEAR(std::max(q.points[0], q.points[1]), 0.5 + d, 1e-15);
  EXPECT_NEAR(q.weights[0], 0.5, 1e-15);
  const auto one = gauss_legendre_01(1);
  EXPECT_NEAR(one.points[0], 0.5, 1e-15);
  EXPECT_NEAR(one.weights[0], 1.0, 1e-15);
}

// property: n points integrate x^k exactly on [0, 1] for k <= 2n - 1
TEST(QuadratureProperty, ExactForPolynomials) {
  for (std::size_t n = 1; n <= 8; ++n) {
    const auto q = gauss_legendre_01(n);
    for (std::size_t k = 0; k <= 2 * n - 1; ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += q.weights[i] * std::pow(q.points[i], double(k));
      EXPECT_NEAR(s, 1.0 / double(k + 1), 1e-14) << "n=" << n << " k=" << k;
    }
  }
}

TEST(Rng, DeterministicAndInRange) {
  Xoshiro256 a(42), b(42), c(43);
  bool differs = false;
  double sum = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const auto x = a.next();
    EXPECT_EQ(x, b.next());
    differs |= x != c.next();
    const double u = a.uniform01();
    b.uniform01();
    c.uniform01();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_TRUE(differs);
  EXPECT_NEAR(sum / 10000, 0.5, 0.02);
  a.reseed(7);
  Xoshiro256 d(7);
  EXPECT_EQ(a.state(), d.state());
}

TEST(Forcing, CoefficientsAndValue) {
  Xoshiro256 rng(1);
  const auto c = draw_forcing_coefficients(rng);
  EXPECT_EQ(c[0], 1.0);
  for (std::size_t j = 1; j < forcing_modes; ++j) {
    EXPECT_GE(c[j], -1.0);
    EXPECT_LE(c[j], 1.0);
  }
  ForcingCoefficients e1{};
  e1[0] = 1.0;
  EXPECT_NEAR(forcing_value(e1, 0.1, 0.25, 0.25), 0.05 * std::exp(-1.0 / 20.0), 1e-15);
  EXPECT_NEAR(forcing_value(c, 0.1, 0.0, 0.3), 0.0, 1e-15);
}

// velocity is divergence free (central differences) and tangential on the boundary
TEST(Velocity, DivergenceFreeAndTangential) {
  const double eps = 1e-5;
  for (double x : {0.1, 0.37, 0.5, 0.81})
    for (double y : {0.05, 0.42, 0.66, 0.9}) {
      const double dbx = (velocity(x + eps, y).first - velocity(x - eps, y).first) / (2 * eps);
      const double dby = (velocity(x, y + eps).second - velocity(x, y - eps).second) / (2 * eps);
      EXPECT_NEAR(dbx + dby, 0.0, 1e-9);
    }
  for (double t : {0.0, 0.3, 0.7, 1.0}) {
    EXPECT_NEAR(velocity(0.0, t).first, 0.0, 1e-15);
    EXPECT_NEAR(velocity(1.0, t).first, 0.0, 1e-15);
    EXPECT_NEAR(velocity(t, 0.0).second, 0.0, 1e-15);
    EXPECT_NEAR(velocity(t, 1.0).second, 0.0, 1e-15);
  }
}

TEST(Params, Validation) {
  auto p = small();
  p.N = 1;
  EXPECT_THROW(ConvectionDiffusion{p}, std::invalid_argument);
  p = small();
  p.nu = 0.0;
  EXPECT_THROW(ConvectionDiffusion{p}, std::invalid_argument);
  p = small();
  p.dt = -1.0;
  EXPECT_THROW(ConvectionDiffusion{p}, std::invalid_argument);
  p = small();
  p.quad_points = 0;
  EXPECT_THROW(ConvectionDiffusion{p}, std::invalid_argument);
}

TEST(Mass, ElementMatrixMatchesClosedForm) {
  const ConvectionDiffusion cd(small(4));
  const auto Me = cd.element_mass();
  const double h2 = cd.h() * cd.h();
  // local order a = ix + 2 iy; 4 on the diagonal, 2 along edges, 1 across
  const double ref[4][4] = {{4, 2, 2, 1}, {2, 4, 1, 2}, {2, 1, 4, 2}, {1, 2, 2, 4}};
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = 0; b < 4; ++b) EXPECT_NEAR(Me[a + 4 * b], ref[a][b] * h2 / 36.0, 1e-16);
}

TEST(Mass, FullMatrixIntegratesConstants) {
  const ConvectionDiffusion cd(small(6));
  EXPECT_NEAR(sum_entries(cd.full_mass()), 1.0, 1e-13);
}

TEST(Stiffness, ConstantsInKernelAndSymmetric) {
  const ConvectionDiffusion cd(small(7));
  const auto K = cd.full_stiffness();
  const std::size_t nn = 8 * 8;
  ASSERT_EQ(K.n_rows, nn);
  const auto r = spmv(K, Vector(nn, 1.0));
  for (double v : r) EXPECT_NEAR(v, 0.0, 1e-13);
  const auto Ki = cd.stiffness();
  for (std::size_t i = 0; i < Ki.n_rows; ++i)
    for (std::size_t p = Ki.row_offsets[i]; p < Ki.row_offsets[i + 1]; ++p)
      EXPECT_NEAR(Ki.values[p], Ki.at(Ki.col_indices[p], i), 1e-15);
  // standard Q1 stencil at an interior node: 8/3 centre, -1/3 neighbours
  const std::size_t c = 2 + 6 * 2;
  EXPECT_NEAR(Ki.at(c, c), 8.0 / 3.0, 1e-14);
  EXPECT_NEAR(Ki.at(c, c + 1), -1.0 / 3.0, 1e-14);
  EXPECT_NEAR(Ki.at(c, c + 7), -1.0 / 3.0, 1e-14);
}

TEST(Stiffness, EnergyOfSineModeConverges) {
  // u = sin(pi x) sin(pi y): integral of |grad u|^2 = pi^2 / 2
  double prev_err = 1.0;
  for (std::size_t N : {8, 16, 32}) {
    const ConvectionDiffusion cd(small(N));
    Vector u(cd.n_unknowns());
    for (std::size_t j = 1; j < N; ++j)
      for (std::size_t i = 1; i < N; ++i)
        u[(i - 1) + (N - 1) * (j - 1)] = std::sin(pi * i * cd.h()) * std::sin(pi * j * cd.h());
    const double e = dot(u, spmv(cd.stiffness(), u));
    const double err = std::abs(e - pi * pi / 2.0);
    EXPECT_LT(err, prev_err / 3.0);
    prev_err = err;
  }
  EXPECT_LT(prev_err, 1.5e-2);
}

TEST(Pattern, NinePointInteriorStencil) {
  const ConvectionDiffusion cd(small(8));
  const auto &M = cd.mass();
  M.validate();
  EXPECT_EQ(M.n_rows, 49u);
  EXPECT_EQ(M.nnz(), 19u * 19u);
  EXPECT_EQ(cd.stiffness().col_indices, M.col_indices);
}

TEST(Convection, LinearInPreviousStateAndZeroForZero) {
  testutil::Rng rng(3);
  const ConvectionDiffusion cd(small(6));
  const std::size_t n = cd.n_unknowns();
  const auto u = rng.vec(n), w = rng.vec(n);
  const auto N0 = cd.convection(Vector(n, 0.0));
  for (double v : N0.values) EXPECT_EQ(v, 0.0);
  Vector comb(n);
  for (std::size_t i = 0; i < n; ++i) comb[i] = 2.0 * u[i] - 0.5 * w[i];
  const auto Nu = cd.convection(u), Nw = cd.convection(w), Nc = cd.convection(comb);
  for (std::size_t k = 0; k < Nc.values.size(); ++k)
    EXPECT_NEAR(Nc.values[k], 2.0 * Nu.values[k] - 0.5 * Nw.values[k], 1e-14);
  EXPECT_THROW(cd.convection(Vector(n + 1)), DimensionError);
}

TEST(Convection, ExactOnceQuadratureIsHighEnough) {
  // integrand has degree <= 4 per direction: 3 and 5 point rules agree, 2 does not
  testutil::Rng rng(4);
  auto p = small(5);
  p.quad_points = 3;
  const ConvectionDiffusion c3(p);
  p.quad_points = 5;
  const ConvectionDiffusion c5(p);
  p.quad_points = 2;
  const ConvectionDiffusion c2(p);
  const auto u = rng.vec(c3.n_unknowns());
  const auto A3 = c3.convection(u), A5 = c5.convection(u), A2 = c2.convection(u);
  double d35 = 0.0, d25 = 0.0;
  for (std::size_t k = 0; k < A3.values.size(); ++k) {
    d35 = std::max(d35, std::abs(A3.values[k] - A5.values[k]));
    d25 = std::max(d25, std::abs(A2.values[k] - A5.values[k]));
  }
  EXPECT_LT(d35, 1e-15 * 100);
  EXPECT_GT(d25, 1e-8);
}

TEST(Convection, RowSumsVanishAwayFromBoundary) {
  // trial functions sum to 1, so each row sum is (phi_i, u b . grad 1) = 0 for
  // rows whose neighbours are all interior
  const std::size_t N = 8;
  const ConvectionDiffusion cd(small(N));
  Vector u(cd.n_unknowns());
  for (std::size_t j = 1; j < N; ++j)
    for (std::size_t i = 1; i < N; ++i) u[(i - 1) + (N - 1) * (j - 1)] = 1.0 + 0.1 * i - 0.2 * j;
  const auto C = cd.convection(u);
  for (std::size_t j = 3; j <= N - 3; ++j)
    for (std::size_t i = 3; i <= N - 3; ++i) {
      const std::size_t row = (i - 1) + (N - 1) * (j - 1);
      double s = 0.0;
      for (std::size_t p = C.row_offsets[row]; p < C.row_offsets[row + 1]; ++p) s += C.values[p];
      EXPECT_NEAR(s, 0.0, 1e-14);
    }
}

TEST(Load, ConvergesUnderQuadratureRefinement) {
  ForcingCoefficients c{};
  c[0] = 1.0;
  c[3] = -0.5;
  auto p = small(8);
  p.quad_points = 6;
  const auto F6 = ConvectionDiffusion(p).load(c);
  p.quad_points = 8;
  const auto F8 = ConvectionDiffusion(p).load(c);
  EXPECT_LE(testutil::diff_norm(F6, F8), 1e-9 * testutil::norm(F8));
  p.forcing_amplitude = 0.0;
  const auto Z = ConvectionDiffusion(p).load(c);
  for (double v : Z) EXPECT_EQ(v, 0.0);
}

TEST(Step, AssemblesDocumentedCombination) {
  testutil::Rng rng(5);
  auto p = small(6);
  p.nu = 0.3;
  p.dt = 0.25;
  const ConvectionDiffusion cd(p);
  const auto u = rng.vec(cd.n_unknowns());
  ForcingCoefficients c{};
  c[0] = 1.0;
  c[1] = 0.25;
  const auto sys = cd.assemble_step(u, 7, c);
  EXPECT_EQ(sys.step_index, 7u);
  const auto Nu = cd.convection(u);
  for (std::size_t k = 0; k < sys.A.values.size(); ++k)
    EXPECT_NEAR(sys.A.values[k],
                cd.mass().values[k] / 0.25 + 0.3 * cd.stiffness().values[k] + Nu.values[k],
                1e-13);
  auto b = spmv(cd.mass(), u);
  scale(4.0, b);
  axpy(1.0, cd.load(c), b);
  EXPECT_LE(testutil::diff_norm(sys.b, b), 1e-14 * testutil::norm(b));
  EXPECT_THROW(cd.assemble_step(Vector(3), 0, c), DimensionError);
}

TEST(Step, RngOverloadDrawsInOrder) {
  const ConvectionDiffusion cd(small(5));
  Xoshiro256 r1(9), r2(9);
  const Vector u(cd.n_unknowns(), 0.0);
  const auto a = cd.assemble_step(u, 0, r1);
  const auto c = draw_forcing_coefficients(r2);
  EXPECT_EQ(a.b, cd.load(c));
  EXPECT_EQ(r1.state(), r2.state());
}
