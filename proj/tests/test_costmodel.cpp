#include <gtest/gtest.h>

#include <cmath>

#include "krecycle/costmodel.hpp"

using namespace krecycle;

namespace {

CostParams reference_inputs() {
  CostParams p;
  p.m = 1e6;
  p.n = 30;
  p.b = 300;
  p.s = 60;
  p.r = 3;
  p.r_tilde = 3;
  p.k = 10;
  p.ell = 1;
  return p;
}

// direct summation, term by term
double baseline_sum(const CostParams &p) {
  double c = 0.0;
  for (int rr = 0; rr < static_cast<int>(p.r); ++rr)
    for (int j = 1; j <= static_cast<int>(p.n); ++j) c += p.m * p.b + p.m * j;
  return c;
}

double recycled_sum(const CostParams &p) {
  double inner = 0.0;
  for (int j = 1; j <= static_cast<int>(p.n); ++j)
    inner += p.m * p.b + (j + p.k) * p.m + std::pow(p.k + j, 3);
  return p.r_tilde * inner + 2 * p.m * p.k + std::pow(p.k, 3) + (p.k * p.s * p.m + p.m * p.m * p.k) / p.ell;
}

// bisection on log(ell) for C_r(ell) = C
double bisect_ell(CostParams p, double ratio) {
  p.r_tilde = p.r * (1 - ratio);
  const double C = cost_baseline(p);
  double lo = -30, hi = 60;
  for (int it = 0; it < 300; ++it) {
    const double mid = 0.5 * (lo + hi);
    p.ell = std::exp(mid);
    (cost_recycled(p) > C ? lo : hi) = mid;
  }
  return std::exp(0.5 * (lo + hi));
}

}  // namespace

TEST(Baseline, SingleTerm) {
  CostParams p;
  p.r = 1;
  p.n = 1;
  p.m = 1;
  p.b = 1;
  EXPECT_EQ(cost_baseline(p), 2.0);
  p.r = 2;
  EXPECT_EQ(cost_baseline(p), 4.0);
}

TEST(Baseline, ReferenceInputsMatchDirectSum) {
  const auto p = reference_inputs();
  EXPECT_NEAR(cost_baseline(p), baseline_sum(p), 1e-12 * baseline_sum(p));
}

TEST(Recycled, ReferenceInputsMatchDirectSum) {
  auto p = reference_inputs();
  for (double ell : {1.0, 7.0, 40.0}) {
    p.ell = ell;
    EXPECT_NEAR(cost_recycled(p), recycled_sum(p), 1e-12 * recycled_sum(p));
  }
}

TEST(Recycled, DoublingEllHalvesSvdTerm) {
  auto p = reference_inputs();
  p.ell = 5;
  const double a = cost_recycled(p) - cost_recycled_fixed(p);
  p.ell = 10;
  const double b = cost_recycled(p) - cost_recycled_fixed(p);
  EXPECT_NEAR(a, 2 * b, 1e-6 * a);
  EXPECT_NEAR(a, cost_svd(p) / 5, 1e-6 * a);
}

TEST(Recycled, KZeroDiffersFromBaselineByCubicTerm) {
  auto p = reference_inputs();
  p.k = 0;
  // with no SVD term left, the gap to the baseline is r~ sum j^3
  double cubes = 0.0;
  for (int j = 1; j <= 30; ++j) cubes += double(j) * j * j;
  EXPECT_NEAR(cost_recycled_fixed(p) - cost_baseline(p), p.r_tilde * cubes, 1e-3);
  EXPECT_EQ(cost_svd(p), 0.0);
}

TEST(Recycled, LinearInBandwidth) {
  auto p = reference_inputs();
  const double c1 = cost_baseline(p), r1 = cost_recycled(p);
  p.b *= 2;
  const double c2 = cost_baseline(p), r2 = cost_recycled(p);
  EXPECT_NEAR(c2 - c1, p.r * p.n * p.m * 300, 1e-6 * c1);
  EXPECT_NEAR(r2 - r1, p.r_tilde * p.n * p.m * 300, 1e-6 * r1);
}

TEST(Params, Validation) {
  auto p = reference_inputs();
  p.validate();
  p.r_tilde = 4;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = reference_inputs();
  p.m = 0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = reference_inputs();
  p.k = -1;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = reference_inputs();
  p.ell = 0;
  EXPECT_THROW(cost_recycled(p), std::invalid_argument);
  EXPECT_THROW(min_interval(reference_inputs(), 1.5), std::invalid_argument);
  EXPECT_THROW(min_interval(reference_inputs(), -0.1), std::invalid_argument);
}

TEST(MinInterval, MatchesBisectionAndBackSubstitutes) {
  for (double k : {2.0, 10.0, 30.0, 52.0})
    for (double ratio : {0.2, 0.5, 0.96, 1.0}) {
      auto p = reference_inputs();
      p.k = k;
      const auto res = min_interval(p, ratio);
      ASSERT_EQ(res.status, IntervalStatus::Finite) << k << " " << ratio;
      EXPECT_NEAR(res.ell_min, bisect_ell(p, ratio), 1e-9 * res.ell_min);
      p.r_tilde = p.r * (1 - ratio);
      p.ell = res.ell_min;
      EXPECT_NEAR(cost_recycled(p), cost_baseline(p), 1e-9 * cost_baseline(p));
    }
}

TEST(MinInterval, NoSavingsIsInfeasible) {
  auto p = reference_inputs();
  const auto res = min_interval(p, 0.0);
  EXPECT_EQ(res.status, IntervalStatus::Infeasible);
  EXPECT_TRUE(std::isnan(res.ell_min));
}

TEST(MinInterval, UnboundedAtExactParity) {
  // n = 1, k = 0, m = 1, b = 2: C = 3 r and the fixed part is 4 r~, so a
  // ratio of 1/4 lands exactly on parity
  CostParams p;
  p.m = 1;
  p.n = 1;
  p.b = 2;
  p.k = 0;
  p.s = 1;
  p.r = 4;
  const auto res = min_interval(p, 0.25);
  EXPECT_EQ(res.status, IntervalStatus::Unbounded);
  EXPECT_TRUE(std::isinf(res.ell_min));
  const auto fin = min_interval(p, 0.5);
  EXPECT_EQ(fin.status, IntervalStatus::Finite);
  EXPECT_EQ(fin.ell_min, 0.0);  // k = 0: no SVD cost to amortize
}

// property: ell_min non-increasing in ratio and non-decreasing in k on the
// 26 x 26 grid, up to a small share of violations
TEST(MinIntervalProperty, GridTrends) {
  int violations = 0, checks = 0;
  for (int k = 2; k <= 52; k += 2)
    for (int rp = 4; rp <= 100; rp += 4) {
      auto p = reference_inputs();
      p.k = k;
      const auto a = min_interval(p, rp / 100.0);
      if (a.status != IntervalStatus::Finite) continue;
      if (rp + 4 <= 100) {
        const auto b = min_interval(p, (rp + 4) / 100.0);
        ++checks;
        if (b.status == IntervalStatus::Finite && b.ell_min > a.ell_min) ++violations;
      }
      if (k + 2 <= 52) {
        auto q = p;
        q.k = k + 2;
        const auto c = min_interval(q, rp / 100.0);
        ++checks;
        if (c.status == IntervalStatus::Finite && c.ell_min < a.ell_min) ++violations;
      }
    }
  EXPECT_GT(checks, 1000);
  EXPECT_LE(violations, checks / 50);
}
