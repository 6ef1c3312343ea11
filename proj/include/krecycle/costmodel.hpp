#pragma once

/// \file krecycle/costmodel.hpp
/// \brief Operation-count model for plain vs. recycled restarted GMRES and
///        the smallest SVD interval at which recycling breaks even.

#include <cmath>
#include <limits>
#include <stdexcept>

namespace krecycle {

struct CostParams {
  double m = 1e6;   ///< system dimension
  double n = 30;    ///< restart length
  double b = 300;   ///< bandwidth
  double k = 10;    ///< recycling dimension
  double s = 60;    ///< window size
  double r = 3;     ///< baseline restarts
  double r_tilde = 3;  ///< recycled restarts
  double ell = 1;   ///< SVD interval

  void validate() const {
    if (!(m > 0 && n >= 1 && b > 0 && s > 0 && r > 0))
      throw std::invalid_argument("CostParams: m, n, b, s, r must be positive");
    if (k < 0 || r_tilde < 0) throw std::invalid_argument("CostParams: k, r_tilde must be >= 0");
    if (r_tilde > r) throw std::invalid_argument("CostParams: r_tilde must not exceed r");
  }
};

/// C = r sum_{j=1..n} (m b + m j)
inline double cost_baseline(const CostParams &p) {
  const double n = std::floor(p.n);
  return p.r * (n * p.m * p.b + p.m * n * (n + 1) / 2);
}

/// the part of C_r that does not depend on ell
inline double cost_recycled_fixed(const CostParams &p) {
  double inner = 0.0;
  for (double j = 1; j <= p.n; j += 1) {
    const double kj = p.k + j;
    inner += p.m * p.b + kj * p.m + kj * kj * kj;
  }
  return p.r_tilde * inner + 2 * p.m * p.k + p.k * p.k * p.k;
}

/// SVD cost per refresh, k s m + m^2 k
inline double cost_svd(const CostParams &p) { return p.k * p.s * p.m + p.m * p.m * p.k; }

/// C_r = r~ sum_j (m b + (j+k) m + (k+j)^3) + 2 m k + k^3 + (k s m + m^2 k) / ell
inline double cost_recycled(const CostParams &p) {
  if (!(p.ell > 0)) throw std::invalid_argument("cost_recycled: ell must be > 0");
  return cost_recycled_fixed(p) + cost_svd(p) / p.ell;
}

enum class IntervalStatus {
  Finite,      ///< ell_min > 0 solves C_r = C
  Unbounded,   ///< the fixed part already equals C; parity only as ell -> inf
  Infeasible,  ///< fixed part exceeds C, no ell reaches parity
};

struct IntervalResult {
  IntervalStatus status = IntervalStatus::Finite;
  double ell_min = 0.0;  ///< +inf when Unbounded, NaN when Infeasible
};

/// Closed-form ell solving C_r(ell) = C with r_tilde = r (1 - ratio).
/// Any ell >= ell_min makes recycling no more expensive than the baseline.
inline IntervalResult min_interval(CostParams p, double ratio) {
  if (!(ratio >= 0.0 && ratio <= 1.0))
    throw std::invalid_argument("min_interval: ratio must lie in [0, 1]");
  p.r_tilde = p.r * (1.0 - ratio);
  const double gap = cost_baseline(p) - cost_recycled_fixed(p);
  const double B = cost_svd(p);
  if (gap > 0.0) return {IntervalStatus::Finite, B / gap};
  if (gap == 0.0) return {IntervalStatus::Unbounded, std::numeric_limits<double>::infinity()};
  return {IntervalStatus::Infeasible, std::numeric_limits<double>::quiet_NaN()};
}

}  // namespace krecycle
