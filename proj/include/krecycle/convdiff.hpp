#pragma once

/// \file krecycle/convdiff.hpp
/// \brief Semi-implicit Q1 finite elements for the scalar convection-diffusion
///        benchmark on the unit square: recirculating velocity, randomly
///        forced low-frequency modes, homogeneous Dirichlet boundary.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <tuple>
#include <utility>
#include <vector>

#include "krecycle/sparsela.hpp"

namespace krecycle {

/// xoshiro256** seeded through splitmix64.
///
///   next(): result = rotl(s1 * 5, 7) * 9; t = s1 << 17;
///           s2 ^= s0; s3 ^= s1; s1 ^= s2; s0 ^= s3; s2 ^= t; s3 = rotl(s3, 45)
///   uniform01(): (next() >> 11) * 2^-53
class Xoshiro256 {
 public:
  explicit Xoshiro256(std::uint64_t seed = 0) { reseed(seed); }

  void reseed(std::uint64_t seed) {
    std::uint64_t z = seed;
    for (auto &w : s_) w = splitmix64(z);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  const std::array<std::uint64_t, 4> &state() const noexcept { return s_; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  static std::uint64_t splitmix64(std::uint64_t &z) {
    std::uint64_t r = (z += 0x9e3779b97f4a7c15ULL);
    r = (r ^ (r >> 30)) * 0xbf58476d1ce4e5b9ULL;
    r = (r ^ (r >> 27)) * 0x94d049bb133111ebULL;
    return r ^ (r >> 31);
  }
  std::array<std::uint64_t, 4> s_{};
};

struct ProblemParams {
  std::size_t N = 32;         ///< elements per side
  double nu = 1e-1;           ///< diffusion coefficient
  double dt = 0.5;
  std::size_t n_steps = 200;
  double forcing_amplitude = 0.1;
  std::uint64_t seed = 1;
  std::size_t quad_points = 2;  ///< Gauss points per direction

  void validate() const {
    if (N < 2) throw std::invalid_argument("ProblemParams: N must be >= 2");
    if (!(nu > 0.0)) throw std::invalid_argument("ProblemParams: nu must be > 0");
    if (!(dt > 0.0)) throw std::invalid_argument("ProblemParams: dt must be > 0");
    if (quad_points < 1 || quad_points > 8)
      throw std::invalid_argument("ProblemParams: quad_points must lie in 1..8");
  }
};

/// b(x, y) = (-sin(pi x) cos(pi y), cos(pi x) sin(pi y))
inline std::pair<double, double> velocity(double x, double y) {
  using std::numbers::pi;
  return {-std::sin(pi * x) * std::cos(pi * y), std::cos(pi * x) * std::sin(pi * y)};
}

inline constexpr std::size_t forcing_modes = 16;
using ForcingCoefficients = std::array<double, forcing_modes>;

/// c_1 = 1, c_2..c_16 uniform in [-1, 1], drawn in order
inline ForcingCoefficients draw_forcing_coefficients(Xoshiro256 &rng) {
  ForcingCoefficients c{};
  c[0] = 1.0;
  for (std::size_t j = 1; j < forcing_modes; ++j) c[j] = -1.0 + 2.0 * rng.uniform01();
  return c;
}

/// f(x, y) = C/2 sum_j c_j exp(-j^2/20) sin(2 j pi x) sin(2 j pi y)
inline double forcing_value(const ForcingCoefficients &c, double amplitude, double x, double y) {
  using std::numbers::pi;
  double f = 0.0;
  for (std::size_t k = 0; k < forcing_modes; ++k) {
    const double j = static_cast<double>(k + 1);
    f += c[k] * std::exp(-j * j / 20.0) * std::sin(2.0 * j * pi * x) * std::sin(2.0 * j * pi * y);
  }
  return 0.5 * amplitude * f;
}

/// Gauss-Legendre rule on [0, 1]
struct QuadratureRule {
  std::vector<double> points;
  std::vector<double> weights;
};

inline QuadratureRule gauss_legendre_01(std::size_t n) {
  QuadratureRule q;
  q.points.resize(n);
  q.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double kk = static_cast<double>(k);
        const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    q.points[i] = 0.5 * (1.0 - x);
    q.weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return q;
}

/// one element of the time-dependent sequence
struct StepSystem {
  CsrMatrix A;
  Vector b;
  std::size_t step_index = 0;
};

/// Q1 discretization on an N x N grid of square elements.
///
/// Unknowns are the (N-1)^2 interior nodes, numbered (i-1) + (N-1)(j-1) for
/// node (x, y) = (i h, j h). Boundary rows and columns are eliminated.
class ConvectionDiffusion {
 public:
  explicit ConvectionDiffusion(ProblemParams params) : p_(params) {
    p_.validate();
    h_ = 1.0 / static_cast<double>(p_.N);
    build_reference();
    build_pattern();
    mass_ = assemble_bilinear(Form::Mass, {});
    stiffness_ = assemble_bilinear(Form::Stiffness, {});
    // nodal interpolant of the velocity on all (N+1)^2 nodes
    const std::size_t nn = p_.N + 1;
    vel_x_.resize(nn * nn);
    vel_y_.resize(nn * nn);
    for (std::size_t j = 0; j < nn; ++j)
      for (std::size_t i = 0; i < nn; ++i) {
        const auto [bx, by] = velocity(static_cast<double>(i) * h_, static_cast<double>(j) * h_);
        vel_x_[i + nn * j] = bx;
        vel_y_[i + nn * j] = by;
      }
  }

  const ProblemParams &params() const noexcept { return p_; }
  std::size_t n_unknowns() const noexcept { return (p_.N - 1) * (p_.N - 1); }
  double h() const noexcept { return h_; }

  const CsrMatrix &mass() const noexcept { return mass_; }
  const CsrMatrix &stiffness() const noexcept { return stiffness_; }

  /// N(u_prev): (v, u_prev P_h b . grad u)
  CsrMatrix convection(std::span<const double> u_prev) const {
    if (u_prev.size() != n_unknowns()) throw DimensionError("convection: u_prev size");
    return assemble_bilinear(Form::Convection, u_prev);
  }

  /// load vector (v, f) for the given coefficients
  Vector load(const ForcingCoefficients &c) const {
    Vector F(n_unknowns(), 0.0);
    if (p_.forcing_amplitude == 0.0) return F;
    const std::size_t nq = ref_.size();
    for (std::size_t ey = 0; ey < p_.N; ++ey)
      for (std::size_t ex = 0; ex < p_.N; ++ex) {
        const auto idx = element_unknowns(ex, ey);
        for (std::size_t q = 0; q < nq; ++q) {
          const auto &r = ref_[q];
          const double x = (static_cast<double>(ex) + r.xi) * h_;
          const double y = (static_cast<double>(ey) + r.eta) * h_;
          const double f = forcing_value(c, p_.forcing_amplitude, x, y) * r.w * h_ * h_;
          for (std::size_t a = 0; a < 4; ++a)
            if (idx[a] >= 0) F[static_cast<std::size_t>(idx[a])] += r.phi[a] * f;
        }
      }
    return F;
  }

  /// forcing load for a freshly drawn set of coefficients
  Vector forcing(Xoshiro256 &rng) const { return load(draw_forcing_coefficients(rng)); }

  /// A = M/dt + nu K + N(u_prev), b = M u_prev / dt + F
  StepSystem assemble_step(std::span<const double> u_prev, std::size_t step,
                           const ForcingCoefficients &c) const {
    if (u_prev.size() != n_unknowns()) throw DimensionError("assemble_step: u_prev size");
    StepSystem sys;
    sys.step_index = step;
    sys.A = convection(u_prev);
    const double inv_dt = 1.0 / p_.dt;
    for (std::size_t k = 0; k < sys.A.values.size(); ++k)
      sys.A.values[k] += inv_dt * mass_.values[k] + p_.nu * stiffness_.values[k];
    sys.b = spmv(mass_, u_prev);
    scale(inv_dt, sys.b);
    axpy(1.0, load(c), sys.b);
    return sys;
  }

  StepSystem assemble_step(std::span<const double> u_prev, std::size_t step,
                           Xoshiro256 &rng) const {
    return assemble_step(u_prev, step, draw_forcing_coefficients(rng));
  }

  /// mass (or stiffness) on all (N+1)^2 nodes, no boundary elimination
  CsrMatrix full_mass() const { return assemble_full(Form::Mass); }
  CsrMatrix full_stiffness() const { return assemble_full(Form::Stiffness); }

  /// element mass matrix with the configured quadrature, local order
  /// a = ix + 2 iy
  std::array<double, 16> element_mass() const {
    std::array<double, 16> Me{};
    for (const auto &r : ref_)
      for (std::size_t a = 0; a < 4; ++a)
        for (std::size_t b = 0; b < 4; ++b) Me[a + 4 * b] += r.w * h_ * h_ * r.phi[a] * r.phi[b];
    return Me;
  }

 private:
  enum class Form { Mass, Stiffness, Convection };

  struct RefPoint {
    double xi, eta, w;
    std::array<double, 4> phi, dxi, deta;
  };

  void build_reference() {
    const auto g = gauss_legendre_01(p_.quad_points);
    for (std::size_t qy = 0; qy < g.points.size(); ++qy)
      for (std::size_t qx = 0; qx < g.points.size(); ++qx) {
        RefPoint r{};
        r.xi = g.points[qx];
        r.eta = g.points[qy];
        r.w = g.weights[qx] * g.weights[qy];
        for (std::size_t a = 0; a < 4; ++a) {
          const std::size_t ix = a % 2, iy = a / 2;
          const double lx = ix ? r.xi : 1.0 - r.xi;
          const double ly = iy ? r.eta : 1.0 - r.eta;
          const double dlx = ix ? 1.0 : -1.0;
          const double dly = iy ? 1.0 : -1.0;
          r.phi[a] = lx * ly;
          r.dxi[a] = dlx * ly;
          r.deta[a] = lx * dly;
        }
        ref_.push_back(r);
      }
  }

  std::size_t global_node(std::size_t i, std::size_t j) const { return i + (p_.N + 1) * j; }

  /// interior unknown of node (i, j), or -1 on the boundary
  std::ptrdiff_t unknown(std::size_t i, std::size_t j) const {
    if (i == 0 || j == 0 || i == p_.N || j == p_.N) return -1;
    return static_cast<std::ptrdiff_t>((i - 1) + (p_.N - 1) * (j - 1));
  }

  std::array<std::ptrdiff_t, 4> element_unknowns(std::size_t ex, std::size_t ey) const {
    std::array<std::ptrdiff_t, 4> idx{};
    for (std::size_t a = 0; a < 4; ++a) idx[a] = unknown(ex + a % 2, ey + a / 2);
    return idx;
  }

  void build_pattern() {
    const std::size_t n = n_unknowns();
    const std::size_t m = p_.N - 1;
    pattern_.n_rows = pattern_.n_cols = n;
    pattern_.row_offsets.assign(n + 1, 0);
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t dj = 0; dj < 3; ++dj)
          for (std::size_t di = 0; di < 3; ++di) {
            if ((j == 0 && dj == 0) || (j + 1 == m && dj == 2)) continue;
            if ((i == 0 && di == 0) || (i + 1 == m && di == 2)) continue;
            pattern_.col_indices.push_back((i + di - 1) + m * (j + dj - 1));
          }
        pattern_.row_offsets[i + m * j + 1] = pattern_.col_indices.size();
      }
    pattern_.values.assign(pattern_.col_indices.size(), 0.0);
    element_positions_.resize(p_.N * p_.N);
    for (std::size_t ey = 0; ey < p_.N; ++ey)
      for (std::size_t ex = 0; ex < p_.N; ++ex) {
        const auto idx = element_unknowns(ex, ey);
        auto &pos = element_positions_[ex + p_.N * ey];
        for (std::size_t a = 0; a < 4; ++a)
          for (std::size_t b = 0; b < 4; ++b) {
            pos[a + 4 * b] = -1;
            if (idx[a] < 0 || idx[b] < 0) continue;
            const auto row = static_cast<std::size_t>(idx[a]);
            const auto col = static_cast<std::size_t>(idx[b]);
            for (std::size_t p = pattern_.row_offsets[row]; p < pattern_.row_offsets[row + 1]; ++p)
              if (pattern_.col_indices[p] == col) pos[a + 4 * b] = static_cast<std::ptrdiff_t>(p);
          }
      }
  }

  /// element matrix in local order, entry (a, b) = form(phi_b, phi_a)
  std::array<double, 16> element_matrix(Form form, std::size_t ex, std::size_t ey,
                                        std::span<const double> u_prev) const {
    std::array<double, 16> Ke{};
    std::array<double, 4> u_loc{}, bx_loc{}, by_loc{};
    if (form == Form::Convection) {
      const auto idx = element_unknowns(ex, ey);
      const std::size_t nn = p_.N + 1;
      for (std::size_t a = 0; a < 4; ++a) {
        u_loc[a] = idx[a] >= 0 ? u_prev[static_cast<std::size_t>(idx[a])] : 0.0;
        const std::size_t g = (ex + a % 2) + nn * (ey + a / 2);
        bx_loc[a] = vel_x_[g];
        by_loc[a] = vel_y_[g];
      }
    }
    for (const auto &r : ref_) {
      double cx = 0.0, cy = 0.0;
      if (form == Form::Convection) {
        double u = 0.0, bx = 0.0, by = 0.0;
        for (std::size_t a = 0; a < 4; ++a) {
          u += u_loc[a] * r.phi[a];
          bx += bx_loc[a] * r.phi[a];
          by += by_loc[a] * r.phi[a];
        }
        cx = u * bx;
        cy = u * by;
      }
      for (std::size_t a = 0; a < 4; ++a)
        for (std::size_t b = 0; b < 4; ++b) {
          double v = 0.0;
          switch (form) {
            case Form::Mass: v = r.phi[a] * r.phi[b] * h_ * h_; break;
            case Form::Stiffness: v = r.dxi[a] * r.dxi[b] + r.deta[a] * r.deta[b]; break;
            case Form::Convection: v = r.phi[a] * (cx * r.dxi[b] + cy * r.deta[b]) * h_; break;
          }
          Ke[a + 4 * b] += r.w * v;
        }
    }
    return Ke;
  }

  CsrMatrix assemble_bilinear(Form form, std::span<const double> u_prev) const {
    CsrMatrix A = pattern_;
    for (std::size_t ey = 0; ey < p_.N; ++ey)
      for (std::size_t ex = 0; ex < p_.N; ++ex) {
        const auto &pos = element_positions_[ex + p_.N * ey];
        if (form == Form::Convection) {
          // elements whose nodes all carry u = 0 contribute nothing
          bool any = false;
          for (auto k : element_unknowns(ex, ey))
            if (k >= 0 && u_prev[static_cast<std::size_t>(k)] != 0.0) any = true;
          if (!any) continue;
        }
        const auto Ke = element_matrix(form, ex, ey, u_prev);
        for (std::size_t k = 0; k < 16; ++k)
          if (pos[k] >= 0) A.values[static_cast<std::size_t>(pos[k])] += Ke[k];
      }
    return A;
  }

  CsrMatrix assemble_full(Form form) const {
    const std::size_t nn = p_.N + 1;
    std::vector<std::tuple<std::size_t, std::size_t, double>> t;
    for (std::size_t ey = 0; ey < p_.N; ++ey)
      for (std::size_t ex = 0; ex < p_.N; ++ex) {
        const auto Ke = element_matrix(form, ex, ey, {});
        for (std::size_t a = 0; a < 4; ++a)
          for (std::size_t b = 0; b < 4; ++b)
            t.emplace_back(global_node(ex + a % 2, ey + a / 2), global_node(ex + b % 2, ey + b / 2),
                           Ke[a + 4 * b]);
      }
    return CsrMatrix::from_triplets(nn * nn, nn * nn, std::move(t));
  }

  ProblemParams p_;
  double h_ = 0.0;
  std::vector<RefPoint> ref_;
  CsrMatrix pattern_;
  std::vector<std::array<std::ptrdiff_t, 16>> element_positions_;
  CsrMatrix mass_, stiffness_;
  std::vector<double> vel_x_, vel_y_;
};

}  // namespace krecycle
