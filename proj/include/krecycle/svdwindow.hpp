#pragma once

/// \file krecycle/svdwindow.hpp
/// \brief Sliding window of previous solutions whose SVD periodically
///        refreshes the recycling basis.

#include <algorithm>
#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "krecycle/sparsela.hpp"

namespace krecycle {

enum class SvdMode { Largest, Smallest };

inline std::string_view to_string(SvdMode m) {
  return m == SvdMode::Largest ? "largest" : "smallest";
}

inline SvdMode svd_mode_from_string(std::string_view s) {
  if (s == "largest") return SvdMode::Largest;
  if (s == "smallest") return SvdMode::Smallest;
  throw std::invalid_argument("unknown svd mode '" + std::string(s) + "'");
}

/// Holds the last m solutions (oldest first). Every ell pushes, once at least
/// max(s, 2) solutions are stored, maybe_refresh() returns the s dominant (or
/// smallest nonzero) left singular vectors of the window matrix.
class SolutionWindow {
 public:
  SolutionWindow(std::size_t capacity, std::size_t interval, std::size_t target_dim,
                 SvdMode mode = SvdMode::Largest, double rank_tol = 1e-12)
      : capacity_(capacity), interval_(interval), target_dim_(target_dim), mode_(mode),
        rank_tol_(rank_tol) {
    if (interval_ < 1) throw std::invalid_argument("SolutionWindow: interval must be >= 1");
    if (target_dim_ < 1 || target_dim_ > capacity_)
      throw std::invalid_argument("SolutionWindow: need 1 <= s <= m");
  }

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t interval() const noexcept { return interval_; }
  std::size_t target_dim() const noexcept { return target_dim_; }
  SvdMode mode() const noexcept { return mode_; }
  std::size_t size() const noexcept { return stored_.size(); }
  std::size_t step_counter() const noexcept { return counter_; }
  const std::deque<Vector> &stored() const noexcept { return stored_; }

  void push_solution(std::span<const double> x) {
    if (!stored_.empty() && x.size() != stored_.front().size())
      throw DimensionError("push_solution: dimension mismatch");
    stored_.emplace_back(x.begin(), x.end());
    if (stored_.size() > capacity_) stored_.pop_front();
    ++counter_;
  }

  /// window as an n x size matrix, oldest column first
  DenseColumns window_matrix() const {
    std::vector<Vector> cols(stored_.begin(), stored_.end());
    return DenseColumns::from_columns(cols);
  }

  /// the newest min(s, size) solutions, newest first (cold-start basis)
  DenseColumns recent_solutions() const {
    DenseColumns X;
    const std::size_t k = std::min(target_dim_, stored_.size());
    for (std::size_t i = 0; i < k; ++i) X.append_column(stored_[stored_.size() - 1 - i]);
    return X;
  }

  std::optional<DenseColumns> maybe_refresh() const {
    if (counter_ == 0 || counter_ % interval_ != 0) return std::nullopt;
    if (stored_.size() < std::max<std::size_t>(target_dim_, 2)) return std::nullopt;
    const auto X = window_matrix();
    if (X.n_rows() < X.n_cols()) return std::nullopt;
    const auto svd = thin_svd(X, rank_tol_);
    const std::size_t r = svd.rank;
    if (r == 0) return std::nullopt;
    const std::size_t k = std::min(target_dim_, r);
    DenseColumns basis(X.n_rows(), 0);
    if (mode_ == SvdMode::Largest) {
      for (std::size_t i = 0; i < k; ++i) basis.append_column(svd.left_vectors.col(i));
    } else {
      for (std::size_t i = r - k; i < r; ++i) basis.append_column(svd.left_vectors.col(i));
    }
    return basis;
  }

 private:
  std::size_t capacity_;
  std::size_t interval_;
  std::size_t target_dim_;
  SvdMode mode_;
  double rank_tol_;
  std::deque<Vector> stored_;
  std::size_t counter_ = 0;
};

}  // namespace krecycle
