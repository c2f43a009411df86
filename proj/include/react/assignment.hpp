#pragma once

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "react/core.hpp"

namespace react {

// Dense row-major weight matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<double>> init) {
    rows_ = init.size();
    cols_ = rows_ ? init.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : init) {
      if (r.size() != cols_) throw ContractError("Matrix: ragged initializer");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0 || cols_ == 0; }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct AssignmentResult {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // sorted by row
  double total_weight = 0.0;
};

// Maximum-weight rectangular assignment: returns min(rows, cols) pairs whose
// weight sum is maximal. Shortest augmenting path Hungarian method with
// potentials, O(n^2 m) for n = min(rows, cols).
inline AssignmentResult solve_assignment(const Matrix& weights) {
  AssignmentResult result;
  if (weights.empty()) return result;

  const bool transposed = weights.rows() > weights.cols();
  const std::size_t n = transposed ? weights.cols() : weights.rows();
  const std::size_t m = transposed ? weights.rows() : weights.cols();
  auto cost = [&](std::size_t i, std::size_t j) {
    return transposed ? -weights(j, i) : -weights(i, j);
  };

  constexpr double inf = std::numeric_limits<double>::infinity();
  // 1-based with a virtual column 0, following the classic formulation.
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<std::size_t> col_of_row(n, 0);
  for (std::size_t j = 1; j <= m; ++j)
    if (p[j] != 0) col_of_row[p[j] - 1] = j - 1;

  result.pairs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (transposed)
      result.pairs.emplace_back(col_of_row[i], i);
    else
      result.pairs.emplace_back(i, col_of_row[i]);
  }
  std::sort(result.pairs.begin(), result.pairs.end());
  for (const auto& [r, c] : result.pairs) result.total_weight += weights(r, c);
  return result;
}

}  // namespace react
