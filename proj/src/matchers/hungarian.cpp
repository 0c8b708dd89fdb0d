// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "prism/matchers/matchers.hpp"

namespace prism {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Duals {
  std::vector<double> u;  // per row
  std::vector<double> v;  // per column, <= 0
  std::vector<std::int64_t> row_to_col;
};

// Shortest augmenting paths with potentials, rows added one at a time.
Duals solve(const CostMatrix& c) {
  const auto n = c.rows;
  const auto m = c.cols;
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<double> v(static_cast<std::size_t>(m + 1), 0.0);
  std::vector<std::int64_t> p(static_cast<std::size_t>(m + 1), 0);  // column -> row (1-based)
  std::vector<std::int64_t> way(static_cast<std::size_t>(m + 1), 0);
  for (std::int64_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::int64_t j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(m + 1), kInf);
    std::vector<char> used(static_cast<std::size_t>(m + 1), 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const auto i0 = p[static_cast<std::size_t>(j0)];
      double delta = kInf;
      std::int64_t j1 = 0;
      for (std::int64_t j = 1; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = c.at(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (std::int64_t j = 0; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const auto j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  Duals d;
  d.u.assign(u.begin() + 1, u.end());
  d.v.assign(v.begin() + 1, v.end());
  d.row_to_col.assign(static_cast<std::size_t>(n), -1);
  for (std::int64_t j = 1; j <= m; ++j) {
    if (p[static_cast<std::size_t>(j)] != 0) d.row_to_col[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
  }
  return d;
}

// Bipartite matching over allowed edges by augmenting paths (Kuhn).
class TightGraph {
 public:
  TightGraph(std::int64_t rows, std::int64_t cols, std::vector<char> allowed)
      : rows_(rows), cols_(cols), allowed_(std::move(allowed)) {}

  bool edge(std::int64_t r, std::int64_t c) const {
    return allowed_[static_cast<std::size_t>(r * cols_ + c)] != 0;
  }

  // Can every row in `rows` be matched into `cols`?
  bool saturates_rows(const std::vector<std::int64_t>& rows, const std::vector<char>& col_free) const {
    std::vector<std::int64_t> owner(static_cast<std::size_t>(cols_), -1);
    for (auto r : rows) {
      std::vector<char> seen(static_cast<std::size_t>(cols_), 0);
      if (!augment_row(r, col_free, seen, owner)) return false;
    }
    return true;
  }

  // Can every column in `cols` be matched into rows marked in `row_free`?
  bool saturates_cols(const std::vector<std::int64_t>& cols, const std::vector<char>& row_free) const {
    std::vector<std::int64_t> owner(static_cast<std::size_t>(rows_), -1);
    for (auto c : cols) {
      std::vector<char> seen(static_cast<std::size_t>(rows_), 0);
      if (!augment_col(c, row_free, seen, owner)) return false;
    }
    return true;
  }

 private:
  bool augment_row(std::int64_t r, const std::vector<char>& col_free, std::vector<char>& seen,
                   std::vector<std::int64_t>& owner) const {
    for (std::int64_t c = 0; c < cols_; ++c) {
      if (!col_free[static_cast<std::size_t>(c)] || !edge(r, c) || seen[static_cast<std::size_t>(c)]) continue;
      seen[static_cast<std::size_t>(c)] = 1;
      if (owner[static_cast<std::size_t>(c)] < 0 ||
          augment_row(owner[static_cast<std::size_t>(c)], col_free, seen, owner)) {
        owner[static_cast<std::size_t>(c)] = r;
        return true;
      }
    }
    return false;
  }

  bool augment_col(std::int64_t c, const std::vector<char>& row_free, std::vector<char>& seen,
                   std::vector<std::int64_t>& owner) const {
    for (std::int64_t r = 0; r < rows_; ++r) {
      if (!row_free[static_cast<std::size_t>(r)] || !edge(r, c) || seen[static_cast<std::size_t>(r)]) continue;
      seen[static_cast<std::size_t>(r)] = 1;
      if (owner[static_cast<std::size_t>(r)] < 0 ||
          augment_col(owner[static_cast<std::size_t>(r)], row_free, seen, owner)) {
        owner[static_cast<std::size_t>(r)] = c;
        return true;
      }
    }
    return false;
  }

  std::int64_t rows_;
  std::int64_t cols_;
  std::vector<char> allowed_;
};

// Lexicographically smallest optimal assignment. An assignment is optimal
// iff it uses only tight edges (zero reduced cost) and covers every column
// with a negative dual. Rows are fixed in order to the smallest column that
// still admits a completion; by Mendelsohn-Dulmage a completion exists iff
// the remaining rows and the remaining required columns can each be
// saturated separately.
std::vector<std::int64_t> smallest_optimal(const CostMatrix& c, const Duals& d) {
  const auto n = c.rows;
  const auto m = c.cols;
  double scale = 1.0;
  for (double x : c.values) scale = std::max(scale, std::abs(x));
  const double tol = 1e-10 * scale;
  std::vector<char> allowed(static_cast<std::size_t>(n * m), 0);
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < m; ++j) {
      const double reduced = c.at(i, j) - d.u[static_cast<std::size_t>(i)] - d.v[static_cast<std::size_t>(j)];
      allowed[static_cast<std::size_t>(i * m + j)] = std::abs(reduced) <= tol;
    }
  }
  std::vector<char> required(static_cast<std::size_t>(m), 0);
  for (std::int64_t j = 0; j < m; ++j) required[static_cast<std::size_t>(j)] = d.v[static_cast<std::size_t>(j)] < -tol;
  TightGraph graph(n, m, std::move(allowed));

  std::vector<char> col_free(static_cast<std::size_t>(m), 1);
  std::vector<char> row_free(static_cast<std::size_t>(n), 1);
  std::vector<std::int64_t> result(static_cast<std::size_t>(n), -1);
  for (std::int64_t i = 0; i < n; ++i) {
    row_free[static_cast<std::size_t>(i)] = 0;
    std::vector<std::int64_t> rest_rows;
    for (auto r = i + 1; r < n; ++r) rest_rows.push_back(r);
    bool placed = false;
    for (std::int64_t j = 0; j < m && !placed; ++j) {
      if (!col_free[static_cast<std::size_t>(j)] || !graph.edge(i, j)) continue;
      col_free[static_cast<std::size_t>(j)] = 0;
      std::vector<std::int64_t> rest_required;
      for (std::int64_t k = 0; k < m; ++k) {
        if (col_free[static_cast<std::size_t>(k)] && required[static_cast<std::size_t>(k)]) rest_required.push_back(k);
      }
      if (graph.saturates_rows(rest_rows, col_free) && graph.saturates_cols(rest_required, row_free)) {
        result[static_cast<std::size_t>(i)] = j;
        placed = true;
      } else {
        col_free[static_cast<std::size_t>(j)] = 1;
      }
    }
    if (!placed) return {};  // tolerance trouble; caller keeps the solver's answer
  }
  return result;
}

}  // namespace

CostMatrix CostMatrix::from_tensor(const Tensor& costs) {
  if (costs.ndim() != 2 || costs.dim(0) < 1 || costs.dim(0) > costs.dim(1)) {
    throw ShapeError(fmt::format("cost matrix must be [n, m] with 1 <= n <= m, got {}",
                                 to_string(costs.shape())));
  }
  CostMatrix c{costs.dim(0), costs.dim(1), costs.to_doubles()};
  for (double x : c.values) {
    if (!std::isfinite(x)) throw ValueError("cost matrix has non-finite entries");
  }
  return c;
}

double assignment_cost(const CostMatrix& costs, const std::vector<std::int64_t>& row_to_col) {
  double total = 0.0;
  for (std::size_t i = 0; i < row_to_col.size(); ++i) {
    total += costs.at(static_cast<std::int64_t>(i), row_to_col[i]);
  }
  return total;
}

Assignment hungarian(const CostMatrix& costs) {
  if (costs.rows < 1 || costs.rows > costs.cols) {
    throw ShapeError(fmt::format("cost matrix must be [n, m] with 1 <= n <= m, got [{}, {}]", costs.rows, costs.cols));
  }
  for (double x : costs.values) {
    if (!std::isfinite(x)) throw ValueError("cost matrix has non-finite entries");
  }
  const auto duals = solve(costs);
  Assignment best{duals.row_to_col, assignment_cost(costs, duals.row_to_col)};
  auto smallest = smallest_optimal(costs, duals);
  if (!smallest.empty()) {
    const double cost = assignment_cost(costs, smallest);
    if (cost <= best.cost) best = {std::move(smallest), cost};
  }
  return best;
}

Assignment hungarian(const Tensor& costs) { return hungarian(CostMatrix::from_tensor(costs)); }

}  // namespace prism
