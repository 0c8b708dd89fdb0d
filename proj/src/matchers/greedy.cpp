// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include <fmt/format.h>

#include "prism/matchers/matchers.hpp"

namespace prism {

Assignment greedy_match(const CostMatrix& costs) {
  if (costs.rows < 1 || costs.rows > costs.cols) {
    throw ShapeError(fmt::format("cost matrix must be [n, m] with 1 <= n <= m, got [{}, {}]", costs.rows, costs.cols));
  }
  std::vector<char> row_used(static_cast<std::size_t>(costs.rows), 0);
  std::vector<char> col_used(static_cast<std::size_t>(costs.cols), 0);
  Assignment out;
  out.row_to_col.assign(static_cast<std::size_t>(costs.rows), -1);
  for (std::int64_t step = 0; step < costs.rows; ++step) {
    std::int64_t br = -1;
    std::int64_t bc = -1;
    for (std::int64_t r = 0; r < costs.rows; ++r) {
      if (row_used[static_cast<std::size_t>(r)]) continue;
      for (std::int64_t c = 0; c < costs.cols; ++c) {
        if (col_used[static_cast<std::size_t>(c)]) continue;
        if (br < 0 || costs.at(r, c) < costs.at(br, bc)) {
          br = r;
          bc = c;
        }
      }
    }
    row_used[static_cast<std::size_t>(br)] = 1;
    col_used[static_cast<std::size_t>(bc)] = 1;
    out.row_to_col[static_cast<std::size_t>(br)] = bc;
  }
  out.cost = assignment_cost(costs, out.row_to_col);
  return out;
}

Assignment greedy_match(const Tensor& costs) { return greedy_match(CostMatrix::from_tensor(costs)); }

std::vector<Assignment> batched_match(const Tensor& costs, const BatchedMatchOptions& options) {
  if (costs.ndim() != 3) {
    throw ShapeError(fmt::format("batched costs must be [B, n, m], got {}", to_string(costs.shape())));
  }
  const auto b = costs.dim(0);
  const auto n = costs.dim(1);
  const auto m = costs.dim(2);
  const auto all = costs.to_doubles();
  std::vector<Assignment> out;
  out.reserve(static_cast<std::size_t>(b));
  for (std::int64_t s = 0; s < b; ++s) {
    CostMatrix slice{n, m, std::vector<double>(all.begin() + s * n * m, all.begin() + (s + 1) * n * m)};
    try {
      switch (options.algorithm) {
        case MatchAlgorithm::hungarian:
          out.push_back(hungarian(slice));
          break;
        case MatchAlgorithm::greedy:
          for (double x : slice.values) {
            if (!std::isfinite(x)) throw ValueError("cost matrix has non-finite entries");
          }
          out.push_back(greedy_match(slice));
          break;
        case MatchAlgorithm::sinkhorn:
          out.push_back(sinkhorn_match(slice, options.epsilon, options.iters).assignment);
          break;
      }
    } catch (const ShapeError& e) {
      throw ShapeError(fmt::format("slice {}: {}", s, e.what()));
    } catch (const ValueError& e) {
      throw ValueError(fmt::format("slice {}: {}", s, e.what()));
    }
  }
  return out;
}

}  // namespace prism
