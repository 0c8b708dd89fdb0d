// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "prism/tensor/tensor.hpp"

namespace prism {

/// Injective map from the n rows of a cost matrix to its m >= n columns.
struct Assignment {
  std::vector<std::int64_t> row_to_col;
  /// Sum of costs[i, row_to_col[i]] accumulated in row order.
  double cost = 0.0;

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

/// Row-major cost matrix in double precision.
struct CostMatrix {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<double> values;

  /// From a 2-D float tensor. Throws ShapeError unless 1 <= rows <= cols,
  /// ValueError on non-finite entries.
  static CostMatrix from_tensor(const Tensor& costs);

  double at(std::int64_t r, std::int64_t c) const {
    return values[static_cast<std::size_t>(r * cols + c)];
  }
};

/// Cost of `row_to_col` summed in row order.
double assignment_cost(const CostMatrix& costs, const std::vector<std::int64_t>& row_to_col);

/// Exact minimum-cost assignment (O(n^2 m) shortest augmenting paths). Among
/// optimal assignments returns the lexicographically smallest row_to_col.
Assignment hungarian(const Tensor& costs);
Assignment hungarian(const CostMatrix& costs);

/// Repeatedly takes the globally cheapest remaining cell; ties go to the
/// smallest (row, col).
Assignment greedy_match(const Tensor& costs);
Assignment greedy_match(const CostMatrix& costs);

struct SinkhornResult {
  Tensor plan;  // [n, m] f64, rows of the padded square problem
  Assignment assignment;
  /// Row-order argmax rounding before local search.
  Assignment rounded;
  /// max over real rows and all columns of |marginal - 1/m|.
  double marginal_violation = 0.0;
  bool log_domain = false;
};

/// Entropic transport on the cost matrix padded with zero-cost rows to m x m,
/// uniform marginals 1/m. Alternates row then column scaling for `iters`
/// iterations. Works in the log domain for epsilon <= 0.05 or when the
/// scaling iteration under/overflows. The hard assignment takes each row's
/// argmax in row order over unused columns; with `refine` it is then improved
/// by pair swaps and 3-cycles until no move lowers the cost. Throws ValueError on bad
/// arguments or a non-finite result.
SinkhornResult sinkhorn_match(const Tensor& costs, double epsilon, int iters, bool refine = true);
SinkhornResult sinkhorn_match(const CostMatrix& costs, double epsilon, int iters, bool refine = true);

/// First-improvement local search over row pair swaps, 3-cycles and moves to
/// unused columns. The cost never increases.
Assignment refine_assignment(const CostMatrix& costs, Assignment start);

enum class MatchAlgorithm { hungarian, sinkhorn, greedy };

struct BatchedMatchOptions {
  MatchAlgorithm algorithm = MatchAlgorithm::hungarian;
  double epsilon = 0.01;
  int iters = 1000;
};

/// One assignment per slice of `costs` [B, n, m]. Errors name the slice.
std::vector<Assignment> batched_match(const Tensor& costs, const BatchedMatchOptions& options = {});

}  // namespace prism
