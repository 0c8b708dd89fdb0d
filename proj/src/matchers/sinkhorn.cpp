// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "prism/matchers/matchers.hpp"

namespace prism {
namespace {

constexpr double kLogDomainThreshold = 0.05;

struct Plan {
  std::vector<double> p;  // N x N
  bool ok = true;
};

double log_sum_exp(const double* x, std::size_t n, std::size_t stride) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, x[i * stride]);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(x[i * stride] - m);
  return m + std::log(s);
}

// Scaling iteration on K = exp(-C / eps). Reports failure on under/overflow.
Plan scaling_sinkhorn(const std::vector<double>& c, std::size_t n, double eps, int iters) {
  const double mass = 1.0 / static_cast<double>(n);
  std::vector<double> k(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) k[i] = std::exp(-c[i] / eps);
  std::vector<double> u(n, 1.0);
  std::vector<double> v(n, 1.0);
  auto bad = [](double x) { return !std::isfinite(x) || x == 0.0; };
  for (int it = 0; it < iters; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += k[i * n + j] * v[j];
      u[i] = mass / s;
      if (bad(u[i])) return {{}, false};
    }
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += k[i * n + j] * u[i];
      v[j] = mass / s;
      if (bad(v[j])) return {{}, false};
    }
  }
  Plan plan;
  plan.p.resize(c.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) plan.p[i * n + j] = u[i] * k[i * n + j] * v[j];
  }
  return plan;
}

// Same iteration on dual potentials f, g with log-sum-exp updates.
Plan log_sinkhorn(const std::vector<double>& c, std::size_t n, double eps, int iters) {
  const double log_mass = -std::log(static_cast<double>(n));
  std::vector<double> f(n, 0.0);
  std::vector<double> g(n, 0.0);
  std::vector<double> scratch(n * n);
  for (int it = 0; it < iters; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) scratch[i * n + j] = (g[j] - c[i * n + j]) / eps;
      f[i] = eps * (log_mass - log_sum_exp(scratch.data() + i * n, n, 1));
    }
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < n; ++i) scratch[i * n + j] = (f[i] - c[i * n + j]) / eps;
      g[j] = eps * (log_mass - log_sum_exp(scratch.data() + j, n, n));
    }
  }
  Plan plan;
  plan.p.resize(c.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      plan.p[i * n + j] = std::exp((f[i] + g[j] - c[i * n + j]) / eps);
      if (!std::isfinite(plan.p[i * n + j])) plan.ok = false;
    }
  }
  return plan;
}

}  // namespace

Assignment refine_assignment(const CostMatrix& costs, Assignment start) {
  auto& a = start.row_to_col;
  const auto n = static_cast<std::int64_t>(a.size());
  const auto m = costs.cols;
  double scale = 0.0;
  for (double x : costs.values) scale = std::max(scale, std::abs(x));
  const double tol = 1e-12 * std::max(scale, 1.0);
  auto c = [&](std::int64_t i, std::int64_t j) { return costs.at(i, j); };
  std::vector<char> used(static_cast<std::size_t>(m), 0);
  for (auto j : a) used[static_cast<std::size_t>(j)] = 1;

  bool improved = true;
  while (improved) {
    improved = false;
    for (std::int64_t i = 0; i < n; ++i) {
      for (std::int64_t j = 0; j < m; ++j) {
        if (!used[static_cast<std::size_t>(j)] && c(i, j) - c(i, a[i]) < -tol) {
          used[static_cast<std::size_t>(a[i])] = 0;
          used[static_cast<std::size_t>(j)] = 1;
          a[i] = j;
          improved = true;
        }
      }
    }
    for (std::int64_t i = 0; i < n; ++i) {
      for (std::int64_t k = i + 1; k < n; ++k) {
        if (c(i, a[k]) + c(k, a[i]) - c(i, a[i]) - c(k, a[k]) < -tol) {
          std::swap(a[i], a[k]);
          improved = true;
        }
      }
    }
    for (std::int64_t i = 0; i < n; ++i) {
      for (std::int64_t k = 0; k < n; ++k) {
        for (std::int64_t l = 0; l < n; ++l) {
          if (i == k || k == l || i == l) continue;
          // Row i takes k's column, k takes l's, l takes i's.
          if (c(i, a[k]) + c(k, a[l]) + c(l, a[i]) - c(i, a[i]) - c(k, a[k]) - c(l, a[l]) < -tol) {
            const auto first = a[i];
            a[i] = a[k];
            a[k] = a[l];
            a[l] = first;
            improved = true;
          }
        }
      }
    }
  }
  start.cost = assignment_cost(costs, a);
  return start;
}

SinkhornResult sinkhorn_match(const CostMatrix& costs, double epsilon, int iters, bool refine) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ValueError("sinkhorn: epsilon must be > 0");
  if (iters < 1) throw ValueError("sinkhorn: iters must be >= 1");
  if (costs.rows < 1 || costs.rows > costs.cols) {
    throw ShapeError(fmt::format("cost matrix must be [n, m] with 1 <= n <= m, got [{}, {}]", costs.rows, costs.cols));
  }
  for (double x : costs.values) {
    if (!std::isfinite(x)) throw ValueError("cost matrix has non-finite entries");
  }
  const auto n = static_cast<std::size_t>(costs.rows);
  const auto m = static_cast<std::size_t>(costs.cols);
  std::vector<double> square(m * m, 0.0);
  std::copy(costs.values.begin(), costs.values.end(), square.begin());

  SinkhornResult result;
  Plan plan;
  if (epsilon > kLogDomainThreshold) plan = scaling_sinkhorn(square, m, epsilon, iters);
  if (epsilon <= kLogDomainThreshold || !plan.ok) {
    result.log_domain = true;
    plan = log_sinkhorn(square, m, epsilon, iters);
  }
  if (!plan.ok) throw ValueError("sinkhorn: non-finite transport plan");

  const double mass = 1.0 / static_cast<double>(m);
  double violation = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) s += plan.p[i * m + j];
    violation = std::max(violation, std::abs(s - mass));
  }
  for (std::size_t j = 0; j < m; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += plan.p[i * m + j];
    violation = std::max(violation, std::abs(s - mass));
  }
  result.marginal_violation = violation;

  std::vector<double> real(plan.p.begin(), plan.p.begin() + static_cast<std::ptrdiff_t>(n * m));
  std::vector<char> used(m, 0);
  result.assignment.row_to_col.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = m;
    for (std::size_t j = 0; j < m; ++j) {
      if (!used[j] && (best == m || real[i * m + j] > real[i * m + best])) best = j;
    }
    used[best] = 1;
    result.assignment.row_to_col[i] = static_cast<std::int64_t>(best);
  }
  result.assignment.cost = assignment_cost(costs, result.assignment.row_to_col);
  result.rounded = result.assignment;
  if (refine) result.assignment = refine_assignment(costs, result.assignment);
  result.plan = Tensor(Shape{costs.rows, costs.cols}, std::move(real));
  return result;
}

SinkhornResult sinkhorn_match(const Tensor& costs, double epsilon, int iters, bool refine) {
  return sinkhorn_match(CostMatrix::from_tensor(costs), epsilon, iters, refine);
}

}  // namespace prism
