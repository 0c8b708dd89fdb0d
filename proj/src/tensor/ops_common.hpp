// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

// Internal helpers shared by the op implementations.

#pragma once

#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "prism/tensor/autodiff.hpp"
#include "prism/tensor/ops.hpp"

namespace prism::detail {

inline void require_float(const Tensor& x, std::string_view op) {
  if (!x.defined()) {
    throw ValueError(fmt::format("{}: undefined tensor", op));
  }
  if (!is_float(x.dtype())) {
    throw DTypeError(fmt::format("{}: expected float input, got {}", op, dtype_name(x.dtype())));
  }
}

inline void require_same_dtype(const Tensor& a, const Tensor& b, std::string_view op) {
  if (a.dtype() != b.dtype()) {
    throw DTypeError(fmt::format("{}: dtype mismatch {} vs {}", op, dtype_name(a.dtype()),
                                 dtype_name(b.dtype())));
  }
}

/// Splits `shape` around `axis` into (outer, extent, inner) element counts.
struct AxisView {
  std::int64_t outer = 1;
  std::int64_t extent = 1;
  std::int64_t inner = 1;
};

inline AxisView axis_view(const Shape& shape, int axis) {
  AxisView v;
  for (int i = 0; i < axis; ++i) v.outer *= shape[static_cast<std::size_t>(i)];
  v.extent = shape[static_cast<std::size_t>(axis)];
  for (std::size_t i = static_cast<std::size_t>(axis) + 1; i < shape.size(); ++i) {
    v.inner *= shape[i];
  }
  return v;
}

/// Copies `x` into a new contiguous buffer broadcast to `shape`.
Tensor materialize_broadcast(const Tensor& x, const Shape& shape);

}  // namespace prism::detail
