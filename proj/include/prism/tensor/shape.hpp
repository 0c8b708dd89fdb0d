// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace prism {

using Shape = std::vector<std::int64_t>;

/// Product of extents; 1 for a scalar shape.
std::int64_t numel(const Shape& shape);

std::string to_string(const Shape& shape);

/// Row-major strides, in elements.
Shape strides_of(const Shape& shape);

/// Trailing-dimension broadcast of two shapes. Throws ShapeError when incompatible.
Shape broadcast_shapes(const Shape& a, const Shape& b);

/// Normalizes a possibly negative axis against `ndim`.
int normalize_axis(int axis, std::size_t ndim);

}  // namespace prism
