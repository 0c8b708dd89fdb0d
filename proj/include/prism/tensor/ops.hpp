// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "prism/tensor/tensor.hpp"

// Differentiable tensor operations. Every op that takes float inputs records a
// backward rule on the active tape. Binary ops broadcast over trailing
// dimensions and require equal dtypes.

namespace prism {

// Element-wise binary ops.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

// Element-wise unary ops.
Tensor neg(const Tensor& x);
Tensor relu(const Tensor& x);
/// Tanh approximation.
Tensor gelu(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor sqrt(const Tensor& x);
Tensor square(const Tensor& x);
Tensor abs(const Tensor& x);

enum class UnaryOp { neg, relu, gelu, exp, log, sigmoid, tanh, sqrt, square, abs };
enum class BinaryOp { add, sub, mul, div };

Tensor elementwise(UnaryOp op, const Tensor& x);
Tensor elementwise(BinaryOp op, const Tensor& a, const Tensor& b);

/// Scalar of the same dtype as `like`.
Tensor scalar_like(const Tensor& like, double value);
Tensor zeros_like(const Tensor& x);
Tensor ones_like(const Tensor& x);

Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(const Tensor& a, const Tensor& b);
Tensor operator/(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& x);
Tensor operator+(const Tensor& a, double b);
Tensor operator-(const Tensor& a, double b);
Tensor operator*(const Tensor& a, double b);
Tensor operator/(const Tensor& a, double b);
Tensor operator*(double a, const Tensor& b);
Tensor operator-(double a, const Tensor& b);

// Reductions. Empty `axes` reduces over everything.
Tensor sum(const Tensor& x, std::vector<int> axes = {}, bool keepdims = false);
Tensor mean(const Tensor& x, std::vector<int> axes = {}, bool keepdims = false);
/// Sums `x` down to `shape`, undoing a broadcast.
Tensor sum_to(const Tensor& x, const Shape& shape);
/// Maximum along `axis`. The gradient flows to the first maximum.
Tensor max(const Tensor& x, int axis, bool keepdims = false);
/// Index of the first maximum along `axis`, as i32.
Tensor argmax(const Tensor& x, int axis);

/// Batched matrix product over the last two axes; leading axes broadcast.
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor softmax(const Tensor& x, int axis = -1);
Tensor log_softmax(const Tensor& x, int axis = -1);

// Shape ops.
Tensor reshape(const Tensor& x, Shape shape);
Tensor transpose(const Tensor& x, std::vector<int> perm);
/// Swaps the last two axes.
Tensor swap_last(const Tensor& x);
Tensor slice(const Tensor& x, int axis, std::int64_t start, std::int64_t stop);
Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor broadcast_to(const Tensor& x, const Shape& shape);
/// Zero padding of `before`/`after` elements along `axis`.
Tensor pad(const Tensor& x, int axis, std::int64_t before, std::int64_t after);

enum class Padding { same, valid };
Padding parse_padding(std::string_view name);

/// NHWC cross-correlation with an HWIO kernel.
Tensor conv2d(const Tensor& x, const Tensor& kernel, int stride = 1,
              Padding padding = Padding::same);
Tensor max_pool2d(const Tensor& x, int window, int stride);
Tensor avg_pool2d(const Tensor& x, int window, int stride);
/// Nearest-neighbour spatial upsampling of an NHWC tensor.
Tensor upsample_nearest(const Tensor& x, int factor);

// Type and masking helpers.
Tensor astype(const Tensor& x, DType dtype);
Tensor stop_gradient(const Tensor& x);
/// One-hot encoding of i32 class ids; ids outside [0, depth) give all-zero rows.
Tensor one_hot(const Tensor& labels, std::int64_t depth, DType dtype = DType::f32);

}  // namespace prism
