// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#include "prism/layers/layers.hpp"

#include <cmath>

#include <fmt/format.h>

namespace prism::nn {
namespace {

std::int64_t fan_in(const Shape& shape) {
  std::int64_t f = 1;
  for (std::size_t i = 0; i + 1 < shape.size(); ++i) f *= shape[i];
  return f;
}

}  // namespace

Initializer zeros_init() {
  return [](RngKey, const Shape& shape, DType dt) { return Tensor::zeros(shape, dt); };
}

Initializer ones_init() {
  return [](RngKey, const Shape& shape, DType dt) { return Tensor::ones(shape, dt); };
}

Initializer constant_init(double value) {
  return [value](RngKey, const Shape& shape, DType dt) { return Tensor::full(shape, value, dt); };
}

Initializer he_uniform() {
  return [](RngKey key, const Shape& shape, DType dt) {
    const double limit = std::sqrt(6.0 / static_cast<double>(std::max<std::int64_t>(1, fan_in(shape))));
    return rng_uniform(key, shape, dt, -limit, limit);
  };
}

Initializer truncated_normal_init(double stddev) {
  return [stddev](RngKey key, const Shape& shape, DType dt) {
    return rng_truncated_normal(key, shape, stddev, dt);
  };
}

Tensor dense_apply(const Tensor& x, const Tensor& kernel, const Tensor& bias) {
  if (x.ndim() < 1 || kernel.ndim() != 2 || x.dim(-1) != kernel.dim(0)) {
    throw ShapeError(fmt::format("dense: input {} does not match kernel {}", to_string(x.shape()),
                                 to_string(kernel.shape())));
  }
  Tensor y;
  if (x.ndim() == 2) {
    y = matmul(x, kernel);
  } else {
    Shape out = x.shape();
    out.back() = kernel.dim(1);
    y = reshape(matmul(reshape(x, {-1, x.dim(-1)}), kernel), out);
  }
  return bias.defined() ? y + bias : y;
}

Tensor dense(Scope scope, const Tensor& x, std::int64_t features, bool use_bias,
             const Initializer& kernel_init) {
  const auto kernel = scope.param("kernel", {x.dim(-1), features}, kernel_init);
  const auto bias = use_bias ? scope.param("bias", {features}, zeros_init()) : Tensor();
  return dense_apply(x, kernel, bias);
}

Tensor conv(Scope scope, const Tensor& x, std::int64_t features, int kernel_size, int stride,
            Padding padding, bool use_bias) {
  if (x.ndim() != 4) throw ShapeError("conv expects [b, H, W, C] input");
  const auto kernel = scope.param("kernel", {kernel_size, kernel_size, x.dim(3), features}, he_uniform());
  auto y = conv2d(x, kernel, stride, padding);
  if (use_bias) y = y + scope.param("bias", {features}, zeros_init());
  return y;
}

Tensor layer_norm(Scope scope, const Tensor& x, double epsilon) {
  const auto d = x.dim(-1);
  const auto mu = mean(x, {-1}, true);
  const auto centered = x - mu;
  const auto var = mean(square(centered), {-1}, true);
  const auto normed = centered / sqrt(var + epsilon);
  return normed * scope.param("scale", {d}, ones_init()) + scope.param("bias", {d}, zeros_init());
}

Tensor batch_norm(Scope scope, const Tensor& x, BatchNormOptions options) {
  const auto c = x.dim(-1);
  auto running_mean = scope.variable("mean", {c}, zeros_init());
  auto running_var = scope.variable("var", {c}, ones_init());
  const auto scale = scope.param("scale", {c}, ones_init());
  const auto bias = scope.param("bias", {c}, zeros_init());
  Tensor mu;
  Tensor var;
  if (scope.is_training()) {
    std::vector<int> axes;
    for (int a = 0; a + 1 < static_cast<int>(x.ndim()); ++a) axes.push_back(a);
    mu = mean(x, axes);
    var = mean(square(x - mu), axes);
    const double m = options.momentum;
    scope.update("mean", running_mean * m + stop_gradient(mu) * (1.0 - m));
    scope.update("var", running_var * m + stop_gradient(var) * (1.0 - m));
  } else {
    mu = running_mean;
    var = running_var;
  }
  return (x - mu) / sqrt(var + options.epsilon) * scale + bias;
}

Tensor dropout(Scope& scope, const Tensor& x, double rate) {
  if (!scope.is_training() || rate <= 0.0) return x;
  if (rate >= 1.0) return zeros_like(x);
  const auto u = rng_uniform(scope.make_rng(), x.shape(), DType::f64).to_doubles();
  std::vector<double> keep(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) keep[i] = u[i] >= rate ? 1.0 / (1.0 - rate) : 0.0;
  return x * Tensor::from_doubles(x.shape(), keep, x.dtype());
}

Tensor dot_product_attention(const Tensor& q, const Tensor& k, const Tensor& v, const Tensor& mask,
                             Tensor* weights) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.dim(-1)));
  auto scores = matmul(q, swap_last(k)) * scale;
  if (mask.defined()) scores = scores + astype(mask, scores.dtype());
  const auto w = softmax(scores, -1);
  if (weights != nullptr) *weights = w;
  return matmul(w, v);
}

Tensor multi_head_attention(Scope scope, const Tensor& queries, const Tensor& keys_values, int heads,
                            const Tensor& mask, Tensor* weights) {
  if (queries.ndim() != 3 || keys_values.ndim() != 3 || queries.dim(2) != keys_values.dim(2) ||
      queries.dim(0) != keys_values.dim(0)) {
    throw ShapeError(fmt::format("attention: queries {} and keys {} must be [b, n, d] with equal b, d",
                                 to_string(queries.shape()), to_string(keys_values.shape())));
  }
  const auto b = queries.dim(0);
  const auto n = queries.dim(1);
  const auto m = keys_values.dim(1);
  const auto d = queries.dim(2);
  if (heads < 1 || d % heads != 0) {
    throw ShapeError(fmt::format("attention: width {} not divisible by {} heads", d, heads));
  }
  const auto dh = d / heads;
  auto split = [&](const Tensor& t, std::int64_t len) {
    return transpose(reshape(t, {b, len, heads, dh}), {0, 2, 1, 3});
  };
  const auto q = split(dense(scope.child("query"), queries, d), n);
  const auto k = split(dense(scope.child("key"), keys_values, d), m);
  const auto v = split(dense(scope.child("value"), keys_values, d), m);
  const auto attended = dot_product_attention(q, k, v, mask, weights);
  const auto merged = reshape(transpose(attended, {0, 2, 1, 3}), {b, n, d});
  return dense(scope.child("out"), merged, d);
}

Tensor mlp(Scope scope, const Tensor& x, std::int64_t hidden, std::int64_t out_dim, double dropout_rate) {
  auto h = gelu(dense(scope.child("dense_0"), x, hidden));
  h = dropout(scope, h, dropout_rate);
  auto y = dense(scope.child("dense_1"), h, out_dim);
  return dropout(scope, y, dropout_rate);
}

Tensor transformer_block(Scope scope, const Tensor& x, const TransformerOptions& options) {
  const auto normed = layer_norm(scope.child("ln_0"), x);
  auto y = x + dropout(scope, multi_head_attention(scope.child("attention"), normed, normed, options.heads),
                       options.dropout);
  return y + mlp(scope.child("mlp"), layer_norm(scope.child("ln_1"), y), options.mlp_dim, x.dim(-1),
                 options.dropout);
}

Tensor transformer_decoder_block(Scope scope, const Tensor& queries, const Tensor& memory,
                                 const TransformerOptions& options) {
  const auto n0 = layer_norm(scope.child("ln_0"), queries);
  auto y = queries + dropout(scope, multi_head_attention(scope.child("self_attention"), n0, n0, options.heads),
                             options.dropout);
  const auto n1 = layer_norm(scope.child("ln_1"), y);
  y = y + dropout(scope, multi_head_attention(scope.child("cross_attention"), n1, memory, options.heads),
                  options.dropout);
  return y + mlp(scope.child("mlp"), layer_norm(scope.child("ln_2"), y), options.mlp_dim,
                 queries.dim(-1), options.dropout);
}

Tensor mixer_block(Scope scope, const Tensor& x, std::int64_t tokens_mlp_dim,
                   std::int64_t channels_mlp_dim) {
  if (x.ndim() != 3) throw ShapeError("mixer_block expects [b, n, c]");
  const auto tokens = swap_last(layer_norm(scope.child("ln_0"), x));
  auto y = x + swap_last(mlp(scope.child("token_mixing"), tokens, tokens_mlp_dim, x.dim(1)));
  return y + mlp(scope.child("channel_mixing"), layer_norm(scope.child("ln_1"), y), channels_mlp_dim,
                 x.dim(2));
}

Tensor resnet_block(Scope scope, const Tensor& x, std::int64_t features, int stride) {
  auto y = conv(scope.child("conv_0"), x, features, 3, stride, Padding::same, false);
  y = relu(batch_norm(scope.child("bn_0"), y));
  y = conv(scope.child("conv_1"), y, features, 3, 1, Padding::same, false);
  y = batch_norm(scope.child("bn_1"), y);
  auto shortcut = x;
  if (stride != 1 || x.dim(-1) != features) {
    shortcut = conv(scope.child("proj_conv"), x, features, 1, stride, Padding::same, false);
    shortcut = batch_norm(scope.child("proj_bn"), shortcut);
  }
  return relu(y + shortcut);
}

UNetDown unet_down(Scope scope, const Tensor& x, std::int64_t features) {
  if (x.ndim() != 4 || x.dim(1) % 2 != 0 || x.dim(2) % 2 != 0) {
    throw ShapeError(fmt::format("unet_down: input {} needs even spatial extents", to_string(x.shape())));
  }
  auto y = relu(conv(scope.child("conv_0"), x, features, 3));
  y = relu(conv(scope.child("conv_1"), y, features, 3));
  return {y, max_pool2d(y, 2, 2)};
}

Tensor unet_up(Scope scope, const Tensor& x, const Tensor& skip, std::int64_t features) {
  if (!skip.defined()) throw ValueError("unet_up: missing skip input");
  const auto up = upsample_nearest(x, 2);
  if (skip.ndim() != 4 || skip.dim(0) != up.dim(0) || skip.dim(1) != up.dim(1) || skip.dim(2) != up.dim(2)) {
    throw ShapeError(fmt::format("unet_up: skip {} does not match upsampled {}", to_string(skip.shape()),
                                 to_string(up.shape())));
  }
  auto y = concat({up, skip}, 3);
  y = relu(conv(scope.child("conv_0"), y, features, 3));
  return relu(conv(scope.child("conv_1"), y, features, 3));
}

Tensor patch_embed(Scope scope, const Tensor& x, int patch, std::int64_t d) {
  if (x.ndim() != 4 || patch < 1 || x.dim(1) % patch != 0 || x.dim(2) % patch != 0) {
    throw ShapeError(fmt::format("patch_embed: input {} not divisible into {}x{} patches",
                                 to_string(x.shape()), patch, patch));
  }
  const auto b = x.dim(0);
  const auto gh = x.dim(1) / patch;
  const auto gw = x.dim(2) / patch;
  const auto c = x.dim(3);
  auto tiles = reshape(x, {b, gh, patch, gw, patch, c});
  tiles = transpose(tiles, {0, 1, 3, 2, 4, 5});
  tiles = reshape(tiles, {b, gh * gw, patch * patch * c});
  return dense(scope.child("projection"), tiles, d);
}

Tensor add_positional_embedding(Scope scope, const Tensor& x) {
  const auto table = scope.param("pos_embedding", {1, x.dim(1), x.dim(2)}, truncated_normal_init(0.02));
  return x + table;
}

}  // namespace prism::nn
