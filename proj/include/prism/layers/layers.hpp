// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>

#include "prism/model/architecture.hpp"
#include "prism/tensor/ops.hpp"

namespace prism::nn {

// Initializers. Fan-in is the product of all but the last dimension.
Initializer zeros_init();
Initializer ones_init();
Initializer constant_init(double value);
Initializer he_uniform();
Initializer truncated_normal_init(double stddev);

/// x @ W + b over the last axis. W is [d_in, d_out], b is [d_out] or undefined.
Tensor dense_apply(const Tensor& x, const Tensor& kernel, const Tensor& bias = {});

/// Dense layer with params "kernel" [d_in, features] and "bias" [features].
Tensor dense(Scope scope, const Tensor& x, std::int64_t features, bool use_bias = true,
             const Initializer& kernel_init = he_uniform());

/// NHWC convolution with params "kernel" [k, k, C, features] and "bias".
Tensor conv(Scope scope, const Tensor& x, std::int64_t features, int kernel_size, int stride = 1,
            Padding padding = Padding::same, bool use_bias = true);

/// Normalizes over the last axis; params "scale" and "bias".
Tensor layer_norm(Scope scope, const Tensor& x, double epsilon = 1e-6);

struct BatchNormOptions {
  double momentum = 0.9;  // running = momentum * running + (1 - momentum) * batch
  double epsilon = 1e-5;
};

/// Normalizes each channel (last axis) with batch statistics in training and
/// running statistics ("mean", "var" state) otherwise.
Tensor batch_norm(Scope scope, const Tensor& x, BatchNormOptions options = {});

/// Inverted dropout; identity unless training with rate > 0.
Tensor dropout(Scope& scope, const Tensor& x, double rate);

/// softmax(q k^T / sqrt(d) + mask) v over the last two axes of
/// q [..., n, d], k [..., m, d], v [..., m, dv]. `weights`, when given,
/// receives the attention matrix.
Tensor dot_product_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                             const Tensor& mask = {}, Tensor* weights = nullptr);

/// Multi-head attention from `queries` [b, n, d] to `keys_values` [b, m, d]
/// with projections "query", "key", "value", "out". `mask` is additive and
/// broadcasts against [b, heads, n, m]. Throws ShapeError if d % heads != 0.
Tensor multi_head_attention(Scope scope, const Tensor& queries, const Tensor& keys_values,
                            int heads, const Tensor& mask = {}, Tensor* weights = nullptr);

/// dense(hidden) -> gelu -> dense(out_dim) with dropout after each.
Tensor mlp(Scope scope, const Tensor& x, std::int64_t hidden, std::int64_t out_dim,
           double dropout_rate = 0.0);

struct TransformerOptions {
  int heads = 4;
  std::int64_t mlp_dim = 128;
  double dropout = 0.0;
};

/// Pre-LN encoder block on [b, n, d]: x + attn(ln(x)), then + mlp(ln(.)).
Tensor transformer_block(Scope scope, const Tensor& x, const TransformerOptions& options);

/// Pre-LN decoder block: self-attention over `queries`, cross-attention to
/// `memory`, then MLP, each with a residual.
Tensor transformer_decoder_block(Scope scope, const Tensor& queries, const Tensor& memory,
                                 const TransformerOptions& options);

/// Mixer block on [b, n, c]: token-mixing MLP across n then channel-mixing
/// MLP across c, each pre-LN with a residual.
Tensor mixer_block(Scope scope, const Tensor& x, std::int64_t tokens_mlp_dim,
                   std::int64_t channels_mlp_dim);

/// conv3x3(stride)-BN-relu-conv3x3-BN plus shortcut, then relu. The shortcut
/// is a 1x1 conv + BN when stride or channel count changes.
Tensor resnet_block(Scope scope, const Tensor& x, std::int64_t features, int stride = 1);

struct UNetDown {
  Tensor skip;    // [b, H, W, features]
  Tensor pooled;  // [b, H/2, W/2, features]
};

/// Two conv3x3-relu layers, then 2x2 max pooling.
UNetDown unet_down(Scope scope, const Tensor& x, std::int64_t features);

/// 2x nearest upsampling, channel concat with `skip`, two conv3x3-relu
/// layers. Throws ValueError without a skip, ShapeError on extent mismatch.
Tensor unet_up(Scope scope, const Tensor& x, const Tensor& skip, std::int64_t features);

/// Non-overlapping patch x patch tiles of [b, H, W, C] flattened in (row,
/// col, channel) order and projected to [b, HW/patch^2, d].
Tensor patch_embed(Scope scope, const Tensor& x, int patch, std::int64_t d);

/// x + learned table "pos_embedding" [1, n, d].
Tensor add_positional_embedding(Scope scope, const Tensor& x);

}  // namespace prism::nn
