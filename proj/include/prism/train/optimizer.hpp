// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "prism/common/config.hpp"
#include "prism/tensor/tensor.hpp"

namespace prism {

/// Learning rate as a function of the step being taken (0-based).
using Schedule = std::function<double(std::int64_t step)>;

Schedule constant_schedule(double lr);

/// Linear warmup to `base` over `warmup_steps`, then cosine decay to
/// `final_fraction * base` at `total_steps`; constant afterwards.
Schedule cosine_schedule(double base, std::int64_t total_steps, std::int64_t warmup_steps = 0,
                         double final_fraction = 0.0);

enum class OptimizerKind { sgd, sgd_momentum, adam };

struct OptimizerSpec {
  OptimizerKind kind = OptimizerKind::adam;
  Schedule lr = constant_schedule(1e-3);
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Rescales gradients whose global L2 norm exceeds this value.
  std::optional<double> clip_norm;
};

/// Reads `lr` (top level, default 1e-3), `total_steps` and the `optimizer`
/// map: kind (sgd | sgd_momentum | adam), schedule (constant | cosine),
/// warmup_steps, final_fraction, momentum, beta1, beta2, eps, clip_norm.
/// Throws ConfigError on unknown names or out-of-range values.
OptimizerSpec optimizer_from_config(const Config& config);

/// Slot tensors for `params`, keyed "<slot>/<param name>".
TensorMap init_optimizer_state(const OptimizerSpec& spec, const TensorMap& params);

struct OptimizerUpdate {
  TensorMap params;
  TensorMap opt_state;
};

/// One update at step `step` (0-based). Arithmetic is carried out in double
/// and rounded to each parameter's dtype. Throws KeyError on mismatched keys
/// and ValueError if the learning rate is negative or not finite.
OptimizerUpdate apply_optimizer(const OptimizerSpec& spec, std::int64_t step, const TensorMap& params,
                                const TensorMap& grads, const TensorMap& opt_state);

/// sqrt of the sum of squares of every gradient entry.
double global_norm(const TensorMap& grads);

}  // namespace prism
