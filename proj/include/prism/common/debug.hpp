// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include "prism/tensor/tensor.hpp"

namespace prism {

/// Total element count over all tensors.
std::int64_t count_params(const TensorMap& params);

/// One line per tensor: name, dtype, shape, element count; then the total.
std::string param_summary(const TensorMap& params);

/// Names of tensors holding NaN or infinity.
std::vector<std::string> non_finite_entries(const TensorMap& tensors);

}  // namespace prism
