// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#include "prism/common/debug.hpp"

#include <cmath>

#include <fmt/format.h>

namespace prism {

std::int64_t count_params(const TensorMap& params) { return count_elements(params); }

std::string param_summary(const TensorMap& params) {
  std::string out;
  for (const auto& [name, t] : params) {
    out += fmt::format("{:<40} {:<5} {:<16} {}\n", name, dtype_name(t.dtype()), to_string(t.shape()),
                       t.numel());
  }
  out += fmt::format("total parameters: {}\n", count_params(params));
  return out;
}

std::vector<std::string> non_finite_entries(const TensorMap& tensors) {
  std::vector<std::string> names;
  for (const auto& [name, t] : tensors) {
    if (!is_float(t.dtype())) continue;
    for (double v : t.to_doubles()) {
      if (!std::isfinite(v)) {
        names.push_back(name);
        break;
      }
    }
  }
  return names;
}

}  // namespace prism
