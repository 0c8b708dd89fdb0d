// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#include "prism/data/batch.hpp"

#include <fmt/format.h>

#include "prism/tensor/ops.hpp"

namespace prism {

std::int64_t batch_size(const Batch& batch) {
  std::int64_t size = -1;
  for (const auto& [name, t] : batch) {
    if (t.ndim() == 0) {
      throw ShapeError(fmt::format("batch entry '{}' is a scalar", name));
    }
    if (size >= 0 && t.dim(0) != size) {
      throw ShapeError(fmt::format("batch entry '{}' has leading extent {}, expected {}", name,
                                   t.dim(0), size));
    }
    size = t.dim(0);
  }
  if (size < 0) throw ShapeError("empty batch");
  return size;
}

Batch pad_incomplete_batch(const Batch& batch, std::int64_t target) {
  const auto rows = batch_size(batch);
  if (rows > target) {
    throw ValueError(fmt::format("batch of {} rows exceeds target size {}", rows, target));
  }
  const auto missing = target - rows;
  Batch out;
  for (const auto& [name, t] : batch) {
    if (missing == 0 || name == "batch_mask") {
      out[name] = t;
    } else if (name == "inputs") {
      Shape rep = t.shape();
      rep[0] = missing;
      out[name] = concat({t, broadcast_to(slice(t, 0, 0, 1), rep)}, 0);
    } else {
      out[name] = pad(t, 0, 0, missing);
    }
  }
  auto it = batch.find("batch_mask");
  out["batch_mask"] = it != batch.end() ? pad(it->second, 0, 0, missing)
                                        : pad(Tensor::ones({rows}), 0, 0, missing);
  return out;
}

Batch masked_padding_batch(const Batch& like, std::int64_t target) {
  Batch out = pad_incomplete_batch(
      [&] {
        Batch one;
        for (const auto& [name, t] : like) one[name] = slice(t, 0, 0, 1);
        return one;
      }(),
      target);
  out["batch_mask"] = Tensor::zeros({target});
  return out;
}

std::vector<Batch> split_batch(const Batch& batch, std::int64_t parts) {
  const auto rows = batch_size(batch);
  if (parts < 1 || rows % parts != 0) {
    throw ShapeError(fmt::format("cannot split {} rows into {} equal parts", rows, parts));
  }
  const auto step = rows / parts;
  std::vector<Batch> out(static_cast<std::size_t>(parts));
  for (std::int64_t p = 0; p < parts; ++p) {
    for (const auto& [name, t] : batch) {
      out[static_cast<std::size_t>(p)][name] = parts == 1 ? t : slice(t, 0, p * step, (p + 1) * step);
    }
  }
  return out;
}

Batch concat_batches(const std::vector<Batch>& batches) {
  if (batches.empty()) throw ValueError("concat_batches: no batches");
  if (batches.size() == 1) return batches.front();
  Batch out;
  for (const auto& [name, first] : batches.front()) {
    std::vector<Tensor> parts;
    for (const auto& b : batches) {
      auto it = b.find(name);
      if (it == b.end()) throw KeyError(fmt::format("concat_batches: entry '{}' missing", name));
      parts.push_back(it->second);
    }
    out[name] = concat(parts, 0);
  }
  for (const auto& b : batches) {
    if (b.size() != out.size()) throw KeyError("concat_batches: batches have different keys");
  }
  return out;
}

Tensor batch_mask_or_ones(const Batch& batch) {
  auto it = batch.find("batch_mask");
  if (it != batch.end()) return it->second;
  return Tensor::ones({batch_size(batch)});
}

}  // namespace prism
