// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "prism/tensor/tensor.hpp"

namespace prism {

/// Named tensors sharing one leading (example) extent. Holds "inputs" and
/// "label", optionally "batch_mask" (f32, 1 = real row, 0 = padding) and
/// task-specific targets such as "boxes".
using Batch = TensorMap;

/// Leading extent shared by all entries; throws ShapeError if they disagree.
std::int64_t batch_size(const Batch& batch);

/// Pads every entry to `target` rows: "inputs" repeat row 0, "label" and all
/// other entries get zeros. Sets "batch_mask" (an existing mask is extended
/// with zeros). Throws ValueError when the batch has more than `target` rows.
Batch pad_incomplete_batch(const Batch& batch, std::int64_t target);

/// A `target`-row batch shaped like `like` whose mask is all zeros.
Batch masked_padding_batch(const Batch& like, std::int64_t target);

/// Splits along the leading axis into `parts` equal pieces.
std::vector<Batch> split_batch(const Batch& batch, std::int64_t parts);

/// Concatenates batches with identical keys along the leading axis.
Batch concat_batches(const std::vector<Batch>& batches);

/// Float mask for `batch`: "batch_mask" when present, otherwise all ones.
Tensor batch_mask_or_ones(const Batch& batch);

}  // namespace prism
