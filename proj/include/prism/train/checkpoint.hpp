// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>

#include "prism/common/metrics.hpp"
#include "prism/train/train_state.hpp"

namespace prism {

/// Unreadable, truncated or corrupted checkpoint.
class CheckpointError : public IoError {
 public:
  using IoError::IoError;
};

/// Binary container, all integers little-endian:
///   "PRISMCKP" | u32 version | i64 step | u64 rng.hi | u64 rng.lo
///   3 sections (params, model_state, opt_state), each:
///     u32 count, then per entry: u32 name length, name, u8 dtype,
///     u32 ndim, i64 dims[ndim], u64 payload bytes, payload
///   u64 FNV-1a 64 of every preceding byte
/// Written to a temporary file and renamed into place.
void save_checkpoint(const TrainState& state, const std::filesystem::path& path);

/// Throws CheckpointError on a missing or malformed file.
TrainState load_checkpoint(const std::filesystem::path& path);

/// Path of the `ckpt_<step>.bin` in `dir` with the highest step, if any.
std::optional<std::filesystem::path> latest_checkpoint(const std::filesystem::path& dir);

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, std::int64_t step);

}  // namespace prism
