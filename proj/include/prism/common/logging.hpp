// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>

#include <spdlog/logger.h>

namespace prism {

/// Shared stderr logger named "prism". The level comes from PRISM_LOG_LEVEL
/// (trace, debug, info, warn, error, off) and defaults to warn.
std::shared_ptr<spdlog::logger> logger();

}  // namespace prism
