// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#include "prism/common/logging.hpp"

#include <cstdlib>
#include <mutex>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace prism {

std::shared_ptr<spdlog::logger> logger() {
  static std::once_flag once;
  static std::shared_ptr<spdlog::logger> instance;
  std::call_once(once, [] {
    instance = spdlog::stderr_color_mt("prism");
    auto level = spdlog::level::warn;
    if (const char* env = std::getenv("PRISM_LOG_LEVEL")) {
      level = spdlog::level::from_str(env);
    }
    instance->set_level(level);
  });
  return instance;
}

}  // namespace prism
