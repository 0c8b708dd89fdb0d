// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "prism/common/config.hpp"

namespace prism::baselines {

enum ExitCode : int { kOk = 0, kUsage = 2, kConfig = 3, kRuntime = 4 };

/// Experiment config as `prism run` resolves it: the catalog defaults of
/// `model.name`, overlaid by `file`, then `overrides`, then `seed` if set.
Config resolve_config(const Config& file, const std::vector<std::string>& overrides,
                      std::optional<std::int64_t> seed = std::nullopt);

/// prism run --config PATH --workdir PATH [--override key=value]... [--seed INT]
///
/// Prints the final metrics as one JSON object on `out`; diagnostics go to
/// `err`. Returns an ExitCode.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace prism::baselines
