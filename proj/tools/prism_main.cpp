// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "prism/baselines/cli.hpp"

int main(int argc, char** argv) { return prism::baselines::cli_main(argc, argv, std::cout, std::cerr); }
