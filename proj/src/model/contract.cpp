// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#include "prism/model/contract.hpp"

#include <mutex>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace prism {
namespace {

std::map<std::string, ModelFactory>& model_registry() {
  static std::map<std::string, ModelFactory> registry;
  return registry;
}

std::mutex& model_registry_mutex() {
  static std::mutex mu;
  return mu;
}

}  // namespace

ModelContract::ModelContract(Config config, DatasetMetaData meta)
    : config_(std::move(config)), meta_(std::move(meta)) {}

DType ModelContract::dtype() const {
  const auto name = config_.get_or<std::string>("model.dtype", "f32");
  try {
    const auto dt = parse_dtype(name);
    if (is_float(dt)) return dt;
  } catch (const DTypeError&) {
  }
  throw ConfigError(fmt::format("model.dtype must be f32 or f64, got '{}'", name));
}

void register_model(const std::string& name, ModelFactory factory) {
  std::lock_guard lock(model_registry_mutex());
  if (!model_registry().emplace(name, std::move(factory)).second) {
    throw ValueError(fmt::format("model '{}' is already registered", name));
  }
}

std::vector<std::string> registered_models() {
  std::lock_guard lock(model_registry_mutex());
  std::vector<std::string> names;
  for (const auto& [name, _] : model_registry()) names.push_back(name);
  return names;
}

ModelFactory get_model_cls(const std::string& name) {
  {
    std::lock_guard lock(model_registry_mutex());
    auto it = model_registry().find(name);
    if (it != model_registry().end()) return it->second;
  }
  throw KeyError(fmt::format("unknown model '{}'; registered: {}", name,
                             fmt::join(registered_models(), ", ")));
}

}  // namespace prism
