// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "prism/tensor/dtype.hpp"

namespace prism {

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Experiment configuration: a nested JSON object addressed by dotted paths
/// ("model.hidden_sizes"). Values are immutable; modifications return a new
/// Config. Keys may not contain '.', so every dotted path resolves uniquely.
class Config {
 public:
  Config();
  /// Throws ConfigError unless `root` is an object with dot-free keys.
  explicit Config(nlohmann::json root);

  /// Parses JSON text (comments allowed). Empty or whitespace-only text gives
  /// an empty Config. Errors carry `source:line:column`.
  static Config parse(std::string_view text, std::string_view source = "<string>");

  bool has(std::string_view path) const;
  /// Value at `path`; throws ConfigError naming the path when absent.
  const nlohmann::json& at(std::string_view path) const;

  template <class T>
  T get(std::string_view path) const {
    const auto& node = at(path);
    try {
      return node.get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config key '" + std::string(path) + "' has the wrong type: " + e.what());
    }
  }

  template <class T>
  T get_or(std::string_view path, T fallback) const {
    return has(path) ? get<T>(path) : std::move(fallback);
  }

  /// Copy with `path` set to `value`, creating intermediate objects.
  Config with(std::string_view path, nlohmann::json value) const;

  /// Sub-tree at `path` as its own Config (empty when absent).
  Config sub(std::string_view path) const;

  /// Deep merge: values from `overlay` win, objects merge recursively.
  Config merged(const Config& overlay) const;

  std::string dump(int indent = 2) const;
  const nlohmann::json& root() const { return root_; }

  friend bool operator==(const Config& a, const Config& b) { return a.root_ == b.root_; }

 private:
  nlohmann::json root_;
};

/// Reads and parses a config file. Throws ConfigError if missing or malformed.
Config load_config(const std::filesystem::path& path);

/// Applies "dotted.key=value" assignments. An existing leaf coerces the value
/// to its own type (a clash is an error); "+dotted.key=value" creates a new
/// leaf, inferring the type from the text.
Config override(const Config& config, const std::vector<std::string>& assignments);

}  // namespace prism
