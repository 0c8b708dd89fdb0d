// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#include "prism/common/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace prism {
namespace {

using json = nlohmann::json;

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const auto part = path.substr(start, dot == std::string_view::npos ? dot : dot - start);
    if (part.empty()) {
      throw ConfigError(fmt::format("malformed config path '{}'", path));
    }
    parts.emplace_back(part);
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return parts;
}

void validate_keys(const json& node, const std::string& prefix) {
  if (node.is_object()) {
    for (const auto& [key, value] : node.items()) {
      if (key.empty() || key.find('.') != std::string::npos) {
        throw ConfigError(fmt::format("config key '{}{}' may not be empty or contain '.'", prefix, key));
      }
      validate_keys(value, prefix + key + ".");
    }
  }
}

const json* find(const json& root, std::string_view path) {
  const json* node = &root;
  for (const auto& part : split_path(path)) {
    if (!node->is_object()) return nullptr;
    auto it = node->find(part);
    if (it == node->end()) return nullptr;
    node = &*it;
  }
  return node;
}

std::string trim(std::string_view s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  auto end = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(begin, end - begin + 1));
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\''))) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

json infer_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return json(unquote(text));
  }
}

json coerce(const json& leaf, const std::string& text, const std::string& key) {
  auto clash = [&](std::string_view type) {
    return ConfigError(fmt::format("override '{}={}': value does not fit existing {} leaf", key,
                                   text, type));
  };
  if (leaf.is_number_integer()) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) throw clash("int");
    return json(v);
  }
  if (leaf.is_number_float()) {
    try {
      std::size_t used = 0;
      const double v = std::stod(text, &used);
      if (used != text.size()) throw clash("float");
      return json(v);
    } catch (const std::logic_error&) {
      throw clash("float");
    }
  }
  if (leaf.is_boolean()) {
    if (text == "true" || text == "1") return json(true);
    if (text == "false" || text == "0") return json(false);
    throw clash("bool");
  }
  if (leaf.is_string()) {
    return json(unquote(text));
  }
  if (leaf.is_array() || leaf.is_object()) {
    json v;
    try {
      v = json::parse(text);
    } catch (const json::parse_error&) {
      throw clash(leaf.is_array() ? "list" : "map");
    }
    if (v.type() != leaf.type()) throw clash(leaf.is_array() ? "list" : "map");
    return v;
  }
  return infer_value(text);
}

}  // namespace

Config::Config() : root_(nlohmann::json::object()) {}

Config::Config(nlohmann::json root) : root_(std::move(root)) {
  if (root_.is_null()) root_ = nlohmann::json::object();
  if (!root_.is_object()) {
    throw ConfigError("config root must be an object");
  }
  validate_keys(root_, "");
}

Config Config::parse(std::string_view text, std::string_view source) {
  if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); })) {
    return Config();
  }
  try {
    return Config(json::parse(text, nullptr, true, /*ignore_comments=*/true));
  } catch (const json::parse_error& e) {
    // Map the byte offset to a 1-based line and column.
    const std::size_t byte = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t i = 0; i < byte; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ConfigError(fmt::format("{}:{}:{}: parse error: {}", source, line, column, e.what()));
  }
}

bool Config::has(std::string_view path) const { return find(root_, path) != nullptr; }

const nlohmann::json& Config::at(std::string_view path) const {
  const nlohmann::json* node = find(root_, path);
  if (node == nullptr) {
    throw ConfigError(fmt::format("missing required config key '{}'", path));
  }
  return *node;
}

Config Config::with(std::string_view path, nlohmann::json value) const {
  Config out = *this;
  nlohmann::json* node = &out.root_;
  const auto parts = split_path(path);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->contains(parts[i])) {
      (*node)[parts[i]] = nlohmann::json::object();
    }
    node = &(*node)[parts[i]];
    if (!node->is_object()) {
      throw ConfigError(fmt::format("config path '{}' passes through a non-map value", path));
    }
  }
  validate_keys(value, std::string(path) + ".");
  (*node)[parts.back()] = std::move(value);
  return out;
}

Config Config::sub(std::string_view path) const {
  const nlohmann::json* node = find(root_, path);
  if (node == nullptr) return Config();
  if (!node->is_object()) {
    throw ConfigError(fmt::format("config key '{}' is not a map", path));
  }
  return Config(*node);
}

Config Config::merged(const Config& overlay) const {
  nlohmann::json out = root_;
  out.merge_patch(overlay.root_);
  return Config(std::move(out));
}

std::string Config::dump(int indent) const { return root_.dump(indent); }

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(fmt::format("cannot open config file '{}'", path.string()));
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return Config::parse(buffer.str(), path.string());
}

Config override(const Config& config, const std::vector<std::string>& assignments) {
  Config out = config;
  for (const auto& assignment : assignments) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(fmt::format("override '{}' is not of the form key=value", assignment));
    }
    std::string key = trim(std::string_view(assignment).substr(0, eq));
    const std::string text = trim(std::string_view(assignment).substr(eq + 1));
    const bool create = !key.empty() && key.front() == '+';
    if (create) key.erase(0, 1);
    const json* leaf = find(out.root(), key);
    if (leaf == nullptr && !create) {
      throw ConfigError(fmt::format("override of unknown key '{}' (prefix with '+' to add it)", key));
    }
    out = out.with(key, leaf != nullptr ? coerce(*leaf, text, key) : infer_value(text));
  }
  return out;
}

}  // namespace prism
