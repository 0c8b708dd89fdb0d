// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#include "prism/model/architecture.hpp"

#include <fmt/format.h>

#include "prism/tensor/ops.hpp"

namespace prism {

struct Scope::Context {
  bool initializing = false;
  bool train = false;
  DType dtype = DType::f32;
  RngKey init_key{};
  std::optional<RngKey> rng;
  std::uint64_t rng_counter = 0;
  const TensorMap* params_in = nullptr;
  const TensorMap* state_in = nullptr;
  TensorMap params_out;
  TensorMap state_out;
};

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Scope::Scope(std::shared_ptr<Context> context, std::string prefix)
    : context_(std::move(context)), prefix_(std::move(prefix)) {}

std::string Scope::path(const std::string& name) const {
  return prefix_.empty() ? name : prefix_ + "/" + name;
}

Scope Scope::child(const std::string& name) const { return Scope(context_, path(name)); }

bool Scope::is_training() const { return context_->train; }
bool Scope::is_initializing() const { return context_->initializing; }
DType Scope::dtype() const { return context_->dtype; }

RngKey Scope::make_rng() {
  if (!context_->rng) {
    throw ValueError(fmt::format("'{}' needs an rng but apply was called without one", prefix_));
  }
  return fold_in(*context_->rng, context_->rng_counter++);
}

namespace {

Tensor lookup(const TensorMap& map, const std::string& key, const Shape& shape,
              std::string_view kind) {
  auto it = map.find(key);
  if (it == map.end()) {
    throw KeyError(fmt::format("missing {} '{}'", kind, key));
  }
  if (it->second.shape() != shape) {
    throw ShapeError(fmt::format("{} '{}' has shape {}, expected {}", kind, key,
                                 to_string(it->second.shape()), to_string(shape)));
  }
  return it->second;
}

Tensor create(TensorMap& out, const std::string& key, Tensor value, const Shape& shape,
              std::string_view kind) {
  if (out.count(key) != 0) {
    throw ValueError(fmt::format("{} '{}' created twice", kind, key));
  }
  if (value.shape() != shape) {
    throw ShapeError(fmt::format("initializer for '{}' returned shape {}, expected {}", key,
                                 to_string(value.shape()), to_string(shape)));
  }
  out.emplace(key, value);
  return value;
}

}  // namespace

Tensor Scope::param(const std::string& name, const Shape& shape, const Initializer& init) {
  const auto key = path(name);
  if (context_->initializing) {
    return create(context_->params_out, key,
                  init(fold_in(context_->init_key, fnv1a64(key)), shape, context_->dtype), shape,
                  "parameter");
  }
  return lookup(*context_->params_in, key, shape, "parameter");
}

Tensor Scope::variable(const std::string& name, const Shape& shape, const Initializer& init) {
  const auto key = path(name);
  if (context_->initializing) {
    return create(context_->state_out, key,
                  init(fold_in(context_->init_key, fnv1a64(key)), shape, context_->dtype), shape,
                  "state");
  }
  return lookup(*context_->state_in, key, shape, "state");
}

void Scope::update(const std::string& name, const Tensor& value) {
  if (context_->initializing) return;
  const auto key = path(name);
  if (!context_->train) {
    throw ValueError(fmt::format("state '{}' updated outside training", key));
  }
  const auto current = lookup(*context_->state_in, key, value.shape(), "state");
  context_->state_out[key] = astype(stop_gradient(value), current.dtype());
}

Module::Module(Forward forward, DType dtype) : forward_(std::move(forward)), dtype_(dtype) {}

Tensor Module::prepare(const Tensor& inputs) const {
  return is_float(inputs.dtype()) && inputs.dtype() != dtype_ ? astype(inputs, dtype_) : inputs;
}

InitResult Module::init(RngKey rng, const Tensor& dummy_input) const {
  auto context = std::make_shared<Scope::Context>();
  context->initializing = true;
  context->dtype = dtype_;
  context->init_key = rng;
  Scope scope(context, "");
  forward_(scope, prepare(dummy_input));
  InitResult result;
  for (auto& [k, v] : context->params_out) result.params.emplace(k, v.detached());
  for (auto& [k, v] : context->state_out) result.state.emplace(k, v.detached());
  return result;
}

ApplyResult Module::apply(const TensorMap& params, const TensorMap& state, const Tensor& inputs,
                          bool train, std::optional<RngKey> rng) const {
  auto context = std::make_shared<Scope::Context>();
  context->train = train;
  context->dtype = dtype_;
  context->rng = rng;
  context->params_in = &params;
  context->state_in = &state;
  Scope scope(context, "");
  ApplyResult result;
  result.logits = forward_(scope, prepare(inputs));
  result.state = state;
  for (auto& [k, v] : context->state_out) result.state[k] = v;
  return result;
}

}  // namespace prism
