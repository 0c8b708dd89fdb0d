// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "prism/tensor/rng.hpp"
#include "prism/tensor/tensor.hpp"

namespace prism {

/// Produces an initial parameter value.
using Initializer = std::function<Tensor(RngKey key, const Shape& shape, DType dtype)>;

struct InitResult {
  TensorMap params;
  TensorMap state;
};

struct ApplyResult {
  Tensor logits;
  TensorMap state;
};

/// Parameter and state access for one forward pass.
///
/// In init mode `param` and `variable` create values and record them; in
/// apply mode they look up the supplied ones. Names are '/'-joined paths of
/// the child scopes ("block_0/dense/kernel"). A parameter's initial value
/// depends only on the init key and its path.
class Scope {
 public:
  struct Context;

  Scope(std::shared_ptr<Context> context, std::string prefix);

  /// Trainable parameter. Throws ShapeError if a supplied value has another
  /// shape, KeyError if it is missing, ValueError on duplicate creation.
  Tensor param(const std::string& name, const Shape& shape, const Initializer& init);

  /// Non-trainable model state (e.g. running statistics).
  Tensor variable(const std::string& name, const Shape& shape, const Initializer& init);

  /// Replaces a state value for the returned model state. Only allowed in
  /// training mode; ignored during init.
  void update(const std::string& name, const Tensor& value);

  Scope child(const std::string& name) const;

  bool is_training() const;
  bool is_initializing() const;
  DType dtype() const;

  /// Fresh key for stochastic layers. Throws ValueError when apply was called
  /// without an rng.
  RngKey make_rng();

  const std::string& prefix() const { return prefix_; }

 private:
  std::string path(const std::string& name) const;

  std::shared_ptr<Context> context_;
  std::string prefix_;
};

/// The init/apply pair of a network.
class Architecture {
 public:
  virtual ~Architecture() = default;

  /// Deterministic in (rng, dummy_input shape and dtype).
  virtual InitResult init(RngKey rng, const Tensor& dummy_input) const = 0;

  /// With train=false the returned state equals `state`.
  virtual ApplyResult apply(const TensorMap& params, const TensorMap& state, const Tensor& inputs,
                            bool train, std::optional<RngKey> rng = std::nullopt) const = 0;
};

/// Architecture defined by a forward function over a Scope. Floating inputs
/// are cast to `dtype` before the forward function runs.
class Module final : public Architecture {
 public:
  using Forward = std::function<Tensor(Scope& scope, const Tensor& inputs)>;

  Module(Forward forward, DType dtype);

  InitResult init(RngKey rng, const Tensor& dummy_input) const override;
  ApplyResult apply(const TensorMap& params, const TensorMap& state, const Tensor& inputs,
                    bool train, std::optional<RngKey> rng = std::nullopt) const override;

 private:
  Tensor prepare(const Tensor& inputs) const;

  Forward forward_;
  DType dtype_;
};

/// 64-bit FNV-1a of `text`.
std::uint64_t fnv1a64(std::string_view text);

}  // namespace prism
