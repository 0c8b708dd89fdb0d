// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "prism/tensor/tensor.hpp"

namespace prism::autodiff {

/// Maps the gradient of an op's output to gradients of each of its inputs.
/// Undefined tensors in the result mean "no gradient" for that input.
using BackwardFn = std::function<std::vector<Tensor>(const Tensor& grad_output)>;

/// Reverse-mode tape. While alive it is the active tape of the constructing
/// thread; ops on watched tensors append nodes in execution order, so every
/// parent precedes its consumers. Tapes nest: the previous tape is restored
/// on destruction and tensors of an outer tape act as constants inside.
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Registers `value` as a differentiation leaf.
  Tensor watch(const Tensor& value);

  /// Gradients of scalar `output` with respect to each of `sources`.
  /// Sources that do not influence `output` receive zeros.
  std::vector<Tensor> gradient(const Tensor& output, const std::vector<Tensor>& sources);

  std::size_t size() const { return nodes_.size(); }

 private:
  friend struct TapeAccess;

  struct Node {
    std::vector<std::int64_t> parents;
    BackwardFn backward;
    Shape shape;
    DType dtype;
  };

  std::uint64_t id_;
  Tape* previous_;
  std::vector<Node> nodes_;
};

/// True when a tape is recording on this thread.
bool recording();

/// Identifier of this thread's innermost recording tape, or 0.
std::uint64_t current_tape_id();

/// Records `output` as the result of an op over `inputs`. If no input is
/// tracked, returns `output` untouched and drops `backward`.
Tensor record(Tensor output, const std::vector<Tensor>& inputs, BackwardFn backward);

/// Suspends recording on this thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  Tape* saved_;
};

struct TapeAccess {
  static std::uint64_t tape_id(const Tensor& t) { return t.tape_id_; }
  static std::int64_t node(const Tensor& t) { return t.node_; }
  static void set_node(Tensor& t, std::uint64_t tape_id, std::int64_t node) {
    t.tape_id_ = tape_id;
    t.node_ = node;
  }
  static std::uint64_t tape_id_of(const Tape& tape) { return tape.id_; }
  static std::int64_t push(Tape& tape, std::vector<std::int64_t> parents, BackwardFn backward,
                           const Tensor& output) {
    tape.nodes_.push_back(
        Tape::Node{std::move(parents), std::move(backward), output.shape(), output.dtype()});
    return static_cast<std::int64_t>(tape.nodes_.size()) - 1;
  }
};

}  // namespace prism::autodiff

namespace prism {

struct ValueAndGrad {
  Tensor value;
  TensorMap grads;
};

using ScalarFn = std::function<Tensor(const TensorMap&)>;

/// Evaluates scalar-valued `f` at `params` and its gradient with respect to
/// every entry. Throws ShapeError if `f` does not return a one-element tensor.
ValueAndGrad value_and_grad(const ScalarFn& f, const TensorMap& params);

TensorMap grad(const ScalarFn& f, const TensorMap& params);

}  // namespace prism
