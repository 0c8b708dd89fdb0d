// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#include "prism/tensor/autodiff.hpp"

#include <atomic>

#include <fmt/format.h>

#include "prism/tensor/ops.hpp"

namespace prism::autodiff {
namespace {

thread_local Tape* g_active = nullptr;
std::atomic<std::uint64_t> g_next_id{1};

}  // namespace

bool recording() { return g_active != nullptr; }

std::uint64_t current_tape_id() { return g_active ? TapeAccess::tape_id_of(*g_active) : 0; }

Tape::Tape() : id_(g_next_id.fetch_add(1)), previous_(g_active) { g_active = this; }

Tape::~Tape() { g_active = previous_; }

Tensor Tape::watch(const Tensor& value) {
  if (!is_float(value.dtype())) {
    throw DTypeError("only float tensors can be differentiated");
  }
  if (g_active != this) {
    throw ValueError("watch() called on a tape that is not the innermost active tape");
  }
  Tensor leaf = value.detached();
  nodes_.push_back(Node{{}, nullptr, leaf.shape(), leaf.dtype()});
  TapeAccess::set_node(leaf, id_, static_cast<std::int64_t>(nodes_.size()) - 1);
  return leaf;
}

std::vector<Tensor> Tape::gradient(const Tensor& output, const std::vector<Tensor>& sources) {
  if (output.numel() != 1) {
    throw ShapeError("gradient() needs a scalar output, got shape " + to_string(output.shape()));
  }
  std::vector<Tensor> grads(nodes_.size());
  const bool output_live = TapeAccess::tape_id(output) == id_ && TapeAccess::node(output) >= 0;
  {
    // Backward rules run on plain values.
    NoGradGuard no_grad;
    if (output_live) {
      const auto root = static_cast<std::size_t>(TapeAccess::node(output));
      grads[root] = Tensor::ones(output.shape(), output.dtype());
      for (std::size_t i = root + 1; i-- > 0;) {
        Node& node = nodes_[i];
        if (!grads[i].defined() || !node.backward) {
          continue;
        }
        std::vector<Tensor> parent_grads = node.backward(grads[i]);
        for (std::size_t p = 0; p < node.parents.size(); ++p) {
          const std::int64_t parent = node.parents[p];
          if (parent < 0 || p >= parent_grads.size() || !parent_grads[p].defined()) {
            continue;
          }
          auto& slot = grads[static_cast<std::size_t>(parent)];
          slot = slot.defined() ? add(slot, parent_grads[p]) : parent_grads[p];
        }
        // Interior gradients are no longer needed once propagated.
        if (!node.parents.empty()) {
          grads[i] = Tensor();
        }
      }
    }
  }
  std::vector<Tensor> result;
  result.reserve(sources.size());
  for (const auto& source : sources) {
    const auto node = TapeAccess::node(source);
    if (TapeAccess::tape_id(source) != id_ || node < 0) {
      throw ValueError("gradient source was not watched on this tape");
    }
    const auto& g = grads[static_cast<std::size_t>(node)];
    result.push_back(g.defined() ? g.detached() : Tensor::zeros(source.shape(), source.dtype()));
  }
  return result;
}

Tensor record(Tensor output, const std::vector<Tensor>& inputs, BackwardFn backward) {
  Tape* tape = g_active;
  if (tape == nullptr) {
    return output;
  }
  std::vector<std::int64_t> parents;
  parents.reserve(inputs.size());
  bool any = false;
  for (const auto& in : inputs) {
    const bool live = in.tracked();
    parents.push_back(live ? TapeAccess::node(in) : -1);
    any = any || live;
  }
  if (!any) {
    return output;
  }
  const auto node = TapeAccess::push(*tape, std::move(parents), std::move(backward), output);
  TapeAccess::set_node(output, TapeAccess::tape_id_of(*tape), node);
  return output;
}

NoGradGuard::NoGradGuard() : saved_(g_active) { g_active = nullptr; }

NoGradGuard::~NoGradGuard() { g_active = saved_; }

}  // namespace prism::autodiff

namespace prism {

ValueAndGrad value_and_grad(const ScalarFn& f, const TensorMap& params) {
  autodiff::Tape tape;
  TensorMap watched;
  std::vector<Tensor> sources;
  for (const auto& [name, value] : params) {
    auto leaf = tape.watch(value);
    watched.emplace(name, leaf);
    sources.push_back(leaf);
  }
  Tensor value = f(watched);
  if (!value.defined() || value.numel() != 1) {
    throw ShapeError("value_and_grad: function must return a scalar");
  }
  auto grads = tape.gradient(value, sources);
  ValueAndGrad out{value.detached(), {}};
  std::size_t i = 0;
  for (const auto& [name, unused] : params) {
    out.grads.emplace(name, std::move(grads[i++]));
  }
  return out;
}

TensorMap grad(const ScalarFn& f, const TensorMap& params) {
  return value_and_grad(f, params).grads;
}

}  // namespace prism
