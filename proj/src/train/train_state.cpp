// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#include "prism/train/train_state.hpp"

#include <cmath>

#include <fmt/format.h>

#include "prism/tensor/autodiff.hpp"
#include "prism/tensor/ops.hpp"

namespace prism {
namespace {

const Tensor& inputs_of(const Batch& batch) {
  auto it = batch.find("inputs");
  if (it == batch.end()) throw KeyError("batch has no 'inputs'");
  return it->second;
}

// Element-wise mean in double, accumulated in the given order.
Tensor mean_of(const std::vector<const Tensor*>& parts) {
  const auto& first = *parts.front();
  std::vector<double> acc(static_cast<std::size_t>(first.numel()), 0.0);
  for (const Tensor* t : parts) {
    if (t->shape() != first.shape()) throw ShapeError("cannot average tensors of different shapes");
    const auto v = t->to_doubles();
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += v[i];
  }
  const double n = static_cast<double>(parts.size());
  for (auto& x : acc) x /= n;
  return Tensor::from_doubles(first.shape(), acc, first.dtype());
}

TensorMap mean_maps(const std::vector<TensorMap>& maps) {
  TensorMap out;
  for (const auto& [name, value] : maps.front()) {
    std::vector<const Tensor*> parts;
    for (const auto& m : maps) {
      auto it = m.find(name);
      if (it == m.end() || m.size() != maps.front().size()) {
        throw KeyError(fmt::format("device results disagree on key '{}'", name));
      }
      parts.push_back(&it->second);
    }
    out.emplace(name, mean_of(parts));
  }
  return out;
}

void check_finite(const MetricTable& table, std::int64_t step, std::int64_t device) {
  for (const auto& [name, m] : table) {
    if (!std::isfinite(m.value_sum) || !std::isfinite(m.normalizer)) {
      throw TrainingError(fmt::format("non-finite metric '{}' at step {} on device {}", name, step, device),
                          step, device);
    }
  }
}

}  // namespace

bool equal_states(const TrainState& a, const TrainState& b) {
  return a.step == b.step && a.rng == b.rng && equal_maps(a.params, b.params) &&
         equal_maps(a.model_state, b.model_state) && equal_maps(a.opt_state, b.opt_state);
}

void Topology::validate() const {
  if (host_count < 1 || devices_per_host < 1) {
    throw ValueError(fmt::format("topology needs hosts >= 1 and devices_per_host >= 1, got {} x {}", host_count,
                                 devices_per_host));
  }
}

TrainState init_train_state(const ModelContract& contract, const OptimizerSpec& opt, RngKey rng,
                            const Shape& input_shape, DType input_dtype) {
  if (input_shape.empty() || input_shape.front() < 1) {
    throw ShapeError(fmt::format("init input shape {} needs a concrete batch extent", to_string(input_shape)));
  }
  const auto model = contract.build_model();
  auto init = model->init(fold_in(rng, 0), Tensor::zeros(input_shape, input_dtype));
  TrainState state;
  state.step = 0;
  state.opt_state = init_optimizer_state(opt, init.params);
  state.params = std::move(init.params);
  state.model_state = std::move(init.state);
  state.rng = rng;
  return state;
}

StepResult train_step(const TrainState& state, const std::vector<Batch>& device_batches,
                      const Topology& topology, const ModelContract& contract, const OptimizerSpec& opt) {
  topology.validate();
  if (static_cast<std::int64_t>(device_batches.size()) != topology.total_devices()) {
    throw ValueError(fmt::format("train_step got {} device batches for {} devices", device_batches.size(),
                                 topology.total_devices()));
  }
  const auto model = contract.build_model();
  const auto metrics_fn = contract.get_metrics_fn();
  const RngKey step_key = fold_in(state.rng, static_cast<std::uint64_t>(state.step));

  std::vector<TensorMap> grads;
  std::vector<TensorMap> states;
  std::vector<MetricTable> tables;
  for (std::size_t d = 0; d < device_batches.size(); ++d) {
    const auto device = static_cast<std::int64_t>(d);
    const auto& batch = device_batches[d];
    const auto& inputs = inputs_of(batch);
    const RngKey key = fold_in(step_key, d);
    Tensor logits;
    TensorMap new_state;
    auto vg = value_and_grad(
        [&](const TensorMap& params) {
          auto out = model->apply(params, state.model_state, inputs, /*train=*/true, key);
          logits = out.logits.detached();
          new_state.clear();
          for (const auto& [name, value] : out.state) new_state.emplace(name, value.detached());
          return contract.loss_fn(out.logits, batch);
        },
        state.params);
    const double loss = vg.value.item();
    if (!std::isfinite(loss)) {
      throw TrainingError(fmt::format("non-finite loss {} at step {} on device {}", loss, state.step, device),
                          state.step, device);
    }
    auto table = metrics_fn(logits, batch);
    check_finite(table, state.step, device);
    grads.push_back(std::move(vg.grads));
    states.push_back(std::move(new_state));
    tables.push_back(std::move(table));
  }

  const TensorMap mean_grads = grads.size() == 1 ? grads.front() : mean_maps(grads);
  auto update = apply_optimizer(opt, state.step, state.params, mean_grads, state.opt_state);

  StepResult result;
  result.state.step = state.step + 1;
  result.state.params = std::move(update.params);
  result.state.opt_state = std::move(update.opt_state);
  result.state.model_state =
      state.model_state.empty() ? TensorMap{} : (states.size() == 1 ? states.front() : mean_maps(states));
  result.state.rng = state.rng;
  result.metrics = sum_tables(tables);
  return result;
}

MetricTable eval_step(const TrainState& state, const std::vector<Batch>& device_batches,
                      const ModelContract& contract) {
  if (device_batches.empty()) throw ValueError("eval_step needs at least one device batch");
  const auto model = contract.build_model();
  const auto metrics_fn = contract.get_metrics_fn();
  autodiff::NoGradGuard no_grad;
  std::vector<MetricTable> tables;
  for (std::size_t d = 0; d < device_batches.size(); ++d) {
    const auto& batch = device_batches[d];
    const auto out = model->apply(state.params, state.model_state, inputs_of(batch), /*train=*/false);
    auto table = metrics_fn(out.logits, batch);
    check_finite(table, state.step, static_cast<std::int64_t>(d));
    tables.push_back(std::move(table));
  }
  return sum_tables(tables);
}

MetricTable sum_tables(const std::vector<MetricTable>& tables) {
  MetricTable out;
  if (tables.empty()) return out;
  for (const auto& table : tables) {
    for (const auto& [name, m] : tables.front()) {
      if (!table.contains(name)) throw KeyError(fmt::format("metric table is missing key '{}'", name));
    }
    for (const auto& [name, m] : table) {
      if (!tables.front().contains(name)) throw KeyError(fmt::format("metric table is missing key '{}'", name));
      auto& acc = out[name];
      acc.value_sum += m.value_sum;
      acc.normalizer += m.normalizer;
    }
  }
  return out;
}

std::map<std::string, double> aggregate_metrics(const std::vector<MetricTable>& tables) {
  std::map<std::string, double> out;
  for (const auto& [name, m] : sum_tables(tables)) {
    if (m.normalizer == 0.0) throw ValueError(fmt::format("metric '{}' has zero total normalizer", name));
    out.emplace(name, m.value_sum / m.normalizer);
  }
  return out;
}

}  // namespace prism
