// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "prism/model/contract.hpp"
#include "prism/tensor/rng.hpp"
#include "prism/train/optimizer.hpp"

namespace prism {

/// A non-finite loss or metric, tagged with where it happened.
class TrainingError : public Error {
 public:
  TrainingError(const std::string& message, std::int64_t step, std::int64_t device)
      : Error(message), step_(step), device_(device) {}
  std::int64_t step() const { return step_; }
  std::int64_t device() const { return device_; }

 private:
  std::int64_t step_;
  std::int64_t device_;
};

struct TrainState {
  std::int64_t step = 0;
  TensorMap params;
  TensorMap model_state;
  TensorMap opt_state;
  RngKey rng;
};

/// Value equality of every field.
bool equal_states(const TrainState& a, const TrainState& b);

struct Topology {
  std::int64_t host_count = 1;
  std::int64_t devices_per_host = 1;

  std::int64_t total_devices() const { return host_count * devices_per_host; }
  /// Throws ValueError unless both counts are >= 1.
  void validate() const;
};

/// Initializes the model on an all-zero input of `input_shape`, whose leading
/// extent must be concrete. Parameters come from fold_in(rng, 0); the state's
/// rng is `rng`.
TrainState init_train_state(const ModelContract& contract, const OptimizerSpec& opt, RngKey rng,
                            const Shape& input_shape, DType input_dtype);

struct StepResult {
  TrainState state;
  MetricTable metrics;
};

/// One data-parallel step. Device d uses rng fold_in(fold_in(state.rng, step), d).
/// Gradients and updated model state are averaged over devices in ascending
/// order; metric tables are summed. Throws TrainingError on a non-finite loss.
StepResult train_step(const TrainState& state, const std::vector<Batch>& device_batches,
                      const Topology& topology, const ModelContract& contract, const OptimizerSpec& opt);

/// Summed metric tables of an eval-mode forward pass on every device batch.
MetricTable eval_step(const TrainState& state, const std::vector<Batch>& device_batches,
                      const ModelContract& contract);

/// Componentwise sum. Throws KeyError when key sets differ.
MetricTable sum_tables(const std::vector<MetricTable>& tables);

/// Per key, total value_sum over total normalizer. Throws KeyError naming a
/// key missing from some table and ValueError on a zero total normalizer.
std::map<std::string, double> aggregate_metrics(const std::vector<MetricTable>& tables);

}  // namespace prism
