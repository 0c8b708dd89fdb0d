// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "prism/data/dataset.hpp"
#include "prism/train/train_state.hpp"

namespace prism {

enum class TrainerKind { classification, segmentation, detection };

/// Throws ConfigError for names other than classification, segmentation and
/// detection.
TrainerKind parse_trainer_kind(std::string_view name);
std::string_view trainer_kind_name(TrainerKind kind);

/// Everything a run needs, resolved from a config:
///   seed (0), dataset.name, model.name, lr, optimizer.*,
///   topology.hosts (1), topology.devices_per_host (1),
///   batch_size (per device, 32), total_steps, eval_every (0 = end only),
///   eval_splits (["train", "eval"]), data.prefetch (2),
///   logging.wall_time (false; record time 0 for reproducible files).
struct Experiment {
  Config config;
  std::uint64_t seed = 0;
  Topology topology;
  std::int64_t batch_size = 32;
  std::int64_t total_steps = 0;
  std::int64_t eval_every = 0;
  std::vector<Split> eval_splits;
  std::int64_t prefetch_depth = 2;
  bool wall_time = false;
  /// One dataset per host, host_id ascending.
  std::vector<Dataset> hosts;
  std::shared_ptr<const ModelContract> contract;
  OptimizerSpec optimizer;
  RngKey init_rng;
};

/// Throws ConfigError on missing or invalid settings and KeyError for
/// unregistered dataset or model names.
Experiment make_experiment(const Config& config);

/// Fresh state for `experiment`, initialized on a batch-1 dummy input.
TrainState init_experiment_state(const Experiment& experiment);

/// Host batches for train step `step`, split into device batches in
/// host-major order.
std::vector<Batch> device_batches_for_step(const Experiment& experiment, std::int64_t step);

/// Full eval pass over `split` on every host. Exhausted hosts contribute
/// all-masked padding batches until every host is done.
MetricTable evaluate(const Experiment& experiment, const TrainState& state, Split split);

/// Runs the training loop in `workdir`, resuming from its newest
/// ckpt_<step>.bin if present. Evaluates and checkpoints every `eval_every`
/// steps and at the end, appending "<split>/<metric>" and "train_step/<metric>"
/// records to metrics.jsonl. total_steps = 0 evaluates the initial model.
/// Returns the final "<split>/<metric>" values. Throws ConfigError when the
/// model does not fit `kind` and IoError when the workdir is unusable.
std::map<std::string, double> run_trainer(TrainerKind kind, const Config& config,
                                          const std::filesystem::path& workdir);

}  // namespace prism
