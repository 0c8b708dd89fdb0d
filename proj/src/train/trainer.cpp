// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#include "prism/train/trainer.hpp"

#include <fmt/format.h>

#include "prism/common/logging.hpp"
#include "prism/common/metrics.hpp"
#include "prism/data/iterators.hpp"
#include "prism/train/checkpoint.hpp"
#include "prism/train/detection.hpp"

namespace prism {
namespace {

constexpr std::uint64_t kDataStream = 1;
constexpr std::uint64_t kInitStream = 2;

std::int64_t positive(const Config& config, const std::string& key, std::int64_t fallback, std::int64_t minimum) {
  const auto v = config.get_or<std::int64_t>(key, fallback);
  if (v < minimum) throw ConfigError(fmt::format("'{}' must be >= {}, got {}", key, minimum, v));
  return v;
}

std::string_view split_name(Split split) { return split == Split::train ? "train" : "eval"; }

bool fits(TrainerKind kind, const ModelContract& contract) {
  switch (kind) {
    case TrainerKind::classification:
      return dynamic_cast<const ClassificationModel*>(&contract) != nullptr ||
             dynamic_cast<const MultiLabelClassificationModel*>(&contract) != nullptr;
    case TrainerKind::segmentation:
      return dynamic_cast<const SegmentationModel*>(&contract) != nullptr;
    case TrainerKind::detection:
      return dynamic_cast<const DetectionModel*>(&contract) != nullptr;
  }
  return false;
}

void append_batches(const Experiment& e, const Batch& host_batch, std::vector<Batch>& out) {
  for (auto& part : split_batch(host_batch, e.topology.devices_per_host)) out.push_back(std::move(part));
}

}  // namespace

TrainerKind parse_trainer_kind(std::string_view name) {
  if (name == "classification") return TrainerKind::classification;
  if (name == "segmentation") return TrainerKind::segmentation;
  if (name == "detection") return TrainerKind::detection;
  throw ConfigError(fmt::format("unknown trainer kind '{}' (classification, segmentation, detection)", name));
}

std::string_view trainer_kind_name(TrainerKind kind) {
  switch (kind) {
    case TrainerKind::classification:
      return "classification";
    case TrainerKind::segmentation:
      return "segmentation";
    case TrainerKind::detection:
      return "detection";
  }
  return "?";
}

Experiment make_experiment(const Config& config) {
  Experiment e;
  e.config = config;
  const auto seed = config.get_or<std::int64_t>("seed", 0);
  if (seed < 0) throw ConfigError("'seed' must be >= 0");
  e.seed = static_cast<std::uint64_t>(seed);
  e.topology.host_count = positive(config, "topology.hosts", 1, 1);
  e.topology.devices_per_host = positive(config, "topology.devices_per_host", 1, 1);
  e.batch_size = positive(config, "batch_size", 32, 1);
  e.total_steps = positive(config, "total_steps", 0, 0);
  e.eval_every = positive(config, "eval_every", 0, 0);
  e.prefetch_depth = positive(config, "data.prefetch", 2, 1);
  e.wall_time = config.get_or<bool>("logging.wall_time", false);
  for (const auto& name : config.get_or<std::vector<std::string>>("eval_splits", {"train", "eval"})) {
    if (name == "train") {
      e.eval_splits.push_back(Split::train);
    } else if (name == "eval") {
      e.eval_splits.push_back(Split::eval);
    } else {
      throw ConfigError(fmt::format("unknown eval split '{}' (train, eval)", name));
    }
  }
  if (e.eval_splits.empty()) throw ConfigError("eval_splits must name at least one split");

  const auto root = RngKey::from_seed(e.seed);
  const auto dataset_name = config.get<std::string>("dataset.name");
  for (std::int64_t h = 0; h < e.topology.host_count; ++h) {
    ShardSpec shard{h, e.topology.host_count, e.topology.devices_per_host, e.batch_size};
    e.hosts.push_back(build_dataset(dataset_name, shard, fold_in(root, kDataStream), config));
  }
  const auto model_name = config.get<std::string>("model.name");
  e.contract = get_model_cls(model_name)(config, e.hosts.front().meta_data());
  e.optimizer = optimizer_from_config(config);
  e.init_rng = fold_in(root, kInitStream);
  return e;
}

TrainState init_experiment_state(const Experiment& e) {
  const auto& meta = e.hosts.front().meta_data();
  return init_train_state(*e.contract, e.optimizer, e.init_rng, meta.input_shape_for(1), meta.input_dtype);
}

std::vector<Batch> device_batches_for_step(const Experiment& e, std::int64_t step) {
  std::vector<Batch> out;
  for (const auto& host : e.hosts) {
    auto batch = host.train_iter(step)->next();
    append_batches(e, *batch, out);
  }
  return out;
}

MetricTable evaluate(const Experiment& e, const TrainState& state, Split split) {
  std::vector<BatchIteratorPtr> iters;
  for (const auto& host : e.hosts) iters.push_back(host.eval_iter(split));
  const auto host_batch = e.topology.devices_per_host * e.batch_size;
  std::vector<MetricTable> tables;
  while (true) {
    std::vector<std::optional<Batch>> round;
    for (auto& it : iters) round.push_back(it->next());
    const Batch* like = nullptr;
    for (const auto& b : round) {
      if (b) {
        like = &*b;
        break;
      }
    }
    if (like == nullptr) break;
    std::vector<Batch> devices;
    for (auto& b : round) append_batches(e, b ? *b : masked_padding_batch(*like, host_batch), devices);
    tables.push_back(eval_step(state, devices, *e.contract));
  }
  return sum_tables(tables);
}

std::map<std::string, double> run_trainer(TrainerKind kind, const Config& config,
                                          const std::filesystem::path& workdir) {
  const auto e = make_experiment(config);
  if (!fits(kind, *e.contract)) {
    throw ConfigError(fmt::format("model '{}' does not fit the {} trainer", config.get<std::string>("model.name"),
                                  trainer_kind_name(kind)));
  }
  std::error_code ec;
  std::filesystem::create_directories(workdir, ec);
  if (ec) throw IoError(fmt::format("cannot create workdir '{}': {}", workdir.string(), ec.message()));

  auto state = init_experiment_state(e);
  if (const auto latest = latest_checkpoint(workdir)) {
    auto restored = load_checkpoint(*latest);
    auto same_keys = [](const TensorMap& a, const TensorMap& b) {
      if (a.size() != b.size()) return false;
      for (const auto& [name, value] : a) {
        auto it = b.find(name);
        if (it == b.end() || it->second.shape() != value.shape() || it->second.dtype() != value.dtype()) return false;
      }
      return true;
    };
    if (!same_keys(restored.params, state.params) || !same_keys(restored.model_state, state.model_state) ||
        !same_keys(restored.opt_state, state.opt_state)) {
      throw ConfigError(fmt::format("checkpoint '{}' does not match the configured model", latest->string()));
    }
    logger()->info("resuming from {} at step {}", latest->string(), restored.step);
    state = std::move(restored);
  }

  MetricWriter writer(workdir / "metrics.jsonl");
  auto now = [&] { return e.wall_time ? wall_time() : 0.0; };
  auto run_eval = [&](const TrainState& s) {
    std::map<std::string, double> values;
    for (auto split : e.eval_splits) {
      for (const auto& [name, value] : aggregate_metrics({evaluate(e, s, split)})) {
        values.emplace(fmt::format("{}/{}", split_name(split), name), value);
      }
    }
    return values;
  };
  auto write = [&](std::int64_t step, const std::map<std::string, double>& values) {
    std::vector<MetricRecord> records;
    for (const auto& [name, value] : values) records.push_back({step, name, value, now()});
    writer.write(records);
  };

  if (state.step >= e.total_steps) {
    const auto final_metrics = run_eval(state);
    if (e.total_steps == 0 && !latest_checkpoint(workdir)) {
      write(state.step, final_metrics);
      save_checkpoint(state, checkpoint_path(workdir, state.step));
    }
    return final_metrics;
  }

  std::vector<BatchIteratorPtr> streams;
  for (const auto& host : e.hosts) streams.push_back(prefetch(host.train_iter(state.step), e.prefetch_depth));

  std::vector<MetricTable> since_eval;
  std::map<std::string, double> final_metrics;
  while (state.step < e.total_steps) {
    std::vector<Batch> devices;
    for (auto& stream : streams) append_batches(e, *stream->next(), devices);
    auto result = train_step(state, devices, e.topology, *e.contract, e.optimizer);
    state = std::move(result.state);
    since_eval.push_back(std::move(result.metrics));

    const bool last = state.step == e.total_steps;
    if (last || (e.eval_every > 0 && state.step % e.eval_every == 0)) {
      auto values = run_eval(state);
      final_metrics = values;
      for (const auto& [name, value] : aggregate_metrics(since_eval)) values.emplace("train_step/" + name, value);
      since_eval.clear();
      write(state.step, values);
      save_checkpoint(state, checkpoint_path(workdir, state.step));
      std::string summary;
      for (const auto& [name, value] : final_metrics) summary += fmt::format(" {}={:.4f}", name, value);
      logger()->info("step {}:{}", state.step, summary);
    }
  }
  return final_metrics;
}

}  // namespace prism
