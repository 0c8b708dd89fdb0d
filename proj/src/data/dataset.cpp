// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#include "prism/data/dataset.hpp"

#include <mutex>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace prism {
namespace {

constexpr std::uint64_t kDataTag = 0xda7a;
constexpr std::uint64_t kShuffleTag = 0x50ff1e;

std::map<std::string, TaskFactory>& task_registry() {
  static std::map<std::string, TaskFactory> registry;
  return registry;
}

std::mutex& registry_mutex() {
  static std::mutex mu;
  return mu;
}

}  // namespace

Shape DatasetMetaData::input_shape_for(std::int64_t batch) const {
  Shape s = input_shape;
  if (!s.empty()) s[0] = batch;
  return s;
}

std::int64_t DatasetMetaData::extra(const std::string& key) const {
  auto it = extras.find(key);
  if (it == extras.end()) throw KeyError(fmt::format("dataset meta data has no '{}'", key));
  return it->second;
}

void ShardSpec::validate() const {
  if (host_count < 1 || host_id < 0 || host_id >= host_count) {
    throw ValueError(fmt::format("invalid shard: host {} of {}", host_id, host_count));
  }
  if (devices_per_host < 1 || per_device_batch < 1) {
    throw ValueError(fmt::format("invalid shard: {} devices per host, per-device batch {}",
                                 devices_per_host, per_device_batch));
  }
}

std::vector<std::int64_t> shard_indices(std::int64_t n, const ShardSpec& shard) {
  shard.validate();
  if (n < shard.host_count) {
    throw ValueError(fmt::format("cannot shard {} examples over {} hosts", n, shard.host_count));
  }
  const auto begin = n * shard.host_id / shard.host_count;
  const auto end = n * (shard.host_id + 1) / shard.host_count;
  std::vector<std::int64_t> out;
  out.reserve(static_cast<std::size_t>(end - begin));
  for (auto i = begin; i < end; ++i) out.push_back(i);
  return out;
}

void register_task(const std::string& name, TaskFactory factory) {
  std::lock_guard lock(registry_mutex());
  if (!task_registry().emplace(name, std::move(factory)).second) {
    throw ValueError(fmt::format("dataset '{}' is already registered", name));
  }
}

std::vector<std::string> registered_tasks() {
  std::lock_guard lock(registry_mutex());
  std::vector<std::string> names;
  for (const auto& [name, _] : task_registry()) names.push_back(name);
  return names;
}

std::shared_ptr<const Task> make_task(const std::string& name, const Config& dataset_config,
                                      RngKey seed) {
  TaskFactory factory;
  {
    std::lock_guard lock(registry_mutex());
    auto it = task_registry().find(name);
    if (it != task_registry().end()) factory = it->second;
  }
  if (!factory) {
    throw KeyError(fmt::format("unknown dataset '{}'; registered: {}", name,
                               fmt::join(registered_tasks(), ", ")));
  }
  return factory(dataset_config, seed);
}

Dataset::Dataset(std::shared_ptr<const Task> task, ShardSpec shard, RngKey shuffle_key)
    : task_(std::move(task)), shard_(shard), shuffle_key_(shuffle_key) {
  train_shard_ = shard_indices(meta_data().num_train_examples, shard_);
  // Validates the eval split as well.
  const auto eval_shard = shard_indices(meta_data().num_eval_examples, shard_);
  const auto task_ptr = task_;
  const auto batch = shard_.host_batch();
  eval_cache_ = std::make_shared<CachedBatches>(make_iterator(
      [task_ptr, eval_shard, batch, pos = std::size_t{0}]() mutable -> std::optional<Batch> {
        if (pos >= eval_shard.size()) return std::nullopt;
        const auto end = std::min(eval_shard.size(), pos + static_cast<std::size_t>(batch));
        std::span<const std::int64_t> ids(eval_shard.data() + pos, end - pos);
        pos = end;
        return pad_incomplete_batch(task_ptr->make_batch(Split::eval, ids), batch);
      }));
}

std::vector<std::int64_t> Dataset::train_batch_indices(std::int64_t k) const {
  const auto shard_size = static_cast<std::int64_t>(train_shard_.size());
  const auto batch = shard_.host_batch();
  std::vector<std::int64_t> ids;
  ids.reserve(static_cast<std::size_t>(batch));
  std::int64_t epoch = -1;
  std::vector<std::int64_t> perm;
  for (std::int64_t p = k * batch; p < (k + 1) * batch; ++p) {
    if (p / shard_size != epoch) {
      epoch = p / shard_size;
      perm = rng_permutation(fold_in(shuffle_key_, static_cast<std::uint64_t>(epoch)), shard_size);
    }
    ids.push_back(train_shard_[static_cast<std::size_t>(perm[static_cast<std::size_t>(p % shard_size)])]);
  }
  return ids;
}

BatchIteratorPtr Dataset::train_iter(std::int64_t start_batch) const {
  if (start_batch < 0) throw ValueError("train_iter: negative start batch");
  auto self = std::make_shared<const Dataset>(*this);
  return make_iterator([self, k = start_batch]() mutable -> std::optional<Batch> {
    const auto ids = self->train_batch_indices(k++);
    return self->task_->make_batch(Split::train, ids);
  });
}

std::int64_t Dataset::num_eval_batches(Split split) const {
  const auto n = split == Split::train ? meta_data().num_train_examples
                                       : meta_data().num_eval_examples;
  const auto size = static_cast<std::int64_t>(shard_indices(n, shard_).size());
  return (size + shard_.host_batch() - 1) / shard_.host_batch();
}

BatchIteratorPtr Dataset::eval_iter(Split split) const {
  if (split == Split::eval) return eval_cache_->iterate();
  auto task = task_;
  auto ids = train_shard_;
  const auto batch = shard_.host_batch();
  return make_iterator(
      [task, ids = std::move(ids), batch, pos = std::size_t{0}]() mutable -> std::optional<Batch> {
        if (pos >= ids.size()) return std::nullopt;
        const auto end = std::min(ids.size(), pos + static_cast<std::size_t>(batch));
        std::span<const std::int64_t> part(ids.data() + pos, end - pos);
        pos = end;
        return pad_incomplete_batch(task->make_batch(Split::train, part), batch);
      });
}

Dataset build_dataset(const std::string& name, const ShardSpec& shard, RngKey seed,
                      const Config& config) {
  register_builtin_tasks();
  shard.validate();
  auto task = make_task(name, config.sub("dataset"), fold_in(seed, kDataTag));
  return Dataset(std::move(task), shard, fold_in(seed, kShuffleTag));
}

}  // namespace prism
