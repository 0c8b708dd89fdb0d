// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "prism/common/config.hpp"
#include "prism/data/iterators.hpp"
#include "prism/tensor/rng.hpp"

namespace prism {

struct DatasetMetaData {
  std::int64_t num_classes = 0;
  Shape input_shape;  // leading -1 stands for the batch extent
  std::int64_t num_train_examples = 0;
  std::int64_t num_eval_examples = 0;
  bool target_is_onehot = false;
  DType input_dtype = DType::f32;
  /// Task-specific integers such as "max_objects" or "vocab_size".
  std::map<std::string, std::int64_t> extras;

  /// input_shape with the batch placeholder replaced by `batch`.
  Shape input_shape_for(std::int64_t batch) const;
  std::int64_t extra(const std::string& key) const;
};

struct ShardSpec {
  std::int64_t host_id = 0;
  std::int64_t host_count = 1;
  std::int64_t devices_per_host = 1;
  std::int64_t per_device_batch = 1;

  std::int64_t host_batch() const { return devices_per_host * per_device_batch; }
  /// Throws ValueError on an invalid spec.
  void validate() const;
};

/// Contiguous block of [0, n) owned by `shard.host_id`:
/// [floor(n*h/H), floor(n*(h+1)/H)). Throws ValueError if n < host_count.
std::vector<std::int64_t> shard_indices(std::int64_t n, const ShardSpec& shard);

enum class Split { train, eval };

/// A synthetic example generator. Examples are pure functions of
/// (task seed, split, index), so any host can produce any example.
class Task {
 public:
  virtual ~Task() = default;
  virtual const DatasetMetaData& meta_data() const = 0;
  /// Batch holding the given examples in order, without a mask.
  virtual Batch make_batch(Split split, std::span<const std::int64_t> indices) const = 0;
};

/// Builds a task from the `dataset.*` config subtree and a data seed.
using TaskFactory = std::function<std::shared_ptr<const Task>(const Config&, RngKey)>;

/// Throws ValueError if `name` is already registered.
void register_task(const std::string& name, TaskFactory factory);
std::vector<std::string> registered_tasks();
/// Throws KeyError listing the registered names when `name` is unknown.
std::shared_ptr<const Task> make_task(const std::string& name, const Config& dataset_config,
                                      RngKey seed);

/// One host's view of a task.
class Dataset {
 public:
  Dataset(std::shared_ptr<const Task> task, ShardSpec shard, RngKey shuffle_key);

  const DatasetMetaData& meta_data() const { return task_->meta_data(); }
  const ShardSpec& shard() const { return shard_; }
  const Task& task() const { return *task_; }

  /// Infinite stream of host batches over this host's train shard, reshuffled
  /// every epoch. Starts at batch `start_batch`, which is reached directly.
  BatchIteratorPtr train_iter(std::int64_t start_batch = 0) const;

  /// One in-order pass over this host's shard of `split`, padded to full host
  /// batches with a "batch_mask". Eval-split batches are cached.
  BatchIteratorPtr eval_iter(Split split = Split::eval) const;

  /// Number of batches eval_iter(split) yields.
  std::int64_t num_eval_batches(Split split = Split::eval) const;

  /// Train-example indices of host batch `k`.
  std::vector<std::int64_t> train_batch_indices(std::int64_t k) const;

 private:
  std::shared_ptr<const Task> task_;
  ShardSpec shard_;
  RngKey shuffle_key_;
  std::vector<std::int64_t> train_shard_;
  std::shared_ptr<CachedBatches> eval_cache_;
};

/// Builds host `shard.host_id`'s dataset for task `name`, configured by the
/// `dataset.*` keys of `config`. Example content derives from `seed` only, so
/// it is identical across hosts.
Dataset build_dataset(const std::string& name, const ShardSpec& shard, RngKey seed,
                      const Config& config);

/// Registers the built-in synthetic tasks. Idempotent.
void register_builtin_tasks();

}  // namespace prism
