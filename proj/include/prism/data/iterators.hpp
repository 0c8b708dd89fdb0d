// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "prism/data/batch.hpp"

namespace prism {

/// Pull-based batch stream. `next()` returns nullopt once exhausted.
class BatchIterator {
 public:
  virtual ~BatchIterator() = default;
  virtual std::optional<Batch> next() = 0;
};

using BatchIteratorPtr = std::unique_ptr<BatchIterator>;

/// Iterator over a callable; the callable returns nullopt to stop.
BatchIteratorPtr make_iterator(std::function<std::optional<Batch>()> fn);

/// Iterator over a fixed list.
BatchIteratorPtr from_vector(std::vector<Batch> batches);

/// Runs `source` on a background thread holding at most `depth` batches
/// ahead of the consumer. Yields the same sequence; a source exception is
/// rethrown by the consumer's next pull. Throws ValueError if depth < 1.
BatchIteratorPtr prefetch(BatchIteratorPtr source, int depth);

/// Replayable view over a finite source. The source is pulled lazily and at
/// most once; every pass yields the same sequence.
class CachedBatches {
 public:
  explicit CachedBatches(BatchIteratorPtr source);

  /// A new pass from the beginning.
  BatchIteratorPtr iterate() const;

  /// Batches materialized so far.
  std::size_t materialized() const;

 private:
  struct State;
  std::shared_ptr<State> state_;
};

CachedBatches cache(BatchIteratorPtr source);

}  // namespace prism
