// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#include "prism/data/iterators.hpp"

#include <condition_variable>
#include <deque>
#include <exception>
#include <mutex>
#include <thread>

namespace prism {
namespace {

class FunctionIterator final : public BatchIterator {
 public:
  explicit FunctionIterator(std::function<std::optional<Batch>()> fn) : fn_(std::move(fn)) {}
  std::optional<Batch> next() override { return fn_(); }

 private:
  std::function<std::optional<Batch>()> fn_;
};

class PrefetchIterator final : public BatchIterator {
 public:
  PrefetchIterator(BatchIteratorPtr source, int depth)
      : source_(std::move(source)), depth_(static_cast<std::size_t>(depth)) {
    worker_ = std::thread([this] { produce(); });
  }

  ~PrefetchIterator() override {
    {
      std::lock_guard lock(mu_);
      stop_ = true;
    }
    space_.notify_all();
    worker_.join();
  }

  std::optional<Batch> next() override {
    std::unique_lock lock(mu_);
    ready_.wait(lock, [&] { return !queue_.empty() || finished_; });
    if (!queue_.empty()) {
      Batch b = std::move(queue_.front());
      queue_.pop_front();
      space_.notify_one();
      return b;
    }
    if (error_) {
      auto e = error_;
      error_ = nullptr;
      std::rethrow_exception(e);
    }
    return std::nullopt;
  }

 private:
  void produce() {
    while (true) {
      {
        std::unique_lock lock(mu_);
        space_.wait(lock, [&] { return queue_.size() < depth_ || stop_; });
        if (stop_) break;
      }
      std::optional<Batch> item;
      try {
        item = source_->next();
      } catch (...) {
        std::lock_guard lock(mu_);
        error_ = std::current_exception();
        break;
      }
      std::lock_guard lock(mu_);
      if (!item) break;
      queue_.push_back(std::move(*item));
      ready_.notify_one();
    }
    std::lock_guard lock(mu_);
    finished_ = true;
    ready_.notify_all();
  }

  BatchIteratorPtr source_;
  std::size_t depth_;
  std::mutex mu_;
  std::condition_variable ready_;
  std::condition_variable space_;
  std::deque<Batch> queue_;
  std::exception_ptr error_;
  bool finished_ = false;
  bool stop_ = false;
  std::thread worker_;
};

}  // namespace

BatchIteratorPtr make_iterator(std::function<std::optional<Batch>()> fn) {
  return std::make_unique<FunctionIterator>(std::move(fn));
}

BatchIteratorPtr from_vector(std::vector<Batch> batches) {
  auto items = std::make_shared<std::vector<Batch>>(std::move(batches));
  return make_iterator([items, i = std::size_t{0}]() mutable -> std::optional<Batch> {
    if (i >= items->size()) return std::nullopt;
    return (*items)[i++];
  });
}

BatchIteratorPtr prefetch(BatchIteratorPtr source, int depth) {
  if (depth < 1) throw ValueError("prefetch depth must be >= 1");
  return std::make_unique<PrefetchIterator>(std::move(source), depth);
}

struct CachedBatches::State {
  BatchIteratorPtr source;
  std::vector<Batch> items;
  bool done = false;

  // Item `i`, pulling from the source as needed.
  std::optional<Batch> get(std::size_t i) {
    while (i >= items.size() && !done) {
      auto b = source->next();
      if (!b) {
        done = true;
        source.reset();
      } else {
        items.push_back(std::move(*b));
      }
    }
    if (i < items.size()) return items[i];
    return std::nullopt;
  }
};

CachedBatches::CachedBatches(BatchIteratorPtr source) : state_(std::make_shared<State>()) {
  state_->source = std::move(source);
}

BatchIteratorPtr CachedBatches::iterate() const {
  return make_iterator([state = state_, i = std::size_t{0}]() mutable { return state->get(i++); });
}

std::size_t CachedBatches::materialized() const { return state_->items.size(); }

CachedBatches cache(BatchIteratorPtr source) { return CachedBatches(std::move(source)); }

}  // namespace prism
