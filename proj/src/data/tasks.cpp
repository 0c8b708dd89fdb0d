// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <mutex>

#include <fmt/format.h>

#include "prism/data/dataset.hpp"

namespace prism {
namespace {

// Sequential draws from one example's key.
class Draws {
 public:
  explicit Draws(RngKey key) : key_(key) {}
  double uniform() { return rng_uniform_at(key_, counter_++); }
  double normal() { return rng_normal_at(key_, counter_++); }
  /// Standard normal conditioned on |z| <= 2.
  double truncated_normal() {
    double z = normal();
    while (std::abs(z) > 2.0) z = normal();
    return z;
  }
  /// Integer in [lo, hi].
  std::int64_t integer(std::int64_t lo, std::int64_t hi) {
    const auto v = lo + static_cast<std::int64_t>(uniform() * static_cast<double>(hi - lo + 1));
    return std::min(v, hi);
  }

 private:
  RngKey key_;
  std::uint64_t counter_ = 0;
};

RngKey example_key(RngKey seed, Split split, std::int64_t index) {
  return fold_in(fold_in(seed, split == Split::train ? 1 : 2), static_cast<std::uint64_t>(index));
}

std::int64_t positive(const Config& c, const std::string& key, std::int64_t fallback,
                      std::int64_t minimum = 1) {
  const auto v = c.get_or<std::int64_t>(key, fallback);
  if (v < minimum) {
    throw ConfigError(fmt::format("dataset.{} must be >= {}, got {}", key, minimum, v));
  }
  return v;
}

void fill_common_meta(DatasetMetaData& meta, const Config& c) {
  meta.num_train_examples = positive(c, "num_train", 256);
  meta.num_eval_examples = positive(c, "num_eval", 64);
}

// Cluster centers drawn from N(0, spread^2), resampled until pairwise
// separated by at least `min_sep`.
std::vector<std::vector<double>> draw_centers(RngKey key, std::int64_t k, std::int64_t dim,
                                              double spread, double min_sep) {
  std::vector<std::vector<double>> centers;
  Draws draws(key);
  for (std::int64_t c = 0; c < k; ++c) {
    std::vector<double> best;
    double best_gap = -1.0;
    for (int attempt = 0; attempt < 1000; ++attempt) {
      std::vector<double> v(static_cast<std::size_t>(dim));
      for (auto& x : v) x = spread * draws.normal();
      double gap = std::numeric_limits<double>::infinity();
      for (const auto& other : centers) {
        double d2 = 0.0;
        for (std::size_t j = 0; j < v.size(); ++j) d2 += (v[j] - other[j]) * (v[j] - other[j]);
        gap = std::min(gap, std::sqrt(d2));
      }
      if (gap > best_gap) {
        best_gap = gap;
        best = v;
      }
      if (gap >= min_sep) break;
    }
    centers.push_back(std::move(best));
  }
  return centers;
}

class BlobsClassification final : public Task {
 public:
  BlobsClassification(const Config& c, RngKey seed) : seed_(seed) {
    fill_common_meta(meta_, c);
    meta_.num_classes = positive(c, "num_classes", 4, 2);
    noise_ = c.get_or<double>("noise", 0.5);
    const auto image_size = c.get_or<std::int64_t>("image_size", 0);
    if (image_size > 0) {
      const auto channels = positive(c, "channels", 1);
      meta_.input_shape = {-1, image_size, image_size, channels};
      meta_.extras["image_size"] = image_size;
    } else {
      meta_.input_shape = {-1, positive(c, "input_dim", 2)};
    }
    dim_ = 1;
    for (std::size_t i = 1; i < meta_.input_shape.size(); ++i) dim_ *= meta_.input_shape[i];
    const double spread = c.get_or<double>("spread", image_size > 0 ? 1.0 : 4.0);
    centers_ = draw_centers(fold_in(seed, 0), meta_.num_classes, dim_, spread, 8.0 * noise_);
  }

  const DatasetMetaData& meta_data() const override { return meta_; }

  Batch make_batch(Split split, std::span<const std::int64_t> indices) const override {
    const auto b = static_cast<std::int64_t>(indices.size());
    std::vector<float> x(static_cast<std::size_t>(b * dim_));
    std::vector<std::int32_t> y(static_cast<std::size_t>(b));
    for (std::int64_t i = 0; i < b; ++i) {
      Draws draws(example_key(seed_, split, indices[static_cast<std::size_t>(i)]));
      const auto label = draws.integer(0, meta_.num_classes - 1);
      y[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(label);
      const auto& center = centers_[static_cast<std::size_t>(label)];
      for (std::int64_t j = 0; j < dim_; ++j) {
        x[static_cast<std::size_t>(i * dim_ + j)] =
            static_cast<float>(center[static_cast<std::size_t>(j)] + noise_ * draws.truncated_normal());
      }
    }
    return {{"inputs", Tensor(meta_.input_shape_for(b), std::move(x))},
            {"label", Tensor(Shape{b}, std::move(y))}};
  }

 private:
  RngKey seed_;
  DatasetMetaData meta_;
  double noise_ = 0.5;
  std::int64_t dim_ = 0;
  std::vector<std::vector<double>> centers_;
};

class BlobsMultilabel final : public Task {
 public:
  BlobsMultilabel(const Config& c, RngKey seed) : seed_(seed) {
    fill_common_meta(meta_, c);
    meta_.num_classes = positive(c, "num_classes", 4, 2);
    meta_.target_is_onehot = true;
    dim_ = positive(c, "input_dim", 8);
    meta_.input_shape = {-1, dim_};
    noise_ = c.get_or<double>("noise", 0.3);
    presence_ = c.get_or<double>("presence", 0.5);
    centers_ = draw_centers(fold_in(seed, 0), meta_.num_classes, dim_,
                            c.get_or<double>("spread", 2.0), 6.0 * noise_);
  }

  const DatasetMetaData& meta_data() const override { return meta_; }

  Batch make_batch(Split split, std::span<const std::int64_t> indices) const override {
    const auto b = static_cast<std::int64_t>(indices.size());
    const auto k = meta_.num_classes;
    std::vector<float> x(static_cast<std::size_t>(b * dim_));
    std::vector<float> y(static_cast<std::size_t>(b * k));
    for (std::int64_t i = 0; i < b; ++i) {
      Draws draws(example_key(seed_, split, indices[static_cast<std::size_t>(i)]));
      std::vector<bool> present(static_cast<std::size_t>(k));
      do {
        for (std::int64_t c = 0; c < k; ++c) present[static_cast<std::size_t>(c)] = draws.uniform() < presence_;
      } while (std::none_of(present.begin(), present.end(), [](bool p) { return p; }));
      for (std::int64_t j = 0; j < dim_; ++j) {
        double v = noise_ * draws.normal();
        for (std::int64_t c = 0; c < k; ++c) {
          if (present[static_cast<std::size_t>(c)]) v += centers_[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)];
        }
        x[static_cast<std::size_t>(i * dim_ + j)] = static_cast<float>(v);
      }
      for (std::int64_t c = 0; c < k; ++c) {
        y[static_cast<std::size_t>(i * k + c)] = present[static_cast<std::size_t>(c)] ? 1.0f : 0.0f;
      }
    }
    return {{"inputs", Tensor(Shape{b, dim_}, std::move(x))},
            {"label", Tensor(Shape{b, k}, std::move(y))}};
  }

 private:
  RngKey seed_;
  DatasetMetaData meta_;
  std::int64_t dim_ = 0;
  double noise_ = 0.3;
  double presence_ = 0.5;
  std::vector<std::vector<double>> centers_;
};

class ShapesSegmentation final : public Task {
 public:
  ShapesSegmentation(const Config& c, RngKey seed) : seed_(seed) {
    fill_common_meta(meta_, c);
    size_ = positive(c, "image_size", 16, 8);
    meta_.num_classes = 3;
    meta_.input_shape = {-1, size_, size_, 1};
    meta_.extras["image_size"] = size_;
    noise_ = c.get_or<double>("noise", 0.1);
  }

  const DatasetMetaData& meta_data() const override { return meta_; }

  Batch make_batch(Split split, std::span<const std::int64_t> indices) const override {
    const auto b = static_cast<std::int64_t>(indices.size());
    const auto s = size_;
    std::vector<float> x(static_cast<std::size_t>(b * s * s));
    std::vector<std::int32_t> y(static_cast<std::size_t>(b * s * s), 0);
    for (std::int64_t i = 0; i < b; ++i) {
      Draws draws(example_key(seed_, split, indices[static_cast<std::size_t>(i)]));
      auto* label = y.data() + i * s * s;
      const auto rh = draws.integer(3, s / 2);
      const auto rw = draws.integer(3, s / 2);
      const auto r0 = draws.integer(0, s - rh);
      const auto c0 = draws.integer(0, s - rw);
      for (auto r = r0; r < r0 + rh; ++r) {
        for (auto col = c0; col < c0 + rw; ++col) label[r * s + col] = 1;
      }
      const double radius = 2.0 + draws.uniform() * (static_cast<double>(s) / 4.0 - 2.0);
      const double cy = radius + draws.uniform() * (static_cast<double>(s) - 2.0 * radius);
      const double cx = radius + draws.uniform() * (static_cast<double>(s) - 2.0 * radius);
      for (std::int64_t r = 0; r < s; ++r) {
        for (std::int64_t col = 0; col < s; ++col) {
          const double dy = static_cast<double>(r) + 0.5 - cy;
          const double dx = static_cast<double>(col) + 0.5 - cx;
          if (dy * dy + dx * dx <= radius * radius) label[r * s + col] = 2;
        }
      }
      for (std::int64_t p = 0; p < s * s; ++p) {
        const double base = label[p] == 1 ? 1.0 : (label[p] == 2 ? -1.0 : 0.0);
        x[static_cast<std::size_t>(i * s * s + p)] = static_cast<float>(base + noise_ * draws.normal());
      }
    }
    return {{"inputs", Tensor(Shape{b, s, s, 1}, std::move(x))},
            {"label", Tensor(Shape{b, s, s}, std::move(y))}};
  }

 private:
  RngKey seed_;
  DatasetMetaData meta_;
  std::int64_t size_ = 16;
  double noise_ = 0.1;
};

class BoxesDetection final : public Task {
 public:
  BoxesDetection(const Config& c, RngKey seed) : seed_(seed) {
    fill_common_meta(meta_, c);
    size_ = positive(c, "image_size", 16, 8);
    meta_.num_classes = positive(c, "num_classes", 2, 1);
    max_objects_ = positive(c, "max_objects", 3);
    min_objects_ = positive(c, "min_objects", 1, 0);
    if (min_objects_ > max_objects_) {
      throw ConfigError("dataset.min_objects exceeds dataset.max_objects");
    }
    min_side_ = positive(c, "min_side", 3);
    max_side_ = positive(c, "max_side", 6);
    if (max_side_ < min_side_ || max_side_ > size_) {
      throw ConfigError("dataset object sides must satisfy min_side <= max_side <= image_size");
    }
    noise_ = c.get_or<double>("noise", 0.05);
    meta_.input_shape = {-1, size_, size_, meta_.num_classes};
    meta_.extras["image_size"] = size_;
    meta_.extras["max_objects"] = max_objects_;
  }

  const DatasetMetaData& meta_data() const override { return meta_; }

  Batch make_batch(Split split, std::span<const std::int64_t> indices) const override {
    const auto b = static_cast<std::int64_t>(indices.size());
    const auto s = size_;
    const auto k = meta_.num_classes;
    const auto m = max_objects_;
    std::vector<float> x(static_cast<std::size_t>(b * s * s * k));
    std::vector<std::int32_t> labels(static_cast<std::size_t>(b * m), static_cast<std::int32_t>(k));
    std::vector<float> boxes(static_cast<std::size_t>(b * m * 4), 0.0f);
    for (std::int64_t i = 0; i < b; ++i) {
      Draws draws(example_key(seed_, split, indices[static_cast<std::size_t>(i)]));
      const auto count = draws.integer(min_objects_, m);
      std::vector<std::array<std::int64_t, 4>> placed;  // r0, c0, r1, c1 (exclusive)
      float* img = x.data() + i * s * s * k;
      for (std::int64_t o = 0; o < count; ++o) {
        const auto cls = draws.integer(0, k - 1);
        std::array<std::int64_t, 4> box{};
        bool ok = false;
        for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
          const auto h = draws.integer(min_side_, max_side_);
          const auto w = draws.integer(min_side_, max_side_);
          box = {draws.integer(0, s - h), draws.integer(0, s - w), 0, 0};
          box[2] = box[0] + h;
          box[3] = box[1] + w;
          ok = std::none_of(placed.begin(), placed.end(), [&](const auto& p) {
            return box[0] <= p[2] && p[0] <= box[2] && box[1] <= p[3] && p[1] <= box[3];
          });
        }
        if (!ok) break;  // scene is full
        placed.push_back(box);
        for (auto r = box[0]; r < box[2]; ++r) {
          for (auto col = box[1]; col < box[3]; ++col) img[(r * s + col) * k + cls] = 1.0f;
        }
        const auto slot = static_cast<std::size_t>(i * m + o);
        labels[slot] = static_cast<std::int32_t>(cls);
        const double scale = static_cast<double>(s);
        boxes[slot * 4 + 0] = static_cast<float>(box[1] / scale);
        boxes[slot * 4 + 1] = static_cast<float>(box[0] / scale);
        boxes[slot * 4 + 2] = static_cast<float>(box[3] / scale);
        boxes[slot * 4 + 3] = static_cast<float>(box[2] / scale);
      }
      for (std::int64_t p = 0; p < s * s * k; ++p) {
        img[p] = static_cast<float>(img[p] + noise_ * draws.normal());
      }
    }
    return {{"inputs", Tensor(Shape{b, s, s, k}, std::move(x))},
            {"label", Tensor(Shape{b, m}, std::move(labels))},
            {"boxes", Tensor(Shape{b, m, 4}, std::move(boxes))}};
  }

 private:
  RngKey seed_;
  DatasetMetaData meta_;
  std::int64_t size_ = 16;
  std::int64_t max_objects_ = 3;
  std::int64_t min_objects_ = 1;
  std::int64_t min_side_ = 3;
  std::int64_t max_side_ = 6;
  double noise_ = 0.05;
};

class CopySeq2Seq final : public Task {
 public:
  CopySeq2Seq(const Config& c, RngKey seed) : seed_(seed) {
    fill_common_meta(meta_, c);
    meta_.num_classes = positive(c, "vocab_size", 10, 3);
    length_ = positive(c, "seq_len", 8);
    min_length_ = positive(c, "min_len", std::max<std::int64_t>(1, length_ / 2));
    if (min_length_ > length_) throw ConfigError("dataset.min_len exceeds dataset.seq_len");
    meta_.input_shape = {-1, length_};
    meta_.input_dtype = DType::i32;
    meta_.extras["vocab_size"] = meta_.num_classes;
    meta_.extras["pad_token"] = 0;
  }

  const DatasetMetaData& meta_data() const override { return meta_; }

  Batch make_batch(Split split, std::span<const std::int64_t> indices) const override {
    const auto b = static_cast<std::int64_t>(indices.size());
    std::vector<std::int32_t> tokens(static_cast<std::size_t>(b * length_), 0);
    for (std::int64_t i = 0; i < b; ++i) {
      Draws draws(example_key(seed_, split, indices[static_cast<std::size_t>(i)]));
      const auto len = draws.integer(min_length_, length_);
      for (std::int64_t t = 0; t < len; ++t) {
        tokens[static_cast<std::size_t>(i * length_ + t)] =
            static_cast<std::int32_t>(draws.integer(1, meta_.num_classes - 1));
      }
    }
    Tensor seq(Shape{b, length_}, std::move(tokens));
    return {{"inputs", seq}, {"label", seq}};
  }

 private:
  RngKey seed_;
  DatasetMetaData meta_;
  std::int64_t length_ = 8;
  std::int64_t min_length_ = 4;
};

template <class T>
TaskFactory factory_of() {
  return [](const Config& c, RngKey seed) -> std::shared_ptr<const Task> {
    return std::make_shared<T>(c, seed);
  };
}

}  // namespace

void register_builtin_tasks() {
  static std::once_flag once;
  std::call_once(once, [] {
    register_task("blobs_classification", factory_of<BlobsClassification>());
    register_task("blobs_multilabel", factory_of<BlobsMultilabel>());
    register_task("shapes_segmentation", factory_of<ShapesSegmentation>());
    register_task("boxes_detection", factory_of<BoxesDetection>());
    register_task("copy_seq2seq", factory_of<CopySeq2Seq>());
  });
}

}  // namespace prism
