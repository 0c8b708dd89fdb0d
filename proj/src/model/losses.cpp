// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "prism/model/contract.hpp"
#include "prism/tensor/ops.hpp"

namespace prism {
namespace {

const Tensor& label_of(const Batch& batch) {
  auto it = batch.find("label");
  if (it == batch.end()) throw KeyError("batch has no 'label'");
  return it->second;
}

std::vector<double> mask_values(const Batch& batch, std::int64_t rows) {
  const auto mask = batch_mask_or_ones(batch);
  if (mask.shape() != Shape{rows}) {
    throw ShapeError(fmt::format("batch_mask shape {} does not match {} rows", to_string(mask.shape()), rows));
  }
  return mask.to_doubles();
}

// Masked mean of per-unit values `per` with constant weights `weights`.
Tensor weighted_mean(const Tensor& per, const std::vector<double>& weights, const Shape& shape) {
  double total = 0.0;
  for (double w : weights) total += w;
  const auto w = Tensor::from_doubles(shape, weights, per.dtype());
  return sum(per * w) / std::max(total, 1.0);
}

void check_classes(const Tensor& logits, std::int64_t expected, std::string_view what) {
  if (logits.ndim() < 1 || logits.dim(-1) != expected) {
    throw ShapeError(fmt::format("{} logits have {} classes, expected {}", what,
                                 logits.ndim() ? logits.dim(-1) : 0, expected));
  }
}

// Targets as a probability tensor shaped like `logits`.
Tensor class_targets(const Tensor& label, const Tensor& logits, double smoothing) {
  const auto k = logits.dim(-1);
  Tensor targets;
  if (label.shape() == logits.shape() && is_float(label.dtype())) {
    targets = astype(label, logits.dtype());
  } else {
    Shape expect(logits.shape().begin(), logits.shape().end() - 1);
    if (label.shape() != expect) {
      throw ShapeError(fmt::format("label shape {} does not match logits {}", to_string(label.shape()),
                                   to_string(logits.shape())));
    }
    targets = one_hot(astype(label, DType::i32), k, logits.dtype());
  }
  if (smoothing > 0.0) {
    targets = targets * (1.0 - smoothing) + smoothing / static_cast<double>(k);
  }
  return targets;
}

// Row-wise log-softmax in double precision.
std::vector<double> log_probs(const std::vector<double>& logits, std::size_t k) {
  std::vector<double> out(logits.size());
  for (std::size_t r = 0; r < logits.size() / k; ++r) {
    const double* z = logits.data() + r * k;
    const double m = *std::max_element(z, z + k);
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += std::exp(z[j] - m);
    const double lse = m + std::log(s);
    for (std::size_t j = 0; j < k; ++j) out[r * k + j] = z[j] - lse;
  }
  return out;
}

std::size_t argmax_row(const double* z, std::size_t k) {
  return static_cast<std::size_t>(std::max_element(z, z + k) - z);
}

// Class id per unit: from integer labels, or argmax of one-hot rows.
std::vector<std::size_t> class_ids(const Tensor& label, const Tensor& logits) {
  const auto k = static_cast<std::size_t>(logits.dim(-1));
  const auto v = label.to_doubles();
  std::vector<std::size_t> ids;
  if (label.shape() == logits.shape() && is_float(label.dtype())) {
    for (std::size_t r = 0; r < v.size() / k; ++r) ids.push_back(argmax_row(v.data() + r * k, k));
  } else {
    for (double x : v) {
      if (x < 0 || x >= static_cast<double>(k)) {
        throw ValueError(fmt::format("label {} outside [0, {})", x, k));
      }
      ids.push_back(static_cast<std::size_t>(x));
    }
  }
  return ids;
}

}  // namespace

Tensor ClassificationModel::loss_fn(const Tensor& logits, const Batch& batch) const {
  check_classes(logits, meta().num_classes, "classification");
  if (logits.ndim() != 2) throw ShapeError("classification logits must be [b, K]");
  const auto targets =
      class_targets(label_of(batch), logits, config().get_or<double>("model.label_smoothing", 0.0));
  const auto b = logits.dim(0);
  const auto nll = -sum(targets * log_softmax(logits, -1), {1});
  return weighted_mean(nll, mask_values(batch, b), {b});
}

MetricFn ClassificationModel::get_metrics_fn() const {
  const auto k = meta().num_classes;
  return [k](const Tensor& logits, const Batch& batch) {
    check_classes(logits, k, "classification");
    const auto b = static_cast<std::size_t>(logits.dim(0));
    const auto mask = mask_values(batch, logits.dim(0));
    const auto z = logits.to_doubles();
    const auto lp = log_probs(z, static_cast<std::size_t>(k));
    const auto ids = class_ids(label_of(batch), logits);
    MetricTable t{{"accuracy", {}}, {"loss", {}}};
    for (std::size_t i = 0; i < b; ++i) {
      if (mask[i] == 0.0) continue;
      const double* row = z.data() + i * static_cast<std::size_t>(k);
      t["accuracy"].value_sum += mask[i] * (argmax_row(row, static_cast<std::size_t>(k)) == ids[i]);
      t["loss"].value_sum += mask[i] * -lp[i * static_cast<std::size_t>(k) + ids[i]];
      t["accuracy"].normalizer += mask[i];
      t["loss"].normalizer += mask[i];
    }
    return t;
  };
}

Tensor MultiLabelClassificationModel::loss_fn(const Tensor& logits, const Batch& batch) const {
  check_classes(logits, meta().num_classes, "multilabel");
  const auto& label = label_of(batch);
  if (label.shape() != logits.shape() || logits.ndim() != 2) {
    throw ShapeError(fmt::format("multilabel label shape {} does not match logits {}",
                                 to_string(label.shape()), to_string(logits.shape())));
  }
  const auto y = astype(label, logits.dtype());
  // Stable sigmoid cross-entropy: max(z, 0) - z*y + log(1 + exp(-|z|)).
  const auto per = relu(logits) - logits * y + log(exp(-abs(logits)) + 1.0);
  const auto b = logits.dim(0);
  return weighted_mean(sum(per, {1}), mask_values(batch, b), {b});
}

MetricFn MultiLabelClassificationModel::get_metrics_fn() const {
  const auto k = static_cast<std::size_t>(meta().num_classes);
  return [k](const Tensor& logits, const Batch& batch) {
    check_classes(logits, static_cast<std::int64_t>(k), "multilabel");
    const auto b = static_cast<std::size_t>(logits.dim(0));
    const auto mask = mask_values(batch, logits.dim(0));
    const auto z = logits.to_doubles();
    const auto y = label_of(batch).to_doubles();
    MetricTable t{{"precision@0.5", {}}, {"loss", {}}};
    for (std::size_t i = 0; i < b; ++i) {
      if (mask[i] == 0.0) continue;
      double predicted = 0.0;
      double hits = 0.0;
      double loss = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        const double zi = z[i * k + j];
        const double yi = y[i * k + j];
        loss += std::max(zi, 0.0) - zi * yi + std::log1p(std::exp(-std::abs(zi)));
        if (zi > 0.0) {
          predicted += 1.0;
          hits += yi;
        }
      }
      t["precision@0.5"].value_sum += mask[i] * (predicted > 0.0 ? hits / predicted : 0.0);
      t["loss"].value_sum += mask[i] * loss;
      t["precision@0.5"].normalizer += mask[i];
      t["loss"].normalizer += mask[i];
    }
    return t;
  };
}

Tensor SegmentationModel::loss_fn(const Tensor& logits, const Batch& batch) const {
  check_classes(logits, meta().num_classes, "segmentation");
  if (logits.ndim() != 4) throw ShapeError("segmentation logits must be [b, H, W, K]");
  const auto targets = class_targets(label_of(batch), logits, 0.0);
  const auto b = logits.dim(0);
  const auto per_pixel = -sum(targets * log_softmax(logits, -1), {3});
  return weighted_mean(mean(per_pixel, {1, 2}), mask_values(batch, b), {b});
}

MetricFn SegmentationModel::get_metrics_fn() const {
  const auto k = static_cast<std::size_t>(meta().num_classes);
  return [k](const Tensor& logits, const Batch& batch) {
    check_classes(logits, static_cast<std::int64_t>(k), "segmentation");
    if (logits.ndim() != 4) throw ShapeError("segmentation logits must be [b, H, W, K]");
    const auto b = static_cast<std::size_t>(logits.dim(0));
    const auto pixels = static_cast<std::size_t>(logits.dim(1) * logits.dim(2));
    const auto mask = mask_values(batch, logits.dim(0));
    const auto z = logits.to_doubles();
    const auto lp = log_probs(z, k);
    const auto ids = class_ids(label_of(batch), logits);
    MetricTable t{{"pixel_accuracy", {}}, {"mean_iou", {}}, {"loss", {}}};
    for (std::size_t i = 0; i < b; ++i) {
      if (mask[i] == 0.0) continue;
      std::vector<double> inter(k, 0.0);
      std::vector<double> uni(k, 0.0);
      double correct = 0.0;
      double loss = 0.0;
      for (std::size_t p = i * pixels; p < (i + 1) * pixels; ++p) {
        const auto pred = argmax_row(z.data() + p * k, k);
        const auto truth = ids[p];
        loss -= lp[p * k + truth];
        if (pred == truth) {
          correct += 1.0;
          inter[pred] += 1.0;
          uni[pred] += 1.0;
        } else {
          uni[pred] += 1.0;
          uni[truth] += 1.0;
        }
      }
      double iou = 0.0;
      double present = 0.0;
      for (std::size_t c = 0; c < k; ++c) {
        if (uni[c] > 0.0) {
          iou += inter[c] / uni[c];
          present += 1.0;
        }
      }
      t["pixel_accuracy"].value_sum += mask[i] * correct;
      t["pixel_accuracy"].normalizer += mask[i] * static_cast<double>(pixels);
      t["mean_iou"].value_sum += mask[i] * iou / present;
      t["mean_iou"].normalizer += mask[i];
      t["loss"].value_sum += mask[i] * loss / static_cast<double>(pixels);
      t["loss"].normalizer += mask[i];
    }
    return t;
  };
}

namespace {

// Weight per token: example mask times (label != pad).
std::vector<double> token_weights(const Tensor& label, const std::vector<double>& mask) {
  const auto v = label.to_doubles();
  const auto t = static_cast<std::size_t>(label.dim(1));
  std::vector<double> w(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) w[i] = v[i] != 0.0 ? mask[i / t] : 0.0;
  return w;
}

void check_seq(const Tensor& logits, const Tensor& label, std::int64_t vocab) {
  check_classes(logits, vocab, "encoder-decoder");
  if (logits.ndim() != 3 || label.shape() != Shape{logits.dim(0), logits.dim(1)}) {
    throw ShapeError(fmt::format("sequence logits {} do not match label {}", to_string(logits.shape()),
                                 to_string(label.shape())));
  }
}

}  // namespace

Tensor EncoderDecoderModel::loss_fn(const Tensor& logits, const Batch& batch) const {
  const auto& label = label_of(batch);
  check_seq(logits, label, meta().num_classes);
  const auto targets = class_targets(label, logits, 0.0);
  const auto nll = -sum(targets * log_softmax(logits, -1), {2});
  const auto w = token_weights(label, mask_values(batch, logits.dim(0)));
  return weighted_mean(nll, w, label.shape());
}

MetricFn EncoderDecoderModel::get_metrics_fn() const {
  const auto v = meta().num_classes;
  return [v](const Tensor& logits, const Batch& batch) {
    const auto& label = label_of(batch);
    check_seq(logits, label, v);
    const auto k = static_cast<std::size_t>(v);
    const auto w = token_weights(label, mask_values(batch, logits.dim(0)));
    const auto z = logits.to_doubles();
    const auto lp = log_probs(z, k);
    const auto ids = class_ids(label, logits);
    MetricTable t{{"token_accuracy", {}}, {"loss", {}}};
    for (std::size_t p = 0; p < w.size(); ++p) {
      if (w[p] == 0.0) continue;
      t["token_accuracy"].value_sum += w[p] * (argmax_row(z.data() + p * k, k) == ids[p]);
      t["loss"].value_sum += w[p] * -lp[p * k + ids[p]];
      t["token_accuracy"].normalizer += w[p];
      t["loss"].normalizer += w[p];
    }
    return t;
  };
}

}  // namespace prism
