// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "prism/common/config.hpp"
#include "prism/data/batch.hpp"
#include "prism/data/dataset.hpp"
#include "prism/model/architecture.hpp"

namespace prism {

struct MetricValue {
  double value_sum = 0.0;
  double normalizer = 0.0;

  friend bool operator==(const MetricValue&, const MetricValue&) = default;
};

/// Per-name (sum of per-unit values, number of units).
using MetricTable = std::map<std::string, MetricValue>;

/// Metrics of one mini-batch, honoring "batch_mask".
using MetricFn = std::function<MetricTable(const Tensor& logits, const Batch& batch)>;

/// Architecture builder plus the task's loss and metrics.
class ModelContract {
 public:
  ModelContract(Config config, DatasetMetaData meta);
  virtual ~ModelContract() = default;

  virtual std::shared_ptr<const Architecture> build_model() const = 0;
  /// Scalar training loss, differentiable with respect to `logits`.
  virtual Tensor loss_fn(const Tensor& logits, const Batch& batch) const = 0;
  virtual MetricFn get_metrics_fn() const = 0;

  const Config& config() const { return config_; }
  const DatasetMetaData& meta() const { return meta_; }
  /// Parameter dtype from `model.dtype` (default f32).
  DType dtype() const;

 private:
  Config config_;
  DatasetMetaData meta_;
};

/// Softmax cross-entropy over [b, K] logits; labels are class ids [b] or
/// one-hot rows [b, K]. Reports accuracy and loss per example. Optional knob
/// `model.label_smoothing`.
class ClassificationModel : public ModelContract {
 public:
  using ModelContract::ModelContract;
  Tensor loss_fn(const Tensor& logits, const Batch& batch) const override;
  MetricFn get_metrics_fn() const override;
};

/// Sigmoid cross-entropy summed over classes. Reports precision@0.5 (per
/// example; no positive prediction counts as 0) and loss per example.
class MultiLabelClassificationModel : public ModelContract {
 public:
  using ModelContract::ModelContract;
  Tensor loss_fn(const Tensor& logits, const Batch& batch) const override;
  MetricFn get_metrics_fn() const override;
};

/// Per-pixel softmax cross-entropy over [b, H, W, K] logits. Reports
/// pixel_accuracy per pixel, mean_iou per example (mean over classes present
/// in the prediction or the label) and loss per example.
class SegmentationModel : public ModelContract {
 public:
  using ModelContract::ModelContract;
  Tensor loss_fn(const Tensor& logits, const Batch& batch) const override;
  MetricFn get_metrics_fn() const override;
};

/// Token cross-entropy over [b, T, V] logits, excluding pad token 0.
/// Reports token_accuracy and loss per non-pad token.
class EncoderDecoderModel : public ModelContract {
 public:
  using ModelContract::ModelContract;
  Tensor loss_fn(const Tensor& logits, const Batch& batch) const override;
  MetricFn get_metrics_fn() const override;
};

using ModelFactory =
    std::function<std::shared_ptr<const ModelContract>(const Config&, const DatasetMetaData&)>;

/// Throws ValueError on a duplicate name.
void register_model(const std::string& name, ModelFactory factory);
/// Throws KeyError listing the registered names when `name` is unknown.
ModelFactory get_model_cls(const std::string& name);
std::vector<std::string> registered_models();

}  // namespace prism
