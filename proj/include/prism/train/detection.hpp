// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "prism/matchers/matchers.hpp"
#include "prism/model/contract.hpp"

namespace prism {

struct DetectionWeights {
  double cost_class = 1.0;
  double cost_box = 5.0;
  /// Class-loss weight of slots matched to no object.
  double no_object = 1.0;
};

/// Per image, the target index assigned to each slot, or -1. Targets are the
/// entries of `label` [b, M] below `num_classes`; `boxes` is [b, M, 4].
/// Cost of slot s for target j: cost_class * (1 - p_s(label_j)) +
/// cost_box * |box_s - box_j|_1, minimized by `algorithm`.
std::vector<std::vector<std::int64_t>> match_detection_slots(const Tensor& logits, const Tensor& label,
                                                            const Tensor& boxes, std::int64_t num_classes,
                                                            const DetectionWeights& weights,
                                                            MatchAlgorithm algorithm = MatchAlgorithm::hungarian);

/// Set prediction over `num_slots` slots. Logits are [b, S, K + 1 + 4]: class
/// logits with class K meaning "no object", then box corners in [0, 1].
/// Per image: slot-weighted class cross-entropy plus cost_box times the L1
/// box error summed over matched slots and divided by the object count.
/// Metrics: class_accuracy and box_l1 (per coordinate) over matched objects,
/// loss per image. Config: model.num_slots (8), model.cost_class,
/// model.cost_box, model.no_object_weight, model.matcher.
class DetectionModel : public ModelContract {
 public:
  /// Throws ConfigError when num_slots is below the dataset's max_objects.
  DetectionModel(Config config, DatasetMetaData meta);

  Tensor loss_fn(const Tensor& logits, const Batch& batch) const override;
  MetricFn get_metrics_fn() const override;

  std::int64_t num_slots() const { return num_slots_; }
  const DetectionWeights& weights() const { return weights_; }

 private:
  std::int64_t num_slots_;
  DetectionWeights weights_;
  MatchAlgorithm matcher_;
};

}  // namespace prism
