// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#include "prism/train/detection.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "prism/tensor/ops.hpp"

namespace prism {
namespace {

const Tensor& field(const Batch& batch, const std::string& key) {
  auto it = batch.find(key);
  if (it == batch.end()) throw KeyError(fmt::format("detection batch has no '{}'", key));
  return it->second;
}

struct Layout {
  std::int64_t b;
  std::int64_t slots;
  std::int64_t classes;  // K, excluding no-object
  std::int64_t targets;  // M
};

Layout check_layout(const Tensor& logits, const Tensor& label, const Tensor& boxes, std::int64_t k) {
  if (logits.ndim() != 3 || logits.dim(2) != k + 5) {
    throw ShapeError(fmt::format("detection logits must be [b, S, {}], got {}", k + 5, to_string(logits.shape())));
  }
  const auto b = logits.dim(0);
  if (label.ndim() != 2 || label.dim(0) != b || boxes.shape() != Shape{b, label.dim(1), 4}) {
    throw ShapeError(fmt::format("detection targets must be label [b, M] and boxes [b, M, 4], got {} and {}",
                                 to_string(label.shape()), to_string(boxes.shape())));
  }
  return {b, logits.dim(1), k, label.dim(1)};
}

std::vector<double> softmax_rows(const double* z, std::size_t k) {
  const double m = *std::max_element(z, z + k);
  std::vector<double> p(k);
  double s = 0.0;
  for (std::size_t j = 0; j < k; ++j) s += (p[j] = std::exp(z[j] - m));
  for (auto& x : p) x /= s;
  return p;
}

MatchAlgorithm parse_matcher(const std::string& name) {
  if (name == "hungarian") return MatchAlgorithm::hungarian;
  if (name == "sinkhorn") return MatchAlgorithm::sinkhorn;
  if (name == "greedy") return MatchAlgorithm::greedy;
  throw ConfigError(fmt::format("unknown model.matcher '{}' (hungarian, sinkhorn, greedy)", name));
}

}  // namespace

std::vector<std::vector<std::int64_t>> match_detection_slots(const Tensor& logits, const Tensor& label,
                                                            const Tensor& boxes, std::int64_t num_classes,
                                                            const DetectionWeights& weights,
                                                            MatchAlgorithm algorithm) {
  const auto L = check_layout(logits, label, boxes, num_classes);
  const auto z = logits.to_doubles();
  const auto y = label.to_doubles();
  const auto t = boxes.to_doubles();
  const auto width = static_cast<std::size_t>(num_classes + 5);
  const auto kc = static_cast<std::size_t>(num_classes + 1);

  std::vector<std::vector<std::int64_t>> out;
  for (std::int64_t i = 0; i < L.b; ++i) {
    std::vector<std::int64_t> real;
    for (std::int64_t j = 0; j < L.targets; ++j) {
      const double c = y[static_cast<std::size_t>(i * L.targets + j)];
      if (c < 0 || c > static_cast<double>(num_classes)) {
        throw ValueError(fmt::format("detection label {} outside [0, {}]", c, num_classes));
      }
      if (c < static_cast<double>(num_classes)) real.push_back(j);
    }
    std::vector<std::int64_t> slot_target(static_cast<std::size_t>(L.slots), -1);
    if (!real.empty()) {
      if (static_cast<std::int64_t>(real.size()) > L.slots) {
        throw ValueError(fmt::format("image {} has {} objects for {} slots", i, real.size(), L.slots));
      }
      const auto n = real.size();
      const auto m = static_cast<std::size_t>(L.slots);
      std::vector<double> cost(n * m);
      for (std::size_t s = 0; s < m; ++s) {
        const double* row = z.data() + (static_cast<std::size_t>(i) * m + s) * width;
        const auto p = softmax_rows(row, kc);
        for (std::size_t r = 0; r < n; ++r) {
          const auto j = static_cast<std::size_t>(real[r]);
          const auto cls = static_cast<std::size_t>(y[static_cast<std::size_t>(i * L.targets) + j]);
          double l1 = 0.0;
          for (std::size_t c = 0; c < 4; ++c) {
            l1 += std::abs(row[kc + c] - t[(static_cast<std::size_t>(i * L.targets) + j) * 4 + c]);
          }
          cost[r * m + s] = weights.cost_class * (1.0 - p[cls]) + weights.cost_box * l1;
        }
      }
      const CostMatrix cm{static_cast<std::int64_t>(n), L.slots, std::move(cost)};
      Assignment a;
      switch (algorithm) {
        case MatchAlgorithm::hungarian:
          a = hungarian(cm);
          break;
        case MatchAlgorithm::greedy:
          a = greedy_match(cm);
          break;
        case MatchAlgorithm::sinkhorn:
          a = sinkhorn_match(cm, 0.01, 1000).assignment;
          break;
      }
      for (std::size_t r = 0; r < n; ++r) slot_target[static_cast<std::size_t>(a.row_to_col[r])] = real[r];
    }
    out.push_back(std::move(slot_target));
  }
  return out;
}

namespace {

Tensor detection_loss(const Tensor& logits, const Batch& batch, std::int64_t k, const DetectionWeights& weights,
                      MatchAlgorithm matcher) {
  const auto& label = field(batch, "label");
  const auto& boxes = field(batch, "boxes");
  const auto L = check_layout(logits, label, boxes, k);
  const auto slots = match_detection_slots(stop_gradient(logits), label, boxes, k, weights, matcher);

  const auto y = label.to_doubles();
  const auto t = boxes.to_doubles();
  const auto bs = static_cast<std::size_t>(L.b * L.slots);
  std::vector<std::int32_t> target_class(bs, static_cast<std::int32_t>(k));
  std::vector<double> target_box(bs * 4, 0.0);
  std::vector<double> matched(bs, 0.0);
  std::vector<double> class_weight(bs, weights.no_object);
  std::vector<double> object_norm(static_cast<std::size_t>(L.b), 1.0);
  for (std::int64_t i = 0; i < L.b; ++i) {
    std::int64_t count = 0;
    for (std::int64_t s = 0; s < L.slots; ++s) {
      const auto j = slots[static_cast<std::size_t>(i)][static_cast<std::size_t>(s)];
      if (j < 0) continue;
      const auto at = static_cast<std::size_t>(i * L.slots + s);
      const auto src = static_cast<std::size_t>(i * L.targets + j);
      target_class[at] = static_cast<std::int32_t>(y[src]);
      for (std::size_t c = 0; c < 4; ++c) target_box[at * 4 + c] = t[src * 4 + c];
      matched[at] = 1.0;
      class_weight[at] = 1.0;
      ++count;
    }
    object_norm[static_cast<std::size_t>(i)] = 1.0 / static_cast<double>(std::max<std::int64_t>(count, 1));
  }

  const auto dt = logits.dtype();
  const auto cls_logits = slice(logits, 2, 0, k + 1);
  const auto pred_boxes = slice(logits, 2, k + 1, k + 5);
  const auto targets = one_hot(Tensor(Shape{L.b, L.slots}, target_class), k + 1, dt);
  const auto ce = -sum(targets * log_softmax(cls_logits, -1), {2});  // [b, S]
  const auto w = Tensor::from_doubles({L.b, L.slots}, class_weight, dt);
  const auto class_term = sum(ce * w, {1}) / sum(w, {1});
  const auto l1 = sum(abs(pred_boxes - Tensor::from_doubles({L.b, L.slots, 4}, target_box, dt)), {2});
  const auto box_term =
      sum(l1 * Tensor::from_doubles({L.b, L.slots}, matched, dt), {1}) * Tensor::from_doubles({L.b}, object_norm, dt);
  const auto per_image = class_term * weights.cost_class + box_term * weights.cost_box;

  const auto mask = batch_mask_or_ones(batch).to_doubles();
  if (static_cast<std::int64_t>(mask.size()) != L.b) throw ShapeError("batch_mask does not match the batch");
  double total = 0.0;
  for (double m : mask) total += m;
  return sum(per_image * Tensor::from_doubles({L.b}, mask, dt)) / std::max(total, 1.0);
}

}  // namespace

DetectionModel::DetectionModel(Config config, DatasetMetaData meta)
    : ModelContract(std::move(config), std::move(meta)),
      num_slots_(this->config().get_or<std::int64_t>("model.num_slots", 8)),
      matcher_(parse_matcher(this->config().get_or<std::string>("model.matcher", "hungarian"))) {
  weights_.cost_class = this->config().get_or<double>("model.cost_class", weights_.cost_class);
  weights_.cost_box = this->config().get_or<double>("model.cost_box", weights_.cost_box);
  weights_.no_object = this->config().get_or<double>("model.no_object_weight", weights_.no_object);
  const auto max_objects = this->meta().extras.contains("max_objects") ? this->meta().extra("max_objects") : 0;
  if (num_slots_ < std::max<std::int64_t>(max_objects, 1)) {
    throw ConfigError(fmt::format("model.num_slots {} is below the dataset's max_objects {}", num_slots_, max_objects));
  }
  if (!(weights_.no_object > 0.0) || weights_.cost_class < 0.0 || weights_.cost_box < 0.0) {
    throw ConfigError("detection weights must be >= 0 with no_object_weight > 0");
  }
}

Tensor DetectionModel::loss_fn(const Tensor& logits, const Batch& batch) const {
  return detection_loss(logits, batch, meta().num_classes, weights_, matcher_);
}

MetricFn DetectionModel::get_metrics_fn() const {
  return [k = meta().num_classes, weights = weights_, matcher = matcher_](const Tensor& logits,
                                                                           const Batch& batch) {
    const auto& label = field(batch, "label");
    const auto& boxes = field(batch, "boxes");
    const auto L = check_layout(logits, label, boxes, k);
    const auto slots = match_detection_slots(logits, label, boxes, k, weights, matcher);
    const auto mask = batch_mask_or_ones(batch).to_doubles();
    const auto z = logits.to_doubles();
    const auto y = label.to_doubles();
    const auto t = boxes.to_doubles();
    const auto width = static_cast<std::size_t>(k + 5);
    const auto kc = static_cast<std::size_t>(k + 1);

    MetricTable table{{"class_accuracy", {}}, {"box_l1", {}}, {"loss", {}}};
    const auto losses = [&] {
      std::vector<double> out;
      for (std::int64_t i = 0; i < L.b; ++i) {
        Batch one;
        for (const auto& [key, value] : batch) {
          if (key != "batch_mask") one.emplace(key, slice(value, 0, i, i + 1));
        }
        out.push_back(detection_loss(slice(logits, 0, i, i + 1), one, k, weights, matcher).item());
      }
      return out;
    }();
    for (std::int64_t i = 0; i < L.b; ++i) {
      const double m = mask[static_cast<std::size_t>(i)];
      for (std::int64_t s = 0; s < L.slots; ++s) {
        const auto j = slots[static_cast<std::size_t>(i)][static_cast<std::size_t>(s)];
        if (j < 0) continue;
        const double* row = z.data() + static_cast<std::size_t>(i * L.slots + s) * width;
        const auto src = static_cast<std::size_t>(i * L.targets + j);
        const auto pred = static_cast<double>(std::max_element(row, row + kc) - row);
        double l1 = 0.0;
        for (std::size_t c = 0; c < 4; ++c) l1 += std::abs(row[kc + c] - t[src * 4 + c]);
        table["class_accuracy"].value_sum += m * (pred == y[src] ? 1.0 : 0.0);
        table["class_accuracy"].normalizer += m;
        table["box_l1"].value_sum += m * l1 / 4.0;
        table["box_l1"].normalizer += m;
      }
      table["loss"].value_sum += m * losses[static_cast<std::size_t>(i)];
      table["loss"].normalizer += m;
    }
    return table;
  };
}

}  // namespace prism
