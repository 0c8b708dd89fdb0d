// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#include <mutex>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "prism/baselines/baselines.hpp"

namespace prism::baselines {
namespace {

using Builder = ContractPtr (*)(const Config&, const DatasetMetaData&);

struct Definition {
  const char* name;
  TrainerKind kind;
  Builder build;
  const char* defaults;
};

// Trainer keys shared by every baseline; each entry overlays its own.
constexpr const char* kTrainerDefaults = R"({
  "seed": 0, "batch_size": 32, "eval_every": 0, "eval_splits": ["train", "eval"],
  "optimizer": {"kind": "adam", "schedule": "cosine", "warmup_steps": 20}
})";

constexpr Definition kDefinitions[] = {
    {"fully_connected_classification", TrainerKind::classification, &build_mlp, R"({
      "lr": 0.01, "total_steps": 200,
      "dataset": {"name": "blobs_classification", "num_classes": 4},
      "model": {"hidden_sizes": [64]}})"},
    {"vit_classification", TrainerKind::classification, &build_vit, R"({
      "lr": 0.001, "total_steps": 500,
      "dataset": {"name": "blobs_classification", "num_classes": 4, "image_size": 8, "channels": 3},
      "model": {"patch": 4, "hidden_dim": 64, "num_layers": 2, "num_heads": 4, "mlp_dim": 128}})"},
    {"mixer_classification", TrainerKind::classification, &build_mixer, R"({
      "lr": 0.001, "total_steps": 500,
      "dataset": {"name": "blobs_classification", "num_classes": 4, "image_size": 8, "channels": 3},
      "model": {"patch": 4, "hidden_dim": 64, "num_layers": 2, "tokens_mlp_dim": 32, "channels_mlp_dim": 64}})"},
    {"resnet_classification", TrainerKind::classification, &build_resnet, R"({
      "lr": 0.001, "total_steps": 500,
      "dataset": {"name": "blobs_classification", "num_classes": 4, "image_size": 8, "channels": 3},
      "model": {"width": 16}})"},
    {"unet_segmentation", TrainerKind::segmentation, &build_unet, R"({
      "lr": 0.003, "total_steps": 500,
      "dataset": {"name": "shapes_segmentation", "image_size": 16},
      "model": {"features": [8, 16, 32]}})"},
    {"detr_detection", TrainerKind::detection, &build_detr_mini, R"({
      "lr": 0.001, "total_steps": 1000, "optimizer": {"warmup_steps": 100},
      "dataset": {"name": "boxes_detection", "num_classes": 2, "image_size": 16, "max_objects": 3},
      "model": {"num_slots": 8, "hidden_dim": 64, "num_heads": 4, "mlp_dim": 128,
                "encoder_layers": 2, "decoder_layers": 2, "backbone": [32, 64]}})"},
};

}  // namespace

const std::vector<CatalogEntry>& catalog() {
  static const std::vector<CatalogEntry> entries = [] {
    std::vector<CatalogEntry> out;
    for (const auto& def : kDefinitions) {
      const auto shared = Config::parse(kTrainerDefaults, "trainer defaults");
      out.push_back({def.name, def.kind,
                     shared.merged(Config::parse(def.defaults, def.name)).with("model.name", def.name)});
    }
    return out;
  }();
  return entries;
}

const CatalogEntry& catalog_entry(const std::string& name) {
  for (const auto& entry : catalog()) {
    if (entry.name == name) return entry;
  }
  std::vector<std::string> names;
  for (const auto& entry : catalog()) names.push_back(entry.name);
  throw KeyError(fmt::format("unknown baseline '{}'; known: {}", name, fmt::join(names, ", ")));
}

void register_baselines() {
  static std::once_flag once;
  std::call_once(once, [] {
    for (const auto& def : kDefinitions) {
      register_model(def.name, def.build);
    }
  });
}

}  // namespace prism::baselines
