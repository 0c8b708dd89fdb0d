// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "prism/model/contract.hpp"
#include "prism/train/trainer.hpp"

namespace prism::baselines {

using ContractPtr = std::shared_ptr<const ModelContract>;

/// model.hidden_sizes ([64]) with relu; input flattened.
ContractPtr build_mlp(const Config& config, const DatasetMetaData& meta);
/// model.patch (4), model.hidden_dim (64), model.num_layers (2),
/// model.num_heads (4), model.mlp_dim (128); class token readout.
ContractPtr build_vit(const Config& config, const DatasetMetaData& meta);
/// model.patch (4), model.hidden_dim (64), model.num_layers (2),
/// model.tokens_mlp_dim (32), model.channels_mlp_dim (64); mean-pool readout.
ContractPtr build_mixer(const Config& config, const DatasetMetaData& meta);
/// model.width (16): stem conv, stages of 2 blocks at width and 2x width
/// (stride 2), global average pool.
ContractPtr build_resnet(const Config& config, const DatasetMetaData& meta);
/// model.features ([8, 16, 32]): two down blocks, bottleneck, two up blocks.
ContractPtr build_unet(const Config& config, const DatasetMetaData& meta);
/// model.num_slots (8), model.hidden_dim (64), model.num_heads (4),
/// model.mlp_dim (128), model.encoder_layers (2), model.decoder_layers (2).
ContractPtr build_detr_mini(const Config& config, const DatasetMetaData& meta);

struct CatalogEntry {
  std::string name;
  TrainerKind kind;
  /// Complete runnable experiment (trainer, dataset and model keys); user
  /// configs are merged over it.
  Config defaults;
};

/// The six baselines in registration order.
const std::vector<CatalogEntry>& catalog();

/// Throws KeyError listing the known names.
const CatalogEntry& catalog_entry(const std::string& name);

/// Registers every catalog entry with the model registry. Idempotent.
void register_baselines();

}  // namespace prism::baselines
