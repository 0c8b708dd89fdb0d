// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#include <fmt/format.h>

#include "prism/baselines/baselines.hpp"
#include "prism/layers/layers.hpp"
#include "prism/train/detection.hpp"

namespace prism::baselines {
namespace {

using nn::TransformerOptions;

std::int64_t knob(const Config& config, const std::string& key, std::int64_t fallback) {
  const auto v = config.get_or<std::int64_t>("model." + key, fallback);
  if (v < 1) throw ConfigError(fmt::format("model.{} must be >= 1, got {}", key, v));
  return v;
}

std::vector<std::int64_t> knob_list(const Config& config, const std::string& key, std::vector<std::int64_t> fallback) {
  auto v = config.get_or<std::vector<std::int64_t>>("model." + key, std::move(fallback));
  for (auto x : v) {
    if (x < 1) throw ConfigError(fmt::format("model.{} entries must be >= 1", key));
  }
  return v;
}

// [b, H, W, C] image extents, with `divisor` required to divide H and W.
void require_image(const DatasetMetaData& meta, std::int64_t divisor, std::string_view model) {
  const auto& s = meta.input_shape;
  if (s.size() != 4) {
    throw ShapeError(fmt::format("{} needs [b, H, W, C] inputs, dataset gives {}", model, to_string(s)));
  }
  if (s[1] % divisor != 0 || s[2] % divisor != 0) {
    throw ShapeError(fmt::format("{} needs H and W divisible by {}, got {}x{}", model, divisor, s[1], s[2]));
  }
}

void require_divisible(const Tensor& x, std::int64_t divisor, std::string_view model) {
  if (x.ndim() != 4 || x.dim(1) % divisor != 0 || x.dim(2) % divisor != 0) {
    throw ShapeError(fmt::format("{} input {} is not [b, H, W, C] with H, W divisible by {}", model,
                                 to_string(x.shape()), divisor));
  }
}

Tensor flatten(const Tensor& x) {
  std::int64_t rest = 1;
  for (std::size_t i = 1; i < x.ndim(); ++i) rest *= x.dim(static_cast<int>(i));
  return reshape(x, {x.dim(0), rest});
}

template <class Base>
class Built final : public Base {
 public:
  Built(const Config& config, const DatasetMetaData& meta, Module::Forward forward)
      : Base(config, meta), forward_(std::move(forward)) {}
  std::shared_ptr<const Architecture> build_model() const override {
    return std::make_shared<Module>(forward_, this->dtype());
  }

 private:
  Module::Forward forward_;
};

}  // namespace

ContractPtr build_mlp(const Config& config, const DatasetMetaData& meta) {
  const auto hidden = knob_list(config, "hidden_sizes", {64});
  const auto k = meta.num_classes;
  return std::make_shared<Built<ClassificationModel>>(config, meta, [hidden, k](Scope& s, const Tensor& x) {
    auto h = flatten(x);
    for (std::size_t i = 0; i < hidden.size(); ++i) {
      h = relu(nn::dense(s.child(fmt::format("hidden_{}", i)), h, hidden[i]));
    }
    return nn::dense(s.child("head"), h, k);
  });
}

ContractPtr build_vit(const Config& config, const DatasetMetaData& meta) {
  const auto patch = knob(config, "patch", 4);
  require_image(meta, patch, "vit");
  const auto d = knob(config, "hidden_dim", 64);
  const auto layers = knob(config, "num_layers", 2);
  const TransformerOptions block{static_cast<int>(knob(config, "num_heads", 4)), knob(config, "mlp_dim", 128), 0.0};
  const auto k = meta.num_classes;
  return std::make_shared<Built<ClassificationModel>>(config, meta, [=](Scope& s, const Tensor& x) {
    require_divisible(x, patch, "vit");
    auto tokens = nn::patch_embed(s.child("embedding"), x, static_cast<int>(patch), d);
    const auto cls = s.param("cls", {1, 1, d}, nn::zeros_init());
    tokens = concat({broadcast_to(cls, {x.dim(0), 1, d}), tokens}, 1);
    tokens = nn::add_positional_embedding(s.child("encoder"), tokens);
    for (std::int64_t i = 0; i < layers; ++i) {
      tokens = nn::transformer_block(s.child(fmt::format("block_{}", i)), tokens, block);
    }
    tokens = nn::layer_norm(s.child("encoder_norm"), tokens);
    return nn::dense(s.child("head"), reshape(slice(tokens, 1, 0, 1), {x.dim(0), d}), k, true, nn::zeros_init());
  });
}

ContractPtr build_mixer(const Config& config, const DatasetMetaData& meta) {
  const auto patch = knob(config, "patch", 4);
  require_image(meta, patch, "mixer");
  const auto d = knob(config, "hidden_dim", 64);
  const auto layers = knob(config, "num_layers", 2);
  const auto tokens_mlp = knob(config, "tokens_mlp_dim", 32);
  const auto channels_mlp = knob(config, "channels_mlp_dim", 64);
  const auto k = meta.num_classes;
  return std::make_shared<Built<ClassificationModel>>(config, meta, [=](Scope& s, const Tensor& x) {
    require_divisible(x, patch, "mixer");
    auto tokens = nn::patch_embed(s.child("stem"), x, static_cast<int>(patch), d);
    for (std::int64_t i = 0; i < layers; ++i) {
      tokens = nn::mixer_block(s.child(fmt::format("mixer_{}", i)), tokens, tokens_mlp, channels_mlp);
    }
    tokens = nn::layer_norm(s.child("pre_head_norm"), tokens);
    return nn::dense(s.child("head"), mean(tokens, {1}), k, true, nn::zeros_init());
  });
}

ContractPtr build_resnet(const Config& config, const DatasetMetaData& meta) {
  require_image(meta, 1, "resnet");
  const auto width = knob(config, "width", 16);
  const auto k = meta.num_classes;
  return std::make_shared<Built<ClassificationModel>>(config, meta, [=](Scope& s, const Tensor& x) {
    auto h = relu(nn::batch_norm(s.child("stem_bn"), nn::conv(s.child("stem_conv"), x, width, 3, 1, Padding::same, false)));
    const std::int64_t widths[2] = {width, 2 * width};
    for (int stage = 0; stage < 2; ++stage) {
      for (int block = 0; block < 2; ++block) {
        const int stride = stage > 0 && block == 0 ? 2 : 1;
        h = nn::resnet_block(s.child(fmt::format("stage_{}_block_{}", stage, block)), h, widths[stage], stride);
      }
    }
    return nn::dense(s.child("head"), mean(h, {1, 2}), k);
  });
}

ContractPtr build_unet(const Config& config, const DatasetMetaData& meta) {
  require_image(meta, 4, "unet");
  const auto features = knob_list(config, "features", {8, 16, 32});
  if (features.size() != 3) throw ConfigError("model.features must list 3 widths (down, down, bottleneck)");
  const auto k = meta.num_classes;
  return std::make_shared<Built<SegmentationModel>>(config, meta, [=](Scope& s, const Tensor& x) {
    require_divisible(x, 4, "unet");
    const auto d0 = nn::unet_down(s.child("down_0"), x, features[0]);
    const auto d1 = nn::unet_down(s.child("down_1"), d0.pooled, features[1]);
    auto h = relu(nn::conv(s.child("bottleneck_0"), d1.pooled, features[2], 3));
    h = relu(nn::conv(s.child("bottleneck_1"), h, features[2], 3));
    h = nn::unet_up(s.child("up_1"), h, d1.skip, features[1]);
    h = nn::unet_up(s.child("up_0"), h, d0.skip, features[0]);
    return nn::conv(s.child("head"), h, k, 1);
  });
}

ContractPtr build_detr_mini(const Config& config, const DatasetMetaData& meta) {
  require_image(meta, 2, "detr");
  const auto slots = knob(config, "num_slots", 8);
  const auto d = knob(config, "hidden_dim", 64);
  const auto enc_layers = knob(config, "encoder_layers", 2);
  const auto dec_layers = knob(config, "decoder_layers", 2);
  const TransformerOptions block{static_cast<int>(knob(config, "num_heads", 4)), knob(config, "mlp_dim", 128), 0.0};
  const auto k = meta.num_classes;
  const auto backbone = knob_list(config, "backbone", {32, 64});
  return std::make_shared<Built<DetectionModel>>(config, meta, [=](Scope& s, const Tensor& x) {
    require_divisible(x, 2, "detr");
    const auto b = x.dim(0);
    auto h = x;
    for (std::size_t i = 0; i < backbone.size(); ++i) {
      h = relu(nn::conv(s.child(fmt::format("backbone_{}", i)), h, backbone[i], 3, i + 1 == backbone.size() ? 2 : 1));
    }
    auto memory = nn::dense(s.child("input_proj"), reshape(h, {b, h.dim(1) * h.dim(2), h.dim(3)}), d);
    memory = nn::add_positional_embedding(s.child("encoder"), memory);
    for (std::int64_t i = 0; i < enc_layers; ++i) {
      memory = nn::transformer_block(s.child(fmt::format("encoder_{}", i)), memory, block);
    }
    memory = nn::layer_norm(s.child("encoder_norm"), memory);
    const auto queries = s.param("query_embed", {1, slots, d}, nn::truncated_normal_init(1.0));
    auto q = broadcast_to(queries, {b, slots, d});
    for (std::int64_t i = 0; i < dec_layers; ++i) {
      q = nn::transformer_decoder_block(s.child(fmt::format("decoder_{}", i)), q, memory, block);
    }
    q = nn::layer_norm(s.child("decoder_norm"), q);
    const auto cls = nn::dense(s.child("class_head"), q, k + 1);
    auto box = relu(nn::dense(s.child("box_hidden"), q, d));
    box = sigmoid(nn::dense(s.child("box_head"), box, 4));
    return concat({cls, box}, 2);
  });
}

}  // namespace prism::baselines
