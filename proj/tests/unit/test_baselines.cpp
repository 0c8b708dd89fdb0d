// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>

#include "gradcheck.hpp"
#include "prism/baselines/baselines.hpp"
#include "prism/tensor/ops.hpp"

using namespace prism;
using prism::testing::check_gradients;

namespace {

const DatasetMetaData& meta_of(const std::string& task, const std::string& dataset_json) {
  static std::map<std::string, std::shared_ptr<const Task>> cache;
  const auto key = task + dataset_json;
  if (!cache.count(key)) {
    register_builtin_tasks();
    cache[key] = make_task(task, Config::parse(dataset_json), RngKey::from_seed(5));
  }
  return cache.at(key)->meta_data();
}

Batch batch_of(const std::string& task, const std::string& dataset_json, std::int64_t b) {
  register_builtin_tasks();
  const auto t = make_task(task, Config::parse(dataset_json), RngKey::from_seed(5));
  std::vector<std::int64_t> idx(static_cast<std::size_t>(b));
  for (std::int64_t i = 0; i < b; ++i) idx[static_cast<std::size_t>(i)] = i;
  return t->make_batch(Split::train, idx);
}

constexpr const char* kImages = R"({"num_classes": 4, "image_size": 8, "channels": 3})";
constexpr const char* kShapes = R"({"image_size": 16})";
constexpr const char* kBoxes = R"({"num_classes": 2, "image_size": 16, "max_objects": 3})";

using Builder = baselines::ContractPtr (*)(const Config&, const DatasetMetaData&);

struct Classifier {
  const char* name;
  Builder build;
};

constexpr Classifier kClassifiers[] = {{"mlp", &baselines::build_mlp},
                                       {"vit", &baselines::build_vit},
                                       {"mixer", &baselines::build_mixer},
                                       {"resnet", &baselines::build_resnet}};

InitResult init_for(const ModelContract& c, std::int64_t b) {
  return c.build_model()->init(RngKey::from_seed(1), Tensor::zeros(c.meta().input_shape_for(b), c.meta().input_dtype));
}

// Relative error of d loss / d params against central differences, in f64.
// Parameters are jittered off their init values so zero biases do not pin
// activations exactly on relu kinks.
double loss_grad_error(const ModelContract& c, const Batch& batch, bool train) {
  const auto arch = c.build_model();
  const auto init = arch->init(RngKey::from_seed(2), batch.at("inputs"));
  TensorMap params;
  std::uint64_t i = 0;
  for (const auto& [name, value] : init.params) {
    params[name] = value + rng_normal(RngKey::from_seed(100 + i++), value.shape(), value.dtype()) * 0.1;
  }
  return check_gradients(
             [&](const TensorMap& p) {
               return c.loss_fn(arch->apply(p, init.state, batch.at("inputs"), train).logits, batch);
             },
             params)
      .rel_error;
}

Config f64(Config c) { return c.with("model.dtype", "f64"); }

}  // namespace

TEST_CASE("catalog lists the six baselines and registers them") {
  std::vector<std::string> names;
  for (const auto& e : baselines::catalog()) names.push_back(e.name);
  CHECK(names == std::vector<std::string>{"fully_connected_classification", "vit_classification",
                                          "mixer_classification", "resnet_classification",
                                          "unet_segmentation", "detr_detection"});
  CHECK(baselines::catalog_entry("unet_segmentation").kind == TrainerKind::segmentation);
  CHECK(baselines::catalog_entry("detr_detection").kind == TrainerKind::detection);
  CHECK_THROWS_AS(baselines::catalog_entry("alexnet"), KeyError);
  baselines::register_baselines();
  baselines::register_baselines();
  const auto registered = registered_models();
  for (const auto& n : names) {
    CHECK(std::find(registered.begin(), registered.end(), n) != registered.end());
  }
}

TEST_CASE("classifiers produce [b, K] logits") {
  const auto& meta = meta_of("blobs_classification", kImages);
  for (const auto& cls : kClassifiers) {
    CAPTURE(cls.name);
    const auto contract = cls.build(Config(), meta);
    const auto arch = contract->build_model();
    const auto init = init_for(*contract, 8);
    const auto batch = batch_of("blobs_classification", kImages, 8);
    const auto out = arch->apply(init.params, init.state, batch.at("inputs"), false);
    CHECK(out.logits.shape() == Shape{8, 4});
    CHECK(std::isfinite(contract->loss_fn(out.logits, batch).item()));
  }
}

TEST_CASE("mlp parameter count follows the layer arithmetic") {
  const auto& meta = meta_of("blobs_classification", R"({"num_classes": 3, "input_dim": 2})");
  const auto d = meta.input_shape.back();
  const auto init = init_for(*baselines::build_mlp(Config(), meta), 1);
  CHECK(count_elements(init.params) == (d + 1) * 64 + (64 + 1) * 3);
  CHECK(init.params.count("hidden_0/kernel") == 1);
  CHECK(init.params.count("head/kernel") == 1);
}

TEST_CASE("vit keeps a class token next to the patch tokens") {
  const auto& meta = meta_of("blobs_classification", kImages);
  const auto init = init_for(*baselines::build_vit(Config(), meta), 2);
  // (8 / 4)^2 patches plus one class token.
  CHECK(init.params.at("encoder/pos_embedding").shape() == Shape{1, 5, 64});
  CHECK(init.params.at("cls").shape() == Shape{1, 1, 64});
}

TEST_CASE("patch models reject indivisible inputs") {
  const auto& meta = meta_of("blobs_classification", R"({"num_classes": 4, "image_size": 6, "channels": 3})");
  CHECK_THROWS_AS(baselines::build_vit(Config(), meta), ShapeError);
  CHECK_THROWS_AS(baselines::build_mixer(Config(), meta), ShapeError);
  CHECK_THROWS_AS(baselines::build_vit(Config().with("model.patch", 0), meta_of("blobs_classification", kImages)),
                  ConfigError);
}

TEST_CASE("resnet eval is pure and train updates running statistics") {
  const auto& meta = meta_of("blobs_classification", kImages);
  const auto contract = baselines::build_resnet(Config(), meta);
  const auto arch = contract->build_model();
  const auto init = init_for(*contract, 4);
  const auto x = batch_of("blobs_classification", kImages, 4).at("inputs");
  REQUIRE(!init.state.empty());
  const auto a = arch->apply(init.params, init.state, x, false);
  const auto b = arch->apply(init.params, init.state, x, false);
  CHECK(a.logits.equals(b.logits));
  CHECK(equal_maps(a.state, init.state));
  CHECK(equal_maps(b.state, init.state));
  const auto t = arch->apply(init.params, init.state, x, true);
  CHECK(!equal_maps(t.state, init.state));
}

TEST_CASE("unet shapes and validation") {
  const auto& meta = meta_of("shapes_segmentation", kShapes);
  const auto contract = baselines::build_unet(Config(), meta);
  const auto init = init_for(*contract, 2);
  const auto batch = batch_of("shapes_segmentation", kShapes, 2);
  const auto out = contract->build_model()->apply(init.params, init.state, batch.at("inputs"), false);
  CHECK(out.logits.shape() == Shape{2, 16, 16, 3});
  // Upsampled features concatenated with the 8x8 and 16x16 skips.
  CHECK(init.params.at("up_1/conv_0/kernel").shape()[2] == 32 + 16);
  CHECK(init.params.at("up_0/conv_0/kernel").shape()[2] == 16 + 8);

  CHECK_THROWS_AS(baselines::build_unet(Config(), meta_of("shapes_segmentation", R"({"image_size": 10})")),
                  ShapeError);
  CHECK_THROWS_AS(baselines::build_unet(Config().with("model.features", nlohmann::json::array({4, 8})), meta),
                  ConfigError);
}

TEST_CASE("detr output layout and slot validation") {
  const auto& meta = meta_of("boxes_detection", kBoxes);
  const auto contract = baselines::build_detr_mini(Config(), meta);
  const auto init = init_for(*contract, 3);
  const auto batch = batch_of("boxes_detection", kBoxes, 3);
  const auto out = contract->build_model()->apply(init.params, init.state, batch.at("inputs"), false);
  // 2 classes + no-object, then 4 box coordinates.
  REQUIRE(out.logits.shape() == Shape{3, 8, 7});
  const auto boxes = slice(out.logits, 2, 3, 7).to_doubles();
  CHECK(std::all_of(boxes.begin(), boxes.end(), [](double v) { return v > 0.0 && v < 1.0; }));
  CHECK(init.params.at("query_embed").shape() == Shape{1, 8, 64});

  CHECK_THROWS_AS(baselines::build_detr_mini(Config().with("model.num_slots", 2), meta), ConfigError);
  CHECK_NOTHROW(baselines::build_detr_mini(Config().with("model.num_slots", 3), meta));
}

TEST_CASE("detr loss ignores the order of target objects") {
  const auto& meta = meta_of("boxes_detection", kBoxes);
  const auto contract = baselines::build_detr_mini(Config(), meta);
  const auto init = init_for(*contract, 4);
  const auto batch = batch_of("boxes_detection", kBoxes, 4);
  const auto logits = contract->build_model()->apply(init.params, init.state, batch.at("inputs"), false).logits;
  const std::vector<std::vector<std::int64_t>> perms{{1, 0, 2}, {2, 1, 0}, {1, 2, 0}};
  for (const auto& perm : perms) {
    Batch permuted = batch;
    std::vector<Tensor> labels, boxes;
    for (auto j : perm) {
      labels.push_back(slice(batch.at("label"), 1, j, j + 1));
      boxes.push_back(slice(batch.at("boxes"), 1, j, j + 1));
    }
    permuted["label"] = concat(labels, 1);
    permuted["boxes"] = concat(boxes, 1);
    CHECK(contract->loss_fn(logits, batch).item() == contract->loss_fn(logits, permuted).item());
    CHECK(contract->get_metrics_fn()(logits, batch) == contract->get_metrics_fn()(logits, permuted));
  }
}

TEST_CASE("every baseline initializes and applies on its dataset") {
  baselines::register_baselines();
  const std::map<std::string, std::pair<std::string, std::string>> data{
      {"fully_connected_classification", {"blobs_classification", kImages}},
      {"vit_classification", {"blobs_classification", kImages}},
      {"mixer_classification", {"blobs_classification", kImages}},
      {"resnet_classification", {"blobs_classification", kImages}},
      {"unet_segmentation", {"shapes_segmentation", kShapes}},
      {"detr_detection", {"boxes_detection", kBoxes}}};
  for (const auto& entry : baselines::catalog()) {
    CAPTURE(entry.name);
    const auto& [task, json] = data.at(entry.name);
    const auto contract = get_model_cls(entry.name)(entry.defaults, meta_of(task, json));
    const auto init = init_for(*contract, 1);
    const auto batch = batch_of(task, json, 2);
    const auto out = contract->build_model()->apply(init.params, init.state, batch.at("inputs"), true, RngKey::from_seed(3));
    CHECK(out.logits.dim(0) == 2);
    CHECK(std::isfinite(contract->loss_fn(out.logits, batch).item()));
    const auto table = contract->get_metrics_fn()(out.logits, batch);
    CHECK(!table.empty());
  }
}

TEST_CASE("loss gradients of minimal baselines match finite differences") {
  constexpr double kTol = 1e-4;
  const char* tiny_images = R"({"num_classes": 3, "image_size": 4, "channels": 2})";
  const auto& img = meta_of("blobs_classification", tiny_images);
  const auto img_batch = batch_of("blobs_classification", tiny_images, 3);
  SUBCASE("mlp") {
    CHECK(loss_grad_error(*baselines::build_mlp(f64(Config()).with("model.hidden_sizes", nlohmann::json::array({5})), img),
                          img_batch, true) < kTol);
  }
  SUBCASE("vit") {
    const auto c = f64(Config::parse(R"({"model": {"patch": 2, "hidden_dim": 4, "num_layers": 1, "num_heads": 2, "mlp_dim": 6}})"));
    CHECK(loss_grad_error(*baselines::build_vit(c, img), img_batch, true) < kTol);
  }
  SUBCASE("mixer") {
    const auto c = f64(Config::parse(
        R"({"model": {"patch": 2, "hidden_dim": 4, "num_layers": 1, "tokens_mlp_dim": 3, "channels_mlp_dim": 5}})"));
    CHECK(loss_grad_error(*baselines::build_mixer(c, img), img_batch, true) < kTol);
  }
  SUBCASE("resnet, train and eval mode") {
    const auto c = f64(Config().with("model.width", 2));
    CHECK(loss_grad_error(*baselines::build_resnet(c, img), img_batch, true) < kTol);
    CHECK(loss_grad_error(*baselines::build_resnet(c, img), img_batch, false) < kTol);
  }
  SUBCASE("unet on a 4x4 toy") {
    DatasetMetaData toy;
    toy.num_classes = 3;
    toy.input_shape = {-1, 4, 4, 1};
    Batch batch;
    batch["inputs"] = rng_normal(RngKey::from_seed(9), {2, 4, 4, 1}, DType::f64);
    std::vector<std::int32_t> labels(32);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<std::int32_t>(i % 3);
    batch["label"] = Tensor({2, 4, 4}, labels);
    const auto c = f64(Config().with("model.features", nlohmann::json::array({2, 2, 3})));
    CHECK(loss_grad_error(*baselines::build_unet(c, toy), batch, true) < kTol);
  }
  SUBCASE("detr") {
    const char* toy = R"({"num_classes": 2, "image_size": 8, "max_objects": 2, "min_side": 2, "max_side": 3})";
    const auto c = f64(Config::parse(R"({"model": {"num_slots": 3, "hidden_dim": 4, "num_heads": 2, "mlp_dim": 6,
        "encoder_layers": 1, "decoder_layers": 1, "backbone": [3, 4]}})"));
    CHECK(loss_grad_error(*baselines::build_detr_mini(c, meta_of("boxes_detection", toy)), batch_of("boxes_detection", toy, 2),
                          true) < kTol);
  }
}
