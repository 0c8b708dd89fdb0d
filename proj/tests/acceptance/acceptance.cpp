// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

// Acceptance gate. Runs the eight criteria in order (or those named on the
// command line), prints one PASS/FAIL line per criterion and exits non-zero
// if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "brute_force.hpp"
#include "gradcheck.hpp"
#include "prism/baselines/baselines.hpp"
#include "prism/layers/layers.hpp"
#include "prism/matchers/matchers.hpp"
#include "prism/tensor/ops.hpp"
#include "prism/train/checkpoint.hpp"

using namespace prism;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> details;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      details.push_back("FAILED: " + what);
    }
  }
  void note(const std::string& text) { details.push_back(text); }
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("prism_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// max over tensors of ||a - b||_inf / ||b||_inf.
double max_relative_difference(const TensorMap& a, const TensorMap& b) {
  double worst = 0.0;
  for (const auto& [name, value] : b) {
    const auto x = a.at(name).to_doubles();
    const auto y = value.to_doubles();
    double diff = 0.0;
    double norm = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      diff = std::max(diff, std::abs(x[i] - y[i]));
      norm = std::max(norm, std::abs(y[i]));
    }
    worst = std::max(worst, norm > 0.0 ? diff / norm : diff);
  }
  return worst;
}

double relative_gap(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale > 0.0 ? std::abs(a - b) / scale : 0.0;
}

// ---------------------------------------------------------------------------
// 1. Gradient suite

struct GradCase {
  std::string name;
  bool block;
  std::function<double()> run;  // relative error
};

Tensor away(std::uint64_t seed, const Shape& shape) {
  return testing::random_away_from_zero(RngKey::from_seed(seed), shape);
}

// One input tensor through `op`, probed by a random weighted sum.
double op_error(std::uint64_t seed, const Shape& shape, const std::function<Tensor(const Tensor&)>& op) {
  const TensorMap p{{"x", away(seed, shape)}};
  const auto probe = RngKey::from_seed(seed + 7777);
  return testing::check_gradients([&](const TensorMap& m) { return testing::weighted_sum(op(m.at("x")), probe); }, p)
      .rel_error;
}

double binary_error(std::uint64_t seed, const Shape& sa, const Shape& sb,
                    const std::function<Tensor(const Tensor&, const Tensor&)>& op) {
  const TensorMap p{{"a", away(seed, sa)}, {"b", away(seed + 1, sb)}};
  const auto probe = RngKey::from_seed(seed + 7777);
  return testing::check_gradients(
             [&](const TensorMap& m) { return testing::weighted_sum(op(m.at("a"), m.at("b")), probe); }, p)
      .rel_error;
}

// A task contract with no architecture, for loss and metric checks.
template <class Base>
class LossOnly final : public Base {
 public:
  LossOnly(std::int64_t classes, Shape input_shape) : Base(Config(), meta(classes, std::move(input_shape))) {}
  std::shared_ptr<const Architecture> build_model() const override { return nullptr; }

 private:
  static DatasetMetaData meta(std::int64_t classes, Shape input_shape) {
    DatasetMetaData m;
    m.num_classes = classes;
    m.input_shape = std::move(input_shape);
    m.num_train_examples = 1;
    m.num_eval_examples = 1;
    return m;
  }
};

// Scalar loss of `logits` under a contract.
double loss_error(const Tensor& logits, const std::function<Tensor(const Tensor&)>& loss) {
  return testing::check_gradients([&](const TensorMap& m) { return loss(m.at("z")); }, {{"z", logits}}).rel_error;
}

// Parameters and input of a block, with params jittered off their init values.
double block_error(std::uint64_t seed, const Module::Forward& f, const Shape& shape, bool train) {
  const Module m(f, DType::f64);
  const auto x = rng_normal(RngKey::from_seed(seed), shape, DType::f64);
  const auto init = m.init(RngKey::from_seed(seed + 1), x);
  TensorMap all;
  std::uint64_t i = 0;
  for (const auto& [name, value] : init.params) {
    all[name] = value + rng_normal(RngKey::from_seed(seed + 100 + i++), value.shape(), DType::f64) * 0.1;
  }
  all["__input"] = x;
  const auto probe = RngKey::from_seed(seed + 7777);
  return testing::check_gradients(
             [&](const TensorMap& p) {
               TensorMap params = p;
               const auto input = params.at("__input");
               params.erase("__input");
               return testing::weighted_sum(m.apply(params, init.state, input, train).logits, probe);
             },
             all)
      .rel_error;
}

std::vector<GradCase> gradient_cases() {
  std::vector<GradCase> cases;
  auto op = [&](const std::string& name, Shape shape, std::function<Tensor(const Tensor&)> f, int seeds = 3) {
    for (int s = 0; s < seeds; ++s) {
      const auto seed = 1000 + 10 * cases.size();
      cases.push_back({fmt::format("{}#{}", name, s), false, [=] { return op_error(seed, shape, f); }});
    }
  };
  auto bin = [&](const std::string& name, Shape sa, Shape sb, std::function<Tensor(const Tensor&, const Tensor&)> f) {
    for (int s = 0; s < 3; ++s) {
      const auto seed = 1000 + 10 * cases.size();
      cases.push_back({fmt::format("{}#{}", name, s), false, [=] { return binary_error(seed, sa, sb, f); }});
    }
  };

  op("neg", {3, 4}, [](const Tensor& x) { return neg(x); });
  op("relu", {3, 4}, [](const Tensor& x) { return relu(x); });
  op("gelu", {3, 4}, [](const Tensor& x) { return gelu(x); });
  op("exp", {3, 4}, [](const Tensor& x) { return exp(x); });
  op("log", {3, 4}, [](const Tensor& x) { return log(abs(x)); });
  op("sigmoid", {3, 4}, [](const Tensor& x) { return sigmoid(x * 3.0); });
  op("tanh", {3, 4}, [](const Tensor& x) { return tanh(x * 2.0); });
  op("sqrt", {3, 4}, [](const Tensor& x) { return sqrt(abs(x)); });
  op("square", {3, 4}, [](const Tensor& x) { return square(x); });
  op("abs", {3, 4}, [](const Tensor& x) { return abs(x); });
  bin("add", {3, 4}, {4}, [](const Tensor& a, const Tensor& b) { return add(a, b); });
  bin("sub", {2, 1, 4}, {3, 1}, [](const Tensor& a, const Tensor& b) { return sub(a, b); });
  bin("mul", {3, 4}, {3, 1}, [](const Tensor& a, const Tensor& b) { return mul(a, b); });
  bin("div", {3, 4}, {1, 4}, [](const Tensor& a, const Tensor& b) { return div(a, b); });
  bin("matmul", {3, 4}, {4, 5}, [](const Tensor& a, const Tensor& b) { return matmul(a, b); });
  bin("matmul batched", {2, 3, 4}, {2, 4, 2}, [](const Tensor& a, const Tensor& b) { return matmul(a, b); });
  bin("matmul broadcast", {2, 2, 3, 4}, {4, 3}, [](const Tensor& a, const Tensor& b) { return matmul(a, b); });
  bin("conv2d same s1", {2, 5, 5, 2}, {3, 3, 2, 3}, [](const Tensor& a, const Tensor& b) { return conv2d(a, b); });
  bin("conv2d same s2", {2, 5, 5, 2}, {3, 3, 2, 3},
      [](const Tensor& a, const Tensor& b) { return conv2d(a, b, 2, Padding::same); });
  bin("conv2d valid s1", {1, 5, 4, 2}, {3, 3, 2, 2},
      [](const Tensor& a, const Tensor& b) { return conv2d(a, b, 1, Padding::valid); });
  bin("conv2d valid s2", {1, 5, 5, 1}, {2, 2, 1, 2},
      [](const Tensor& a, const Tensor& b) { return conv2d(a, b, 2, Padding::valid); });
  op("sum", {2, 3, 4}, [](const Tensor& x) { return sum(x, {0, 2}) * sum(x); });
  op("mean", {2, 3, 4}, [](const Tensor& x) { return mean(x, {1}, true) * x; });
  op("max", {2, 3, 4}, [](const Tensor& x) { return max(x, 1); });
  op("softmax", {2, 3, 4}, [](const Tensor& x) { return softmax(x, 1); });
  op("log_softmax", {2, 5}, [](const Tensor& x) { return log_softmax(x, -1); });
  op("reshape", {2, 6}, [](const Tensor& x) { return square(reshape(x, {3, -1})); });
  op("transpose", {2, 3, 4}, [](const Tensor& x) { return transpose(x, {2, 0, 1}) * 1.5; });
  op("slice", {4, 3}, [](const Tensor& x) { return slice(x, 0, 1, 3); });
  op("concat", {2, 3}, [](const Tensor& x) { return concat({x, square(x), slice(x, 1, 0, 1)}, 1); });
  op("pad", {2, 3}, [](const Tensor& x) { return pad(x, 1, 2, 1); });
  op("swap_last", {2, 3, 4}, [](const Tensor& x) { return swap_last(x) * 0.5; });
  op("broadcast_to", {3, 1}, [](const Tensor& x) { return broadcast_to(x, {2, 3, 4}); });
  op("max_pool2d", {1, 4, 4, 2}, [](const Tensor& x) { return max_pool2d(x, 2, 2); });
  op("avg_pool2d", {1, 4, 4, 2}, [](const Tensor& x) { return avg_pool2d(x, 2, 2); });
  op("upsample_nearest", {1, 2, 3, 2}, [](const Tensor& x) { return upsample_nearest(x, 2); });

  // Task losses with respect to logits.
  {
    const LossOnly<ClassificationModel> cls(4, {-1, 3});
    Batch b{{"label", Tensor({5}, std::vector<std::int32_t>{0, 3, 1, 2, 3})},
            {"batch_mask", Tensor::from_doubles({5}, {1, 1, 0, 1, 1}, DType::f32)}};
    for (int s = 0; s < 2; ++s) {
      const auto z = away(3000 + s, {5, 4});
      cases.push_back({fmt::format("classification loss#{}", s), false,
                       [=] { return loss_error(z, [&](const Tensor& l) { return cls.loss_fn(l, b); }); }});
    }
    const LossOnly<MultiLabelClassificationModel> ml(4, {-1, 3});
    Batch mb{{"label", Tensor::from_doubles({3, 4}, {1, 0, 0, 1, 0, 0, 0, 0, 1, 1, 1, 0}, DType::f32)}};
    for (int s = 0; s < 2; ++s) {
      const auto z = away(3100 + s, {3, 4});
      cases.push_back({fmt::format("multilabel loss#{}", s), false,
                       [=] { return loss_error(z, [&](const Tensor& l) { return ml.loss_fn(l, mb); }); }});
    }
    const LossOnly<SegmentationModel> seg(3, {-1, 2, 3, 1});
    Batch sb{{"label", Tensor({2, 2, 3}, std::vector<std::int32_t>{0, 1, 2, 2, 1, 0, 1, 1, 0, 2, 2, 2})}};
    for (int s = 0; s < 2; ++s) {
      const auto z = away(3200 + s, {2, 2, 3, 3});
      cases.push_back({fmt::format("segmentation loss#{}", s), false,
                       [=] { return loss_error(z, [&](const Tensor& l) { return seg.loss_fn(l, sb); }); }});
    }
    const LossOnly<EncoderDecoderModel> seq(5, {-1, 4});
    Batch qb{{"label", Tensor({2, 4}, std::vector<std::int32_t>{3, 1, 4, 0, 2, 2, 0, 0})}};
    for (int s = 0; s < 2; ++s) {
      const auto z = away(3300 + s, {2, 4, 5});
      cases.push_back({fmt::format("sequence loss#{}", s), false,
                       [=] { return loss_error(z, [&](const Tensor& l) { return seq.loss_fn(l, qb); }); }});
    }
    register_builtin_tasks();
    const auto boxes = make_task("boxes_detection", Config::parse(R"({"max_objects": 3})"), RngKey::from_seed(4));
    const auto detr = baselines::build_detr_mini(Config().with("model.num_slots", 4), boxes->meta_data());
    const std::vector<std::int64_t> ids{0, 1};
    const auto db = boxes->make_batch(Split::train, ids);
    for (int s = 0; s < 2; ++s) {
      const auto z = away(3400 + s, {2, 4, 3 + 4});
      cases.push_back({fmt::format("detection loss#{}", s), false,
                       [=] { return loss_error(z, [&](const Tensor& l) { return detr->loss_fn(l, db); }); }});
    }
  }

  auto block = [&](const std::string& name, Shape shape, Module::Forward f, bool train = false) {
    for (int s = 0; s < 2; ++s) {
      const auto seed = 5000 + 10 * cases.size();
      cases.push_back({fmt::format("{}#{}", name, s), true, [=] { return block_error(seed, f, shape, train); }});
    }
  };
  const nn::TransformerOptions opts{2, 8, 0.0};
  block("dense", {4, 5}, [](Scope& s, const Tensor& x) { return nn::dense(s, x, 3); });
  block("conv", {2, 5, 5, 2}, [](Scope& s, const Tensor& x) { return nn::conv(s, x, 3, 3, 2); });
  block("layer_norm", {3, 6}, [](Scope& s, const Tensor& x) { return nn::layer_norm(s, x); });
  block("batch_norm train", {5, 3}, [](Scope& s, const Tensor& x) { return nn::batch_norm(s, x); }, true);
  block("batch_norm eval", {5, 3}, [](Scope& s, const Tensor& x) { return nn::batch_norm(s, x); });
  block("multi_head_attention", {2, 3, 4}, [](Scope& s, const Tensor& x) {
    const auto mask = Tensor::from_doubles({1, 1, 1, 3}, {0, -1e9, 0}, DType::f64);
    return nn::multi_head_attention(s, x, x, 2, mask);
  });
  block("mlp", {3, 4}, [](Scope& s, const Tensor& x) { return nn::mlp(s, x, 6, 4, 0.0); });
  block("transformer encoder", {2, 3, 4}, [=](Scope& s, const Tensor& x) { return nn::transformer_block(s, x, opts); });
  block("transformer decoder", {2, 3, 4}, [=](Scope& s, const Tensor& x) {
    const auto q = s.param("queries", {2, 2, 4}, nn::truncated_normal_init(1.0));
    return nn::transformer_decoder_block(s.child("dec"), q, x, opts);
  });
  block("mixer", {2, 4, 3}, [](Scope& s, const Tensor& x) { return nn::mixer_block(s, x, 5, 6); });
  block("resnet train", {2, 4, 4, 2}, [](Scope& s, const Tensor& x) { return nn::resnet_block(s, x, 3, 2); }, true);
  block("resnet eval", {2, 4, 4, 2}, [](Scope& s, const Tensor& x) { return nn::resnet_block(s, x, 3, 2); });
  block("unet down/up", {1, 4, 4, 1}, [](Scope& s, const Tensor& x) {
    const auto d = nn::unet_down(s.child("down"), x, 2);
    return nn::unet_up(s.child("up"), d.pooled, d.skip, 2);
  });
  block("patch embed", {2, 4, 4, 2}, [](Scope& s, const Tensor& x) {
    return nn::add_positional_embedding(s.child("pos"), nn::patch_embed(s.child("embed"), x, 2, 3));
  });
  return cases;
}

Outcome gradient_suite() {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  const auto cases = gradient_cases();
  int ops = 0;
  int blocks = 0;
  double worst_op = 0.0;
  double worst_block = 0.0;
  for (const auto& c : cases) {
    const double err = c.run();
    const double tol = c.block ? 1e-4 : 1e-6;
    (c.block ? blocks : ops) += 1;
    (c.block ? worst_block : worst_op) = std::max(c.block ? worst_block : worst_op, err);
    o.require(err < tol, fmt::format("{} relative error {:.3g} >= {:g}", c.name, err, tol));
  }
  const double elapsed = seconds_since(start);
  o.require(cases.size() >= 100, fmt::format("only {} cases", cases.size()));
  o.require(elapsed < 60.0, fmt::format("took {:.1f} s", elapsed));
  o.note(fmt::format("{} cases ({} ops, {} blocks); worst op {:.2g}, worst block {:.2g}; {:.1f} s", cases.size(), ops,
                     blocks, worst_op, worst_block, elapsed));
  return o;
}

// ---------------------------------------------------------------------------
// 2. Matchers

Outcome matcher_exactness() {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  for (const auto& [n, count] : {std::pair<std::int64_t, int>{5, 1000}, {7, 200}}) {
    int mismatches = 0;
    for (int s = 0; s < count; ++s) {
      const auto c = rng_uniform(RngKey::from_seed(static_cast<std::uint64_t>(100000 * n + s)), {n, n}, DType::f64);
      const auto oracle = testing::brute_force_assignment(c.to_doubles(), n, n);
      if (hungarian(c).cost != oracle.cost) ++mismatches;
    }
    o.require(mismatches == 0, fmt::format("{} of {} {}x{} costs differ from brute force", mismatches, count, n, n));
    o.note(fmt::format("hungarian == brute force on {} random {}x{}", count - mismatches, n, n));
  }
  int over = 0;
  int raw_over = 0;
  double worst = 0.0;
  double worst_raw = 0.0;
  for (int s = 0; s < 200; ++s) {
    const auto c = rng_uniform(RngKey::from_seed(static_cast<std::uint64_t>(900000 + s)), {10, 10}, DType::f64);
    const double best = hungarian(c).cost;
    const auto r = sinkhorn_match(c, 0.01, 1000);
    worst = std::max(worst, r.assignment.cost / best);
    worst_raw = std::max(worst_raw, r.rounded.cost / best);
    if (r.assignment.cost > 1.05 * best) ++over;
    if (r.rounded.cost > 1.05 * best) ++raw_over;
  }
  o.require(over == 0, fmt::format("sinkhorn exceeded 1.05x optimal on {} of 200", over));
  o.note(fmt::format("sinkhorn eps=0.01, 1000 iters: worst {:.4f}x optimal on 200 10x10 "
                     "(argmax rounding before local search: worst {:.4f}x, {} over 1.05x)",
                     worst, worst_raw, raw_over));
  const double elapsed = seconds_since(start);
  o.require(elapsed < 120.0, fmt::format("took {:.1f} s", elapsed));
  o.note(fmt::format("{:.1f} s", elapsed));
  return o;
}

// ---------------------------------------------------------------------------
// 3. Sharding and padded eval counts

Config mlp_config(const std::string& extra) {
  baselines::register_baselines();
  auto c = baselines::catalog_entry("fully_connected_classification").defaults;
  return c.merged(Config::parse(extra));
}

Outcome sharding() {
  Outcome o;
  int pairs = 0;
  for (std::int64_t n = 1; n <= 64; ++n) {
    for (std::int64_t hosts = 1; hosts <= std::min<std::int64_t>(8, n); ++hosts) {
      std::vector<int> seen(static_cast<std::size_t>(n), 0);
      bool in_range = true;
      for (std::int64_t h = 0; h < hosts; ++h) {
        for (auto i : shard_indices(n, ShardSpec{h, hosts, 1, 1})) {
          if (i < 0 || i >= n) {
            in_range = false;
            continue;
          }
          ++seen[static_cast<std::size_t>(i)];
        }
      }
      const bool cover = in_range && std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; });
      o.require(cover, fmt::format("n={} H={} shards are not a disjoint cover", n, hosts));
      ++pairs;
    }
  }
  o.note(fmt::format("{} (n, H) pairs form disjoint covers", pairs));

  int sizes = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto key = RngKey::from_seed(4242 + s);
    const auto n_eval = 1 + static_cast<std::int64_t>(rng_uniform_at(key, 0) * 150);
    const auto hosts = 1 + static_cast<std::int64_t>(rng_uniform_at(key, 1) * 4);
    const auto devices = 1 + static_cast<std::int64_t>(rng_uniform_at(key, 2) * 4);
    const auto batch = 1 + static_cast<std::int64_t>(rng_uniform_at(key, 3) * 16);
    if (n_eval < hosts) continue;
    const auto e = make_experiment(mlp_config(fmt::format(
        R"({{"batch_size": {}, "topology": {{"hosts": {}, "devices_per_host": {}}}, "dataset": {{"num_eval": {}}}}})",
        batch, hosts, devices, n_eval)));
    const auto table = evaluate(e, init_experiment_state(e), Split::eval);
    double mask_total = 0.0;
    for (const auto& host : e.hosts) {
      auto it = host.eval_iter(Split::eval);
      while (auto b = it->next()) {
        for (double m : batch_mask_or_ones(*b).to_doubles()) mask_total += m;
      }
    }
    const auto normalizer = table.at("accuracy").normalizer;
    o.require(normalizer == static_cast<double>(n_eval) && mask_total == static_cast<double>(n_eval),
              fmt::format("n={} H={} D={} b={}: normalizer {} mask sum {}", n_eval, hosts, devices, batch, normalizer,
                          mask_total));
    ++sizes;
  }
  o.require(sizes >= 20, fmt::format("only {} dataset sizes exercised", sizes));
  o.note(fmt::format("{} randomized padded eval epochs report exact example counts", sizes));
  return o;
}

// ---------------------------------------------------------------------------
// 4. Aggregation invariance

Batch take_rows(const Batch& batch, const std::vector<std::int64_t>& rows) {
  Batch out;
  for (const auto& [name, t] : batch) {
    std::vector<Tensor> parts;
    for (auto r : rows) parts.push_back(slice(t, 0, r, r + 1));
    out[name] = concat(parts, 0);
  }
  return out;
}

Outcome aggregation() {
  Outcome o;
  const LossOnly<ClassificationModel> cls(5, {-1, 3});
  const LossOnly<SegmentationModel> seg(3, {-1, 4, 4, 1});
  double worst = 0.0;
  int partitions = 0;
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    const auto key = RngKey::from_seed(777 + trial);
    const std::int64_t n = 24;
    const bool segmentation = trial % 2 == 1;
    Batch batch;
    std::vector<std::int32_t> labels(static_cast<std::size_t>(segmentation ? n * 16 : n));
    for (std::size_t i = 0; i < labels.size(); ++i) {
      labels[i] = static_cast<std::int32_t>(rng_uniform_at(fold_in(key, 1), i) * (segmentation ? 3 : 5));
    }
    std::vector<double> mask(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = rng_uniform_at(fold_in(key, 2), i) < 0.8 ? 1.0 : 0.0;
    batch["batch_mask"] = Tensor::from_doubles({n}, mask, DType::f32);
    Tensor logits;
    if (segmentation) {
      batch["label"] = Tensor({n, 4, 4}, labels);
      logits = rng_normal(fold_in(key, 3), {n, 4, 4, 3}, DType::f32);
    } else {
      batch["label"] = Tensor({n}, labels);
      logits = rng_normal(fold_in(key, 3), {n, 5}, DType::f32);
    }
    const auto metrics = segmentation ? seg.get_metrics_fn() : cls.get_metrics_fn();
    const auto whole = aggregate_metrics({metrics(logits, batch)});
    for (std::int64_t shards = 1; shards <= 8; ++shards) {
      for (int rep = 0; rep < 5; ++rep) {
        // Random assignment of examples to shards, each shard non-empty.
        std::vector<std::vector<std::int64_t>> groups(static_cast<std::size_t>(shards));
        const auto perm = rng_permutation(fold_in(key, 100 + static_cast<std::uint64_t>(shards * 10 + rep)), n);
        for (std::int64_t i = 0; i < n; ++i) {
          const auto g = i < shards ? i
                                    : static_cast<std::int64_t>(rng_uniform_at(fold_in(key, 500), static_cast<std::uint64_t>(
                                                                                                      shards * 1000 + rep * 100 + i)) *
                                                                static_cast<double>(shards));
          groups[static_cast<std::size_t>(g)].push_back(perm[static_cast<std::size_t>(i)]);
        }
        std::vector<MetricTable> tables;
        for (auto& rows : groups) {
          std::sort(rows.begin(), rows.end());
          const auto sub = take_rows(batch, rows);
          tables.push_back(metrics(take_rows({{"z", logits}}, rows).at("z"), sub));
        }
        const auto parts = aggregate_metrics(tables);
        for (const auto& [name, value] : whole) {
          const double gap = relative_gap(parts.at(name), value);
          worst = std::max(worst, gap);
          o.require(gap <= 1e-6, fmt::format("{} differs by {:.2g} with {} shards", name, gap, shards));
        }
        ++partitions;
      }
    }
  }
  o.note(fmt::format("{} random partitions into 1..8 shards; worst relative gap {:.2g}", partitions, worst));
  return o;
}

// ---------------------------------------------------------------------------
// 5. Data-parallel equivalence

Outcome data_parallel() {
  Outcome o;
  const auto parallel = make_experiment(
      mlp_config(R"({"batch_size": 8, "topology": {"hosts": 1, "devices_per_host": 4}, "optimizer": {"kind": "adam"}})"));
  const auto single = make_experiment(mlp_config(R"({"batch_size": 32, "optimizer": {"kind": "adam"}})"));
  auto a = init_experiment_state(parallel);
  auto b = init_experiment_state(single);
  o.require(equal_maps(a.params, b.params), "initial params differ");
  const Topology one{1, 1};
  double worst = 0.0;
  for (std::int64_t step = 0; step < 10; ++step) {
    const auto devices = device_batches_for_step(parallel, step);
    a = train_step(a, devices, parallel.topology, *parallel.contract, parallel.optimizer).state;
    b = train_step(b, {concat_batches(devices)}, one, *single.contract, single.optimizer).state;
    worst = std::max(worst, max_relative_difference(a.params, b.params));
  }
  o.require(worst <= 1e-6, fmt::format("max relative parameter difference {:.3g} > 1e-6", worst));
  o.note(fmt::format("MLP, f32, 10 Adam steps: 1x4 (b=8) vs 1x1 (b=32) max relative difference {:.3g}", worst));
  return o;
}

// ---------------------------------------------------------------------------
// 6. Overfitting

struct OverfitTarget {
  const char* model;
  std::int64_t max_steps;
  std::vector<std::pair<std::string, double>> at_least;
  std::vector<std::pair<std::string, double>> at_most;
};

Outcome overfitting() {
  Outcome o;
  baselines::register_baselines();
  const std::vector<OverfitTarget> targets{
      {"fully_connected_classification", 200, {{"train/accuracy", 0.99}}, {}},
      {"vit_classification", 500, {{"train/accuracy", 0.95}}, {}},
      {"mixer_classification", 500, {{"train/accuracy", 0.95}}, {}},
      {"resnet_classification", 500, {{"train/accuracy", 0.95}}, {}},
      {"unet_segmentation", 500, {{"train/pixel_accuracy", 0.90}}, {}},
      {"detr_detection", 2000, {{"train/class_accuracy", 0.90}}, {{"train/box_l1", 0.05}}},
  };
  for (const auto& t : targets) {
    const auto& entry = baselines::catalog_entry(t.model);
    const auto steps = entry.defaults.get<std::int64_t>("total_steps");
    o.require(steps <= t.max_steps, fmt::format("{} default runs {} steps > {}", t.model, steps, t.max_steps));
    for (std::int64_t seed = 0; seed < 3; ++seed) {
      const auto dir = scratch(fmt::format("overfit_{}_{}", t.model, seed));
      const auto config = entry.defaults.with("seed", seed).with("eval_splits", nlohmann::json::array({"train"}));
      const auto start = std::chrono::steady_clock::now();
      const auto metrics = run_trainer(entry.kind, config, dir);
      const double elapsed = seconds_since(start);
      std::string line = fmt::format("{} seed {} ({} steps, {:.0f} s):", t.model, seed, steps, elapsed);
      for (const auto& [name, bound] : t.at_least) {
        const double v = metrics.at(name);
        line += fmt::format(" {}={:.4f}", name, v);
        o.require(v >= bound, fmt::format("{} seed {}: {} = {:.4f} < {}", t.model, seed, name, v, bound));
      }
      for (const auto& [name, bound] : t.at_most) {
        const double v = metrics.at(name);
        line += fmt::format(" {}={:.4f}", name, v);
        o.require(v <= bound, fmt::format("{} seed {}: {} = {:.4f} > {}", t.model, seed, name, v, bound));
      }
      o.require(elapsed < 300.0, fmt::format("{} seed {} took {:.0f} s", t.model, seed, elapsed));
      o.note(line);
      fs::remove_all(dir);
    }
  }
  return o;
}

// ---------------------------------------------------------------------------
// 7. Determinism and resume

std::vector<MetricRecord> records_after(const fs::path& file, std::int64_t step) {
  std::vector<MetricRecord> out;
  for (auto& r : read_metrics(file)) {
    if (r.step > step) out.push_back(r);
  }
  return out;
}

Outcome determinism_and_resume() {
  Outcome o;
  const auto config = mlp_config(R"({"total_steps": 20, "eval_every": 1})");
  const auto dir = scratch("determinism");
  run_trainer(TrainerKind::classification, config, dir / "a");
  run_trainer(TrainerKind::classification, config, dir / "b");
  const auto a = read_file(dir / "a" / "metrics.jsonl");
  o.require(!a.empty() && a == read_file(dir / "b" / "metrics.jsonl"), "metrics.jsonl differs between identical runs");
  o.note(fmt::format("two identical runs wrote byte-identical metrics.jsonl ({} bytes)", a.size()));

  // Resume from step 10 of run "a" and compare steps 11..20.
  fs::create_directories(dir / "resumed");
  fs::copy_file(checkpoint_path(dir / "a", 10), checkpoint_path(dir / "resumed", 10));
  run_trainer(TrainerKind::classification, config, dir / "resumed");
  const auto straight = records_after(dir / "a" / "metrics.jsonl", 10);
  const auto resumed = records_after(dir / "resumed" / "metrics.jsonl", 10);
  o.require(straight.size() == resumed.size() && !straight.empty(), "resumed run logged different records");
  double worst = 0.0;
  for (std::size_t i = 0; i < std::min(straight.size(), resumed.size()); ++i) {
    o.require(straight[i].step == resumed[i].step && straight[i].name == resumed[i].name, "record order differs");
    worst = std::max(worst, relative_gap(straight[i].value, resumed[i].value));
  }
  const auto pa = load_checkpoint(checkpoint_path(dir / "a", 20)).params;
  const auto pr = load_checkpoint(checkpoint_path(dir / "resumed", 20)).params;
  const double param_gap = max_relative_difference(pr, pa);
  o.require(worst <= 1e-6, fmt::format("resumed metrics differ by {:.3g}", worst));
  o.require(param_gap <= 1e-6, fmt::format("resumed params differ by {:.3g}", param_gap));
  o.note(fmt::format("resume at step 10: steps 11..20 metrics max relative gap {:.3g}, final params {:.3g}", worst,
                     param_gap));
  fs::remove_all(dir);
  return o;
}

// ---------------------------------------------------------------------------
// 8. Contract conformance

Batch perturb_masked(const Batch& batch, const std::vector<double>& mask, std::uint64_t seed) {
  Batch out = batch;
  const auto n = static_cast<std::int64_t>(mask.size());
  for (auto& [name, t] : out) {
    if (name == "batch_mask") continue;
    std::vector<Tensor> rows;
    for (std::int64_t i = 0; i < n; ++i) {
      auto row = slice(t, 0, i, i + 1);
      if (mask[static_cast<std::size_t>(i)] == 0.0) {
        if (row.dtype() == DType::i32) {
          auto v = row.to_doubles();
          for (auto& x : v) x = x == 0.0 ? 1.0 : 0.0;
          row = astype(Tensor::from_doubles(row.shape(), v, DType::f64), DType::i32);
        } else {
          row = rng_uniform(RngKey::from_seed(seed + static_cast<std::uint64_t>(i)), row.shape(), row.dtype());
        }
      }
      rows.push_back(row);
    }
    t = concat(rows, 0);
  }
  return out;
}

Outcome contract_conformance() {
  Outcome o;
  baselines::register_baselines();
  int checked = 0;
  for (const auto& entry : baselines::catalog()) {
    const auto e = make_experiment(entry.defaults.with("batch_size", 6));
    const auto& arch_contract = *e.contract;
    auto state = init_experiment_state(e);
    // A few train steps so running statistics are not at their init values.
    for (std::int64_t step = 0; step < 2; ++step) {
      state = train_step(state, device_batches_for_step(e, step), e.topology, arch_contract, e.optimizer).state;
    }
    const auto arch = arch_contract.build_model();
    const auto batch = device_batches_for_step(e, 5).front();
    const auto first = arch->apply(state.params, state.model_state, batch.at("inputs"), false);
    const auto second = arch->apply(state.params, state.model_state, batch.at("inputs"), false);
    o.require(equal_maps(first.state, state.model_state) && equal_maps(second.state, state.model_state),
              entry.name + ": eval apply changed model_state");
    o.require(first.logits.equals(second.logits), entry.name + ": eval apply is not repeatable");

    const std::vector<double> mask{1, 0, 1, 1, 0, 0};
    Batch masked = batch;
    masked["batch_mask"] = Tensor::from_doubles({6}, mask, DType::f32);
    const auto noisy = perturb_masked(masked, mask, 99);
    const auto logits = first.logits;
    const auto noisy_logits = arch->apply(state.params, state.model_state, noisy.at("inputs"), false).logits;
    const auto metrics = arch_contract.get_metrics_fn();
    o.require(metrics(logits, masked) == metrics(noisy_logits, noisy),
              entry.name + ": masked-row perturbation changed a metric");
    o.require(arch_contract.loss_fn(logits, masked).item() == arch_contract.loss_fn(noisy_logits, noisy).item(),
              entry.name + ": masked-row perturbation changed the loss");
    const auto table = eval_step(state, {masked}, arch_contract);
    o.require(table == eval_step(state, {noisy}, arch_contract), entry.name + ": eval_step sees masked rows");
    ++checked;
  }
  o.note(fmt::format("{} baselines: eval apply leaves model_state value-equal; masked rows change no loss or metric",
                     checked));

  // DETR loss is exactly invariant to the order of target objects.
  const auto e = make_experiment(baselines::catalog_entry("detr_detection").defaults.with("batch_size", 8));
  const auto state = init_experiment_state(e);
  const auto arch = e.contract->build_model();
  int permutations = 0;
  for (std::int64_t step = 0; step < 4; ++step) {
    const auto batch = device_batches_for_step(e, step).front();
    const auto logits = arch->apply(state.params, state.model_state, batch.at("inputs"), false).logits;
    const auto slots = batch.at("label").dim(1);
    std::vector<std::int64_t> perm(static_cast<std::size_t>(slots));
    std::iota(perm.begin(), perm.end(), 0);
    const double base = e.contract->loss_fn(logits, batch).item();
    const auto base_metrics = e.contract->get_metrics_fn()(logits, batch);
    while (std::next_permutation(perm.begin(), perm.end())) {
      Batch permuted = batch;
      std::vector<Tensor> labels, boxes;
      for (auto j : perm) {
        labels.push_back(slice(batch.at("label"), 1, j, j + 1));
        boxes.push_back(slice(batch.at("boxes"), 1, j, j + 1));
      }
      permuted["label"] = concat(labels, 1);
      permuted["boxes"] = concat(boxes, 1);
      o.require(e.contract->loss_fn(logits, permuted).item() == base, "DETR loss changed under a target permutation");
      o.require(e.contract->get_metrics_fn()(logits, permuted) == base_metrics,
                "DETR metrics changed under a target permutation");
      ++permutations;
    }
  }
  o.note(fmt::format("DETR loss and metrics bitwise equal under {} target permutations", permutations));
  return o;
}

struct Criterion {
  int id;
  const char* title;
  Outcome (*run)();
};

}  // namespace

int main(int argc, char** argv) {
  const Criterion criteria[] = {
      {1, "gradient suite", &gradient_suite},
      {2, "matcher exactness", &matcher_exactness},
      {3, "sharding and padded eval counts", &sharding},
      {4, "aggregation invariance", &aggregation},
      {5, "data-parallel equivalence", &data_parallel},
      {6, "end-to-end overfitting", &overfitting},
      {7, "determinism and resume", &determinism_and_resume},
      {8, "contract conformance", &contract_conformance},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    for (const auto& d : o.details) std::printf("      %s\n", d.c_str());
    std::printf("%s  [%d] %s\n", o.pass ? "PASS" : "FAIL", c.id, c.title);
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
