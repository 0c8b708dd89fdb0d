// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#include "prism/train/optimizer.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace prism {
namespace {

std::vector<std::string> slot_names(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::sgd:
      return {};
    case OptimizerKind::sgd_momentum:
      return {"momentum"};
    case OptimizerKind::adam:
      return {"m", "v"};
  }
  return {};
}

std::string slot_key(const std::string& slot, const std::string& name) { return slot + "/" + name; }

const Tensor& lookup(const TensorMap& map, const std::string& key, std::string_view what) {
  auto it = map.find(key);
  if (it == map.end()) throw KeyError(fmt::format("{} has no entry '{}'", what, key));
  return it->second;
}

}  // namespace

Schedule constant_schedule(double lr) {
  return [lr](std::int64_t) { return lr; };
}

Schedule cosine_schedule(double base, std::int64_t total_steps, std::int64_t warmup_steps,
                         double final_fraction) {
  return [=](std::int64_t step) {
    if (warmup_steps > 0 && step < warmup_steps) {
      return base * static_cast<double>(step + 1) / static_cast<double>(warmup_steps);
    }
    const auto span = std::max<std::int64_t>(total_steps - warmup_steps, 1);
    const double t = std::min(1.0, static_cast<double>(step - warmup_steps) / static_cast<double>(span));
    const double floor = final_fraction * base;
    return floor + (base - floor) * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
  };
}

OptimizerSpec optimizer_from_config(const Config& config) {
  OptimizerSpec spec;
  const auto opt = config.sub("optimizer");
  const auto kind = opt.get_or<std::string>("kind", "adam");
  if (kind == "sgd") {
    spec.kind = OptimizerKind::sgd;
  } else if (kind == "sgd_momentum") {
    spec.kind = OptimizerKind::sgd_momentum;
  } else if (kind == "adam") {
    spec.kind = OptimizerKind::adam;
  } else {
    throw ConfigError(fmt::format("unknown optimizer.kind '{}' (sgd, sgd_momentum, adam)", kind));
  }
  const double lr = config.get_or<double>("lr", 1e-3);
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError(fmt::format("lr must be finite and >= 0, got {}", lr));
  spec.momentum = opt.get_or<double>("momentum", spec.momentum);
  spec.beta1 = opt.get_or<double>("beta1", spec.beta1);
  spec.beta2 = opt.get_or<double>("beta2", spec.beta2);
  spec.eps = opt.get_or<double>("eps", spec.eps);
  for (double beta : {spec.momentum, spec.beta1, spec.beta2}) {
    if (!(beta >= 0.0 && beta < 1.0)) throw ConfigError(fmt::format("optimizer decay {} outside [0, 1)", beta));
  }
  if (!(spec.eps > 0.0)) throw ConfigError("optimizer.eps must be > 0");
  if (opt.has("clip_norm") && !opt.at("clip_norm").is_null()) {
    const double clip = opt.get<double>("clip_norm");
    if (!(clip > 0.0)) throw ConfigError("optimizer.clip_norm must be > 0");
    spec.clip_norm = clip;
  }
  const auto schedule = opt.get_or<std::string>("schedule", "constant");
  if (schedule == "constant") {
    spec.lr = constant_schedule(lr);
  } else if (schedule == "cosine") {
    const auto warmup = opt.get_or<std::int64_t>("warmup_steps", 0);
    const double final_fraction = opt.get_or<double>("final_fraction", 0.0);
    if (warmup < 0 || !(final_fraction >= 0.0 && final_fraction <= 1.0)) {
      throw ConfigError("cosine schedule needs warmup_steps >= 0 and final_fraction in [0, 1]");
    }
    spec.lr = cosine_schedule(lr, config.get_or<std::int64_t>("total_steps", 0), warmup, final_fraction);
  } else {
    throw ConfigError(fmt::format("unknown optimizer.schedule '{}' (constant, cosine)", schedule));
  }
  return spec;
}

TensorMap init_optimizer_state(const OptimizerSpec& spec, const TensorMap& params) {
  TensorMap state;
  for (const auto& slot : slot_names(spec.kind)) {
    for (const auto& [name, value] : params) {
      state.emplace(slot_key(slot, name), Tensor::zeros(value.shape(), value.dtype()));
    }
  }
  return state;
}

double global_norm(const TensorMap& grads) {
  double total = 0.0;
  for (const auto& [name, g] : grads) {
    for (double x : g.to_doubles()) total += x * x;
  }
  return std::sqrt(total);
}

OptimizerUpdate apply_optimizer(const OptimizerSpec& spec, std::int64_t step, const TensorMap& params,
                                const TensorMap& grads, const TensorMap& opt_state) {
  const double lr = spec.lr(step);
  if (!(lr >= 0.0) || !std::isfinite(lr)) {
    throw ValueError(fmt::format("learning rate at step {} is {}", step, lr));
  }
  double scale = 1.0;
  if (spec.clip_norm) {
    const double norm = global_norm(grads);
    if (norm > *spec.clip_norm) scale = *spec.clip_norm / norm;
  }
  const double t = static_cast<double>(step + 1);
  const double bias1 = 1.0 - std::pow(spec.beta1, t);
  const double bias2 = 1.0 - std::pow(spec.beta2, t);

  OptimizerUpdate out;
  for (const auto& [name, param] : params) {
    const auto& grad = lookup(grads, name, "gradients");
    if (grad.shape() != param.shape()) {
      throw ShapeError(fmt::format("gradient '{}' has shape {}, parameter {}", name, to_string(grad.shape()),
                                   to_string(param.shape())));
    }
    auto p = param.to_doubles();
    auto g = grad.to_doubles();
    for (auto& x : g) x *= scale;
    switch (spec.kind) {
      case OptimizerKind::sgd:
        for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * g[i];
        break;
      case OptimizerKind::sgd_momentum: {
        const auto key = slot_key("momentum", name);
        auto mu = lookup(opt_state, key, "optimizer state").to_doubles();
        for (std::size_t i = 0; i < p.size(); ++i) {
          mu[i] = spec.momentum * mu[i] + g[i];
          p[i] -= lr * mu[i];
        }
        out.opt_state.emplace(key, Tensor::from_doubles(param.shape(), mu, param.dtype()));
        break;
      }
      case OptimizerKind::adam: {
        const auto mk = slot_key("m", name);
        const auto vk = slot_key("v", name);
        auto m = lookup(opt_state, mk, "optimizer state").to_doubles();
        auto v = lookup(opt_state, vk, "optimizer state").to_doubles();
        for (std::size_t i = 0; i < p.size(); ++i) {
          m[i] = spec.beta1 * m[i] + (1.0 - spec.beta1) * g[i];
          v[i] = spec.beta2 * v[i] + (1.0 - spec.beta2) * g[i] * g[i];
          p[i] -= lr * (m[i] / bias1) / (std::sqrt(v[i] / bias2) + spec.eps);
        }
        out.opt_state.emplace(mk, Tensor::from_doubles(param.shape(), m, param.dtype()));
        out.opt_state.emplace(vk, Tensor::from_doubles(param.shape(), v, param.dtype()));
        break;
      }
    }
    out.params.emplace(name, Tensor::from_doubles(param.shape(), p, param.dtype()));
  }
  if (out.opt_state.size() != opt_state.size()) {
    throw KeyError("optimizer state has entries for unknown parameters");
  }
  return out;
}

}  // namespace prism
