// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "prism/tensor/tensor.hpp"

namespace prism {

/// Counter-based splittable key (Threefry-2x64, 20 rounds).
///
/// All randomness is a pure function of (key, counter), so streams derived
/// for different hosts or devices do not depend on execution order.
struct RngKey {
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;

  static RngKey from_seed(std::uint64_t seed) { return RngKey{0, seed}; }

  friend bool operator==(const RngKey&, const RngKey&) = default;
};

/// One Threefry-2x64-20 block: encrypts `counter` under `key`.
std::array<std::uint64_t, 2> threefry2x64(const RngKey& key,
                                          std::array<std::uint64_t, 2> counter);

/// `n` pairwise-distinct child keys. Throws ValueError when n == 0.
std::vector<RngKey> rng_split(const RngKey& key, std::int64_t n);

/// Child key indexed by `data`.
RngKey fold_in(const RngKey& key, std::uint64_t data);

/// Uniform samples in [low, high).
Tensor rng_uniform(const RngKey& key, const Shape& shape, DType dtype = DType::f32,
                   double low = 0.0, double high = 1.0);
/// Standard normal samples (Box-Muller).
Tensor rng_normal(const RngKey& key, const Shape& shape, DType dtype = DType::f32);
/// Normal samples with the given stddev, resampled outside ±2 stddev.
Tensor rng_truncated_normal(const RngKey& key, const Shape& shape, double stddev,
                            DType dtype = DType::f32);

/// Random permutation of [0, n) (Fisher-Yates).
std::vector<std::int64_t> rng_permutation(const RngKey& key, std::int64_t n);

/// Scalar helpers for generators that draw a few values at a time.
double rng_uniform_at(const RngKey& key, std::uint64_t index);
double rng_normal_at(const RngKey& key, std::uint64_t index);

}  // namespace prism
