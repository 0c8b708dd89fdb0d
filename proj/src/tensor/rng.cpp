// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#include "prism/tensor/rng.hpp"

#include <cmath>
#include <numbers>

namespace prism {
namespace {

constexpr std::uint64_t kParity = 0x1BD11BDAA9FC1A22ULL;
constexpr int kRotations[8] = {16, 42, 12, 31, 16, 32, 24, 21};

// Counter-word tags separating the derivation domains of one key.
constexpr std::uint64_t kSplitTag = 0x73706c6974000000ULL;
constexpr std::uint64_t kFoldTag = 0x666f6c6400000000ULL;
constexpr std::uint64_t kPermTag = 0x7065726d00000000ULL;

constexpr std::uint64_t rotl(std::uint64_t x, int r) { return (x << r) | (x >> (64 - r)); }

double to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * (1.0 / 9007199254740992.0);
}

double normal_from(const RngKey& key, std::uint64_t index, std::uint64_t attempt) {
  const auto block = threefry2x64(key, {index, attempt});
  const double u1 = 1.0 - to_unit(block[0]);  // (0, 1]
  const double u2 = to_unit(block[1]);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

std::array<std::uint64_t, 2> threefry2x64(const RngKey& key, std::array<std::uint64_t, 2> counter) {
  const std::uint64_t ks[3] = {key.hi, key.lo, kParity ^ key.hi ^ key.lo};
  std::uint64_t x0 = counter[0] + ks[0];
  std::uint64_t x1 = counter[1] + ks[1];
  for (int round = 0; round < 20; ++round) {
    x0 += x1;
    x1 = rotl(x1, kRotations[round % 8]);
    x1 ^= x0;
    if (round % 4 == 3) {
      const int s = round / 4 + 1;
      x0 += ks[s % 3];
      x1 += ks[(s + 1) % 3] + static_cast<std::uint64_t>(s);
    }
  }
  return {x0, x1};
}

std::vector<RngKey> rng_split(const RngKey& key, std::int64_t n) {
  if (n < 1) {
    throw ValueError("rng_split: n must be >= 1");
  }
  std::vector<RngKey> keys;
  keys.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const auto block = threefry2x64(key, {static_cast<std::uint64_t>(i), kSplitTag});
    keys.push_back(RngKey{block[0], block[1]});
  }
  return keys;
}

RngKey fold_in(const RngKey& key, std::uint64_t data) {
  const auto block = threefry2x64(key, {data, kFoldTag});
  return RngKey{block[0], block[1]};
}

double rng_uniform_at(const RngKey& key, std::uint64_t index) {
  return to_unit(threefry2x64(key, {index, 0})[0]);
}

double rng_normal_at(const RngKey& key, std::uint64_t index) { return normal_from(key, index, 0); }

Tensor rng_uniform(const RngKey& key, const Shape& shape, DType dtype, double low, double high) {
  const auto n = static_cast<std::size_t>(numel(shape));
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    values[i] = low + (high - low) * rng_uniform_at(key, i);
  }
  return Tensor::from_doubles(shape, values, dtype);
}

Tensor rng_normal(const RngKey& key, const Shape& shape, DType dtype) {
  const auto n = static_cast<std::size_t>(numel(shape));
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) values[i] = normal_from(key, i, 0);
  return Tensor::from_doubles(shape, values, dtype);
}

Tensor rng_truncated_normal(const RngKey& key, const Shape& shape, double stddev, DType dtype) {
  const auto n = static_cast<std::size_t>(numel(shape));
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    double z = normal_from(key, i, 0);
    for (std::uint64_t attempt = 1; std::abs(z) > 2.0; ++attempt) {
      z = normal_from(key, i, attempt);
    }
    values[i] = stddev * z;
  }
  return Tensor::from_doubles(shape, values, dtype);
}

std::vector<std::int64_t> rng_permutation(const RngKey& key, std::int64_t n) {
  std::vector<std::int64_t> perm(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  for (std::int64_t i = n - 1; i > 0; --i) {
    const auto bits = threefry2x64(key, {static_cast<std::uint64_t>(i), kPermTag})[0];
    // Multiply-shift maps 64 random bits to [0, i] with negligible bias.
    const auto j = static_cast<std::int64_t>(
        (static_cast<unsigned __int128>(bits) * static_cast<unsigned __int128>(i + 1)) >> 64);
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  return perm;
}

}  // namespace prism
