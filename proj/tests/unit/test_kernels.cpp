// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

// Scalar reference kernels against every SIMD variant built for this target.

#include <cmath>
#include <cstring>
#include <limits>
#include <vector>

#include "doctest.h"
#include "prism/tensor/kernels.hpp"
#include "prism/tensor/ops.hpp"
#include "prism/tensor/rng.hpp"

using namespace prism;
using namespace prism::kernels;

namespace {

template <class T>
std::vector<T> random_vec(std::uint64_t seed, std::int64_t n) {
  auto v = rng_uniform(RngKey::from_seed(seed), {n}, DType::f64, -2.0, 2.0).to_doubles();
  return std::vector<T>(v.begin(), v.end());
}

template <class T>
void check_equivalence(const KernelTable<T>& ref, const KernelTable<T>& simd) {
  const double gemm_tol = std::is_same_v<T, float> ? 1e-5 : 1e-13;
  for (std::int64_t n : {0, 1, 3, 4, 7, 8, 9, 15, 16, 31, 33, 64, 100}) {
    const auto a = random_vec<T>(1 + n, n);
    const auto b = random_vec<T>(1000 + n, n);
    std::vector<T> r(n), s(n);
    ref.add(n, a.data(), b.data(), r.data());
    simd.add(n, a.data(), b.data(), s.data());
    CHECK(r == s);
    ref.sub(n, a.data(), b.data(), r.data());
    simd.sub(n, a.data(), b.data(), s.data());
    CHECK(r == s);
    ref.mul(n, a.data(), b.data(), r.data());
    simd.mul(n, a.data(), b.data(), s.data());
    CHECK(r == s);
    ref.relu(n, a.data(), r.data());
    simd.relu(n, a.data(), s.data());
    CHECK(r == s);
    ref.relu_grad(n, a.data(), b.data(), r.data());
    simd.relu_grad(n, a.data(), b.data(), s.data());
    CHECK(r == s);
    std::vector<T> ry = b, sy = b;
    ref.axpy(n, T(0.75), a.data(), ry.data());
    simd.axpy(n, T(0.75), a.data(), sy.data());
    CHECK(ry == sy);
  }
  for (auto [m, n, k] : {std::array<std::int64_t, 3>{1, 1, 1}, {3, 5, 7}, {4, 8, 16},
                         {5, 33, 9}, {7, 40, 3}, {2, 65, 31}, {16, 64, 64}}) {
    const auto a = random_vec<T>(m * 100 + k, m * k);
    const auto b = random_vec<T>(n * 100 + k + 7, k * n);
    std::vector<T> r(m * n), s(m * n);
    ref.gemm(m, n, k, a.data(), b.data(), r.data());
    simd.gemm(m, n, k, a.data(), b.data(), s.data());
    for (std::int64_t i = 0; i < m * n; ++i) {
      CHECK(std::abs(double(r[i]) - double(s[i])) <= gemm_tol * (1.0 + std::abs(double(r[i]))));
    }
  }
}

template <class T>
void check_special_values(const KernelTable<T>& ref, const KernelTable<T>& simd) {
  const T inf = std::numeric_limits<T>::infinity();
  const T nan = std::numeric_limits<T>::quiet_NaN();
  const std::vector<T> x{nan, T(-0.0), T(0.0), inf, -inf, T(1), T(-1), nan, T(-0.0), T(3)};
  const auto n = static_cast<std::int64_t>(x.size());
  std::vector<T> r(x.size()), s(x.size());
  ref.relu(n, x.data(), r.data());
  simd.relu(n, x.data(), s.data());
  CHECK(std::memcmp(r.data(), s.data(), r.size() * sizeof(T)) == 0);
  CHECK(std::isnan(r[0]));
  CHECK(std::isnan(r[7]));
  CHECK_FALSE(std::signbit(r[1]));
  CHECK(r[3] == inf);
  CHECK(r[4] == T(0));
}

}  // namespace

TEST_CASE("relu propagates NaN and agrees bitwise on special values") {
  check_special_values(table<float>(Isa::scalar), table<float>(Isa::scalar));
  check_special_values(table<double>(Isa::scalar), table<double>(Isa::scalar));
  if (isa_supported(Isa::avx2)) {
    check_special_values(table<float>(Isa::scalar), table<float>(Isa::avx2));
    check_special_values(table<double>(Isa::scalar), table<double>(Isa::avx2));
  }
}

TEST_CASE("scalar table is always available") {
  CHECK(isa_supported(Isa::scalar));
  CHECK(&table<float>(Isa::scalar) == &scalar::table<float>());
}

TEST_CASE("simd kernels match the scalar reference") {
  if (!isa_supported(Isa::avx2)) {
    MESSAGE("AVX2 not available; only the scalar path is exercised");
    CHECK_THROWS_AS(table<float>(Isa::avx2), ValueError);
    return;
  }
  check_equivalence(table<float>(Isa::scalar), table<float>(Isa::avx2));
  check_equivalence(table<double>(Isa::scalar), table<double>(Isa::avx2));
}

TEST_CASE("ops give equivalent results under both ISAs") {
  const Isa saved = active_isa();
  const RngKey key = RngKey::from_seed(42);
  const Tensor a = rng_normal(fold_in(key, 0), {3, 17, 19}, DType::f32);
  const Tensor b = rng_normal(fold_in(key, 1), {19, 21}, DType::f32);
  const Tensor x = rng_normal(fold_in(key, 2), {2, 6, 6, 3}, DType::f32);
  const Tensor k = rng_normal(fold_in(key, 3), {3, 3, 3, 5}, DType::f32);
  set_active_isa(Isa::scalar);
  const Tensor mm_ref = matmul(a, b);
  const Tensor conv_ref = conv2d(x, k);
  const Tensor add_ref = relu(add(a, slice(a, 0, 1, 2)));
  for (Isa isa : {Isa::scalar, Isa::avx2}) {
    if (!isa_supported(isa)) continue;
    set_active_isa(isa);
    const auto mm = matmul(a, b).to_doubles();
    const auto ref = mm_ref.to_doubles();
    for (std::size_t i = 0; i < mm.size(); ++i) CHECK(std::abs(mm[i] - ref[i]) < 1e-4);
    const auto cv = conv2d(x, k).to_doubles();
    const auto cref = conv_ref.to_doubles();
    for (std::size_t i = 0; i < cv.size(); ++i) CHECK(std::abs(cv[i] - cref[i]) < 1e-4);
    CHECK(relu(add(a, slice(a, 0, 1, 2))).equals(add_ref));
  }
  set_active_isa(saved);
}
