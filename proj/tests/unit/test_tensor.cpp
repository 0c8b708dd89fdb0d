// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "gradcheck.hpp"
#include "prism/tensor/autodiff.hpp"
#include "prism/tensor/ops.hpp"
#include "prism/tensor/rng.hpp"

using namespace prism;

namespace {

Tensor f64(const Shape& shape, std::vector<double> v) { return Tensor(shape, std::move(v)); }

void check_close(const Tensor& a, const std::vector<double>& expected, double tol) {
  const auto v = a.to_doubles();
  REQUIRE(v.size() == expected.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    CHECK(std::abs(v[i] - expected[i]) <= tol * std::max(1.0, std::abs(expected[i])));
  }
}

}  // namespace

TEST_CASE("tensor construction checks buffer length") {
  CHECK_THROWS_AS(Tensor(Shape{2, 2}, std::vector<float>{1, 2, 3}), ShapeError);
  const Tensor s = Tensor::scalar(3.0, DType::f64);
  CHECK(s.numel() == 1);
  CHECK(s.ndim() == 0);
  CHECK(s.item() == 3.0);
  CHECK_THROWS_AS((void)s.data<float>(), DTypeError);
}

TEST_CASE("elementwise examples") {
  const Tensor x = f64({3}, {-1.5, 0.25, 2.0});
  CHECK(add(x, zeros_like(x)).equals(x));
  check_close(relu(f64({3}, {-1, 0, 2})), {0, 0, 2}, 0);
  CHECK(sigmoid(Tensor::scalar(0.0, DType::f64)).item() == 0.5);
  // Saturated sigmoid stays finite in both directions.
  check_close(sigmoid(f64({2}, {-800, 800})), {0, 1}, 0);
  check_close(gelu(f64({1}, {1.0})),
              {0.5 * (1 + std::tanh(std::sqrt(2 / std::numbers::pi) * (1 + 0.044715)))}, 1e-15);
}

TEST_CASE("binary ops broadcast over trailing dimensions") {
  const Tensor a = f64({2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor row = f64({3}, {10, 20, 30});
  const Tensor col = f64({2, 1}, {100, 200});
  check_close(add(a, row), {11, 22, 33, 14, 25, 36}, 0);
  check_close(add(a, col), {101, 102, 103, 204, 205, 206}, 0);
  check_close(mul(col, row), {1000, 2000, 3000, 2000, 4000, 6000}, 0);
  CHECK(add(col, row).shape() == Shape{2, 3});
  CHECK_THROWS_AS(add(a, f64({2}, {1, 2})), ShapeError);
  CHECK_THROWS_AS(add(a, Tensor::zeros({2, 3}, DType::f32)), DTypeError);
}

TEST_CASE("matmul examples") {
  const Tensor eye = f64({2, 2}, {1, 0, 0, 1});
  const Tensor x = f64({2, 3}, {1, -2, 3, 4, 5, -6});
  CHECK(matmul(eye, x).equals(x));
  check_close(matmul(f64({2, 2}, {1, 2, 3, 4}), f64({2, 1}, {5, 6})), {17, 39}, 0);
  CHECK_THROWS_AS(matmul(x, x), ShapeError);
}

TEST_CASE("matmul matches a triple-loop reference") {
  const RngKey key = RngKey::from_seed(7);
  const Tensor a = rng_normal(fold_in(key, 0), {4, 5}, DType::f64);
  const Tensor b = rng_normal(fold_in(key, 1), {5, 3}, DType::f64);
  const auto av = a.to_doubles();
  const auto bv = b.to_doubles();
  std::vector<double> ref(12, 0.0);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 3; ++j)
      for (int p = 0; p < 5; ++p) ref[i * 3 + j] += av[i * 5 + p] * bv[p * 3 + j];
  check_close(matmul(a, b), ref, 1e-12);

  // Batched with a broadcast batch axis on the right operand.
  const Tensor a3 = rng_normal(fold_in(key, 2), {2, 4, 5}, DType::f64);
  const Tensor c = matmul(a3, b);
  CHECK(c.shape() == Shape{2, 4, 3});
  check_close(slice(c, 0, 1, 2).with_shape({4, 3}),
              matmul(slice(a3, 0, 1, 2).with_shape({4, 5}), b).to_doubles(), 1e-12);
}

TEST_CASE("softmax examples and invariants") {
  check_close(softmax(f64({2}, {0, 0})), {0.5, 0.5}, 0);
  check_close(softmax(f64({2}, {std::log(2.0), 0})), {2.0 / 3.0, 1.0 / 3.0}, 1e-15);
  const Tensor x = rng_normal(RngKey::from_seed(3), {5, 7}, DType::f64) * 4.0;
  const Tensor y = softmax(x, -1);
  const Tensor shifted = softmax(x + 123.0, -1);
  check_close(shifted, y.to_doubles(), 1e-12);
  const auto rows = sum(y, {1}).to_doubles();
  for (double r : rows) CHECK(std::abs(r - 1.0) < 1e-12);
  for (double v : y.to_doubles()) CHECK((v > 0.0 && v < 1.0));
  // Softmax along a non-trailing axis.
  const auto cols = sum(softmax(x, 0), {0}).to_doubles();
  for (double c : cols) CHECK(std::abs(c - 1.0) < 1e-12);
  check_close(exp(log_softmax(x, 1)), y.to_doubles(), 1e-12);
}

TEST_CASE("reductions") {
  const Tensor x = f64({2, 3, 2}, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
  check_close(sum(x), {78}, 0);
  check_close(sum(x, {1}), {9, 12, 27, 30}, 0);
  check_close(sum(x, {0, 2}), {1 + 2 + 7 + 8, 3 + 4 + 9 + 10, 5 + 6 + 11 + 12}, 0);
  CHECK(sum(x, {1}, true).shape() == Shape{2, 1, 2});
  check_close(mean(x, {-1}), {1.5, 3.5, 5.5, 7.5, 9.5, 11.5}, 0);
  check_close(sum_to(x, {3, 1}), {1 + 2 + 7 + 8, 3 + 4 + 9 + 10, 5 + 6 + 11 + 12}, 0);
  check_close(max(x, 1), {5, 6, 11, 12}, 0);
  check_close(argmax(f64({2, 3}, {1, 3, 3, 9, 0, 2}), 1), {1, 0}, 0);
}

TEST_CASE("shape ops") {
  const Tensor x = f64({2, 3}, {1, 2, 3, 4, 5, 6});
  check_close(transpose(x, {1, 0}), {1, 4, 2, 5, 3, 6}, 0);
  check_close(slice(x, 1, 1, 3), {2, 3, 5, 6}, 0);
  check_close(concat({x, x}, 0), {1, 2, 3, 4, 5, 6, 1, 2, 3, 4, 5, 6}, 0);
  check_close(concat({x, slice(x, 1, 0, 1)}, 1), {1, 2, 3, 1, 4, 5, 6, 4}, 0);
  check_close(pad(x, 0, 1, 0), {0, 0, 0, 1, 2, 3, 4, 5, 6}, 0);
  CHECK(reshape(x, {3, -1}).shape() == Shape{3, 2});
  CHECK_THROWS_AS(reshape(x, {4, -1}), ShapeError);
  check_close(broadcast_to(f64({3}, {1, 2, 3}), {2, 3}), {1, 2, 3, 1, 2, 3}, 0);
  check_close(one_hot(Tensor(Shape{3}, std::vector<std::int32_t>{2, 0, 5}), 3, DType::f64),
              {0, 0, 1, 1, 0, 0, 0, 0, 0}, 0);
}

TEST_CASE("grad examples") {
  TensorMap p{{"x", Tensor::scalar(3.0, DType::f64)}};
  auto g = grad([](const TensorMap& m) { return square(m.at("x")); }, p);
  CHECK(g.at("x").item() == doctest::Approx(6.0).epsilon(1e-15));

  // f(W) = sum(W x): dW[i, j] = x[j].
  const Tensor x = f64({3, 1}, {0.5, -1.0, 2.0});
  TensorMap w{{"W", rng_normal(RngKey::from_seed(1), {2, 3}, DType::f64)}};
  auto f = [&](const TensorMap& m) { return sum(matmul(m.at("W"), x)); };
  auto gw = grad(f, w);
  check_close(gw.at("W"), {0.5, -1.0, 2.0, 0.5, -1.0, 2.0}, 1e-15);
  CHECK(testing::check_gradients(f, w).rel_error < 1e-6);

  CHECK_THROWS_AS(grad([](const TensorMap& m) { return m.at("W") * 2.0; }, w), ShapeError);

  // Ties send the whole gradient to the first maximum.
  TensorMap t{{"x", f64({2, 3}, {1, 4, 4, 2, 0, 2})}};
  check_close(grad([](const TensorMap& m) { return sum(max(m.at("x"), 1)); }, t).at("x"), {0, 1, 0, 1, 0, 0},
              0);
}

TEST_CASE("unused parameters receive zero gradients") {
  TensorMap p{{"a", Tensor::scalar(2.0, DType::f64)}, {"b", Tensor::ones({2}, DType::f64)}};
  auto g = grad([](const TensorMap& m) { return m.at("a") * 5.0; }, p);
  check_close(g.at("a"), {5.0}, 0);
  check_close(g.at("b"), {0.0, 0.0}, 0);
}

TEST_CASE("nested tapes treat outer values as constants") {
  autodiff::Tape outer;
  Tensor x = outer.watch(Tensor::scalar(2.0, DType::f64));
  Tensor y;
  {
    autodiff::Tape inner;
    Tensor z = inner.watch(Tensor::scalar(3.0, DType::f64));
    Tensor prod = mul(x, z);
    auto gz = inner.gradient(prod, {z});
    CHECK(gz[0].item() == 2.0);
  }
  y = mul(x, x);
  auto gx = outer.gradient(y, {x});
  CHECK(gx[0].item() == 4.0);
}

TEST_CASE("ops are referentially transparent") {
  const RngKey key = RngKey::from_seed(11);
  const Tensor a = rng_normal(fold_in(key, 0), {6, 9}, DType::f32);
  const Tensor b = rng_normal(fold_in(key, 1), {9, 5}, DType::f32);
  CHECK(matmul(a, b).equals(matmul(a, b)));
  CHECK(softmax(a).equals(softmax(a)));
  CHECK(gelu(a).equals(gelu(a)));
}

TEST_CASE("conv2d pointwise identity and valid geometry") {
  const Tensor x = rng_normal(RngKey::from_seed(5), {2, 4, 4, 1}, DType::f64);
  CHECK(conv2d(x, Tensor::ones({1, 1, 1, 1}, DType::f64)).equals(x));
  CHECK(conv2d(x, Tensor::ones({3, 3, 1, 2}, DType::f64), 1, Padding::valid).shape() ==
        Shape{2, 2, 2, 2});
  CHECK(conv2d(x, Tensor::ones({3, 3, 1, 2}, DType::f64), 2, Padding::same).shape() ==
        Shape{2, 2, 2, 2});
  CHECK_THROWS_AS(conv2d(x, Tensor::ones({3, 3, 2, 2}, DType::f64)), ShapeError);
}

TEST_CASE("pooling and upsampling") {
  const Tensor x = f64({1, 2, 2, 1}, {1, 4, 3, 2});
  check_close(max_pool2d(x, 2, 2), {4}, 0);
  check_close(avg_pool2d(x, 2, 2), {2.5}, 0);
  check_close(upsample_nearest(f64({1, 1, 2, 1}, {1, 2}), 2), {1, 1, 2, 2, 1, 1, 2, 2}, 0);
}

TEST_CASE("gradients of every op match finite differences") {
  const RngKey key = RngKey::from_seed(2024);
  using testing::check_gradients;
  using testing::random_away_from_zero;
  using testing::weighted_sum;
  int index = 0;
  auto probe = [&](const Shape& shape, auto op) {
    const RngKey k = fold_in(key, static_cast<std::uint64_t>(index++));
    TensorMap p{{"x", random_away_from_zero(fold_in(k, 0), shape)}};
    auto f = [&](const TensorMap& m) { return weighted_sum(op(m.at("x")), fold_in(k, 1)); };
    return check_gradients(f, p).rel_error;
  };
  CHECK(probe({3, 4}, [](const Tensor& x) { return relu(x); }) < 1e-6);
  CHECK(probe({3, 4}, [](const Tensor& x) { return gelu(x); }) < 1e-6);
  CHECK(probe({3, 4}, [](const Tensor& x) { return exp(x); }) < 1e-6);
  CHECK(probe({3, 4}, [](const Tensor& x) { return log(abs(x)); }) < 1e-6);
  CHECK(probe({3, 4}, [](const Tensor& x) { return sigmoid(x); }) < 1e-6);
  CHECK(probe({3, 4}, [](const Tensor& x) { return tanh(x); }) < 1e-6);
  CHECK(probe({3, 4}, [](const Tensor& x) { return sqrt(abs(x)); }) < 1e-6);
  CHECK(probe({2, 3, 4}, [](const Tensor& x) { return softmax(x, 1); }) < 1e-6);
  CHECK(probe({2, 3, 4}, [](const Tensor& x) { return log_softmax(x, -1); }) < 1e-6);
  CHECK(probe({2, 3, 4}, [](const Tensor& x) { return mean(x, {0, 2}, true) * x; }) < 1e-6);
  CHECK(probe({2, 3, 4}, [](const Tensor& x) { return transpose(x, {2, 0, 1}); }) < 1e-6);
  CHECK(probe({2, 3, 4}, [](const Tensor& x) {
          return concat({pad(slice(x, 1, 0, 1), 1, 0, 1), pad(slice(x, 1, 1, 3), 2, 1, 2)}, 2);
        }) < 1e-6);
  CHECK(probe({3, 4}, [](const Tensor& x) { return matmul(x, swap_last(x)); }) < 1e-6);
  CHECK(probe({3, 4}, [](const Tensor& x) { return div(x, add(square(x), scalar_like(x, 1))); }) <
        1e-6);
  CHECK(probe({1, 4, 4, 2}, [](const Tensor& x) { return max_pool2d(x, 2, 2); }) < 1e-6);
  CHECK(probe({1, 4, 4, 2}, [](const Tensor& x) { return avg_pool2d(x, 2, 2); }) < 1e-6);
  CHECK(probe({1, 2, 2, 2}, [](const Tensor& x) { return upsample_nearest(x, 2); }) < 1e-6);
  CHECK(probe({3, 1}, [](const Tensor& x) { return broadcast_to(x, {2, 3, 4}); }) < 1e-6);
  CHECK(probe({2, 3, 4}, [](const Tensor& x) { return max(x, 1); }) < 1e-6);

  // conv2d with respect to both input and kernel.
  TensorMap p{{"x", rng_normal(fold_in(key, 900), {2, 5, 5, 2}, DType::f64)},
              {"k", rng_normal(fold_in(key, 901), {3, 3, 2, 3}, DType::f64)}};
  for (int stride : {1, 2}) {
    for (Padding pad_mode : {Padding::same, Padding::valid}) {
      auto f = [&](const TensorMap& m) {
        return weighted_sum(conv2d(m.at("x"), m.at("k"), stride, pad_mode), fold_in(key, 902));
      };
      CHECK(check_gradients(f, p).rel_error < 1e-6);
    }
  }
}

TEST_CASE("rng determinism and moments") {
  const RngKey k = RngKey::from_seed(0);
  const auto a = rng_split(k, 2);
  const auto b = rng_split(k, 2);
  CHECK(a == b);
  CHECK(a[0] != a[1]);
  CHECK_THROWS_AS(rng_split(k, 0), ValueError);

  const auto many = rng_split(k, 1000);
  for (std::size_t i = 0; i < many.size(); ++i)
    for (std::size_t j = i + 1; j < many.size(); ++j) REQUIRE(many[i] != many[j]);

  const auto u = rng_uniform(k, {10000}, DType::f64).to_doubles();
  double mean_u = 0.0;
  for (double v : u) {
    REQUIRE((v >= 0.0 && v < 1.0));
    mean_u += v;
  }
  mean_u /= 10000.0;
  CHECK((mean_u >= 0.48 && mean_u <= 0.52));

  const auto z = rng_normal(k, {10000}, DType::f64).to_doubles();
  double m = 0.0, m2 = 0.0;
  for (double v : z) m += v;
  m /= 10000.0;
  for (double v : z) m2 += (v - m) * (v - m);
  const double var = m2 / 9999.0;
  CHECK((var >= 0.94 && var <= 1.06));

  // Sibling streams are uncorrelated.
  const auto s0 = rng_uniform(a[0], {10000}, DType::f64).to_doubles();
  const auto s1 = rng_uniform(a[1], {10000}, DType::f64).to_doubles();
  double m0 = 0, m1 = 0;
  for (int i = 0; i < 10000; ++i) {
    m0 += s0[i];
    m1 += s1[i];
  }
  m0 /= 1e4;
  m1 /= 1e4;
  double cov = 0, v0 = 0, v1 = 0;
  for (int i = 0; i < 10000; ++i) {
    cov += (s0[i] - m0) * (s1[i] - m1);
    v0 += (s0[i] - m0) * (s0[i] - m0);
    v1 += (s1[i] - m1) * (s1[i] - m1);
  }
  CHECK(std::abs(cov / std::sqrt(v0 * v1)) < 0.05);

  const auto t = rng_truncated_normal(k, {5000}, 0.02, DType::f64).to_doubles();
  for (double v : t) REQUIRE(std::abs(v) <= 0.04);
}

TEST_CASE("threefry known-answer vector") {
  // Random123 reference: threefry2x64_20 with zero key and counter.
  const auto out = threefry2x64(RngKey{0, 0}, {0, 0});
  CHECK(out[0] == 0xc2b6e3a8c2c69865ULL);
  CHECK(out[1] == 0x6f81ed42f350084dULL);
}

TEST_CASE("permutation is a bijection") {
  const auto p = rng_permutation(RngKey::from_seed(9), 100);
  std::vector<bool> seen(100, false);
  for (auto v : p) {
    REQUIRE((v >= 0 && v < 100));
    seen[static_cast<std::size_t>(v)] = true;
  }
  for (bool s : seen) CHECK(s);
}
