// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#include "prism/tensor/kernels.hpp"

namespace prism::kernels::scalar {
namespace {

template <class T>
void gemm(std::int64_t m, std::int64_t n, std::int64_t k, const T* a, const T* b, T* c) {
  for (std::int64_t i = 0; i < m; ++i) {
    T* crow = c + i * n;
    for (std::int64_t j = 0; j < n; ++j) {
      crow[j] = T(0);
    }
    for (std::int64_t p = 0; p < k; ++p) {
      const T aip = a[i * k + p];
      const T* brow = b + p * n;
      for (std::int64_t j = 0; j < n; ++j) {
        crow[j] += aip * brow[j];
      }
    }
  }
}

template <class T>
void add(std::int64_t n, const T* a, const T* b, T* out) {
  for (std::int64_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

template <class T>
void sub(std::int64_t n, const T* a, const T* b, T* out) {
  for (std::int64_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

template <class T>
void mul(std::int64_t n, const T* a, const T* b, T* out) {
  for (std::int64_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

template <class T>
void axpy(std::int64_t n, T alpha, const T* x, T* y) {
  for (std::int64_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <class T>
void relu(std::int64_t n, const T* x, T* out) {
  for (std::int64_t i = 0; i < n; ++i) out[i] = x[i] <= T(0) ? T(0) : x[i];  // NaN passes through
}

template <class T>
void relu_grad(std::int64_t n, const T* x, const T* g, T* out) {
  for (std::int64_t i = 0; i < n; ++i) out[i] = x[i] > T(0) ? g[i] : T(0);
}

template <class T>
constexpr KernelTable<T> kTable{&gemm<T>, &add<T>,  &sub<T>,      &mul<T>,
                                &axpy<T>, &relu<T>, &relu_grad<T>};

}  // namespace

template <class T>
const KernelTable<T>& table() {
  return kTable<T>;
}

template const KernelTable<float>& table<float>();
template const KernelTable<double>& table<double>();

}  // namespace prism::kernels::scalar
