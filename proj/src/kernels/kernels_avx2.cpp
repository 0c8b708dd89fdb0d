// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

// Compiled with -mavx2 -mfma. Keep this translation unit free of library
// templates so no AVX2-encoded inline function can leak into other objects.

#include "prism/tensor/kernels.hpp"

#if PRISM_KERNELS_AVX2

#include <immintrin.h>

namespace prism::kernels::avx2 {
namespace {

void gemm_f32(std::int64_t m, std::int64_t n, std::int64_t k, const float* a, const float* b,
              float* c) {
  for (std::int64_t i = 0; i < m; ++i) {
    const float* arow = a + i * k;
    float* crow = c + i * n;
    std::int64_t j = 0;
    for (; j + 32 <= n; j += 32) {
      __m256 c0 = _mm256_setzero_ps();
      __m256 c1 = _mm256_setzero_ps();
      __m256 c2 = _mm256_setzero_ps();
      __m256 c3 = _mm256_setzero_ps();
      for (std::int64_t p = 0; p < k; ++p) {
        const __m256 av = _mm256_broadcast_ss(arow + p);
        const float* brow = b + p * n + j;
        c0 = _mm256_fmadd_ps(av, _mm256_loadu_ps(brow), c0);
        c1 = _mm256_fmadd_ps(av, _mm256_loadu_ps(brow + 8), c1);
        c2 = _mm256_fmadd_ps(av, _mm256_loadu_ps(brow + 16), c2);
        c3 = _mm256_fmadd_ps(av, _mm256_loadu_ps(brow + 24), c3);
      }
      _mm256_storeu_ps(crow + j, c0);
      _mm256_storeu_ps(crow + j + 8, c1);
      _mm256_storeu_ps(crow + j + 16, c2);
      _mm256_storeu_ps(crow + j + 24, c3);
    }
    for (; j + 8 <= n; j += 8) {
      __m256 c0 = _mm256_setzero_ps();
      for (std::int64_t p = 0; p < k; ++p) {
        c0 = _mm256_fmadd_ps(_mm256_broadcast_ss(arow + p), _mm256_loadu_ps(b + p * n + j), c0);
      }
      _mm256_storeu_ps(crow + j, c0);
    }
    for (; j < n; ++j) {
      float acc = 0.0f;
      for (std::int64_t p = 0; p < k; ++p) {
        acc += arow[p] * b[p * n + j];
      }
      crow[j] = acc;
    }
  }
}

void gemm_f64(std::int64_t m, std::int64_t n, std::int64_t k, const double* a, const double* b,
              double* c) {
  for (std::int64_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    std::int64_t j = 0;
    for (; j + 16 <= n; j += 16) {
      __m256d c0 = _mm256_setzero_pd();
      __m256d c1 = _mm256_setzero_pd();
      __m256d c2 = _mm256_setzero_pd();
      __m256d c3 = _mm256_setzero_pd();
      for (std::int64_t p = 0; p < k; ++p) {
        const __m256d av = _mm256_broadcast_sd(arow + p);
        const double* brow = b + p * n + j;
        c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow), c0);
        c1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + 4), c1);
        c2 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + 8), c2);
        c3 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + 12), c3);
      }
      _mm256_storeu_pd(crow + j, c0);
      _mm256_storeu_pd(crow + j + 4, c1);
      _mm256_storeu_pd(crow + j + 8, c2);
      _mm256_storeu_pd(crow + j + 12, c3);
    }
    for (; j + 4 <= n; j += 4) {
      __m256d c0 = _mm256_setzero_pd();
      for (std::int64_t p = 0; p < k; ++p) {
        c0 = _mm256_fmadd_pd(_mm256_broadcast_sd(arow + p), _mm256_loadu_pd(b + p * n + j), c0);
      }
      _mm256_storeu_pd(crow + j, c0);
    }
    for (; j < n; ++j) {
      double acc = 0.0;
      for (std::int64_t p = 0; p < k; ++p) {
        acc += arow[p] * b[p * n + j];
      }
      crow[j] = acc;
    }
  }
}

#define PRISM_BINARY_F32(name, intrin, scalar_expr)                                 \
  void name##_f32(std::int64_t n, const float* a, const float* b, float* out) {     \
    std::int64_t i = 0;                                                             \
    for (; i + 8 <= n; i += 8) {                                                    \
      _mm256_storeu_ps(out + i, intrin(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i))); \
    }                                                                               \
    for (; i < n; ++i) out[i] = scalar_expr;                                        \
  }

#define PRISM_BINARY_F64(name, intrin, scalar_expr)                                 \
  void name##_f64(std::int64_t n, const double* a, const double* b, double* out) {  \
    std::int64_t i = 0;                                                             \
    for (; i + 4 <= n; i += 4) {                                                    \
      _mm256_storeu_pd(out + i, intrin(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i))); \
    }                                                                               \
    for (; i < n; ++i) out[i] = scalar_expr;                                        \
  }

PRISM_BINARY_F32(add, _mm256_add_ps, a[i] + b[i])
PRISM_BINARY_F32(sub, _mm256_sub_ps, a[i] - b[i])
PRISM_BINARY_F32(mul, _mm256_mul_ps, a[i] * b[i])
PRISM_BINARY_F64(add, _mm256_add_pd, a[i] + b[i])
PRISM_BINARY_F64(sub, _mm256_sub_pd, a[i] - b[i])
PRISM_BINARY_F64(mul, _mm256_mul_pd, a[i] * b[i])

#undef PRISM_BINARY_F32
#undef PRISM_BINARY_F64

// axpy deliberately avoids FMA so results match the scalar kernel bit-for-bit.
void axpy_f32(std::int64_t n, float alpha, const float* x, float* y) {
  const __m256 av = _mm256_set1_ps(alpha);
  std::int64_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 prod = _mm256_mul_ps(av, _mm256_loadu_ps(x + i));
    _mm256_storeu_ps(y + i, _mm256_add_ps(_mm256_loadu_ps(y + i), prod));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void axpy_f64(std::int64_t n, double alpha, const double* x, double* y) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::int64_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d prod = _mm256_mul_pd(av, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void relu_f32(std::int64_t n, const float* x, float* out) {
  const __m256 zero = _mm256_setzero_ps();
  std::int64_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 v = _mm256_loadu_ps(x + i);
    _mm256_storeu_ps(out + i, _mm256_and_ps(_mm256_cmp_ps(v, zero, _CMP_NLE_UQ), v));
  }
  for (; i < n; ++i) out[i] = x[i] <= 0.0f ? 0.0f : x[i];
}

void relu_f64(std::int64_t n, const double* x, double* out) {
  const __m256d zero = _mm256_setzero_pd();
  std::int64_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    _mm256_storeu_pd(out + i, _mm256_and_pd(_mm256_cmp_pd(v, zero, _CMP_NLE_UQ), v));
  }
  for (; i < n; ++i) out[i] = x[i] <= 0.0 ? 0.0 : x[i];
}

void relu_grad_f32(std::int64_t n, const float* x, const float* g, float* out) {
  const __m256 zero = _mm256_setzero_ps();
  std::int64_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 keep = _mm256_cmp_ps(_mm256_loadu_ps(x + i), zero, _CMP_GT_OQ);
    _mm256_storeu_ps(out + i, _mm256_and_ps(keep, _mm256_loadu_ps(g + i)));
  }
  for (; i < n; ++i) out[i] = x[i] > 0.0f ? g[i] : 0.0f;
}

void relu_grad_f64(std::int64_t n, const double* x, const double* g, double* out) {
  const __m256d zero = _mm256_setzero_pd();
  std::int64_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d keep = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
    _mm256_storeu_pd(out + i, _mm256_and_pd(keep, _mm256_loadu_pd(g + i)));
  }
  for (; i < n; ++i) out[i] = x[i] > 0.0 ? g[i] : 0.0;
}

constexpr KernelTable<float> kTableF32{&gemm_f32, &add_f32,  &sub_f32,      &mul_f32,
                                       &axpy_f32, &relu_f32, &relu_grad_f32};
constexpr KernelTable<double> kTableF64{&gemm_f64, &add_f64,  &sub_f64,      &mul_f64,
                                        &axpy_f64, &relu_f64, &relu_grad_f64};

}  // namespace

const KernelTable<float>& table_f32() { return kTableF32; }
const KernelTable<double>& table_f64() { return kTableF64; }

}  // namespace prism::kernels::avx2

#endif  // PRISM_KERNELS_AVX2
