// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string_view>

// Data-parallel inner loops. Each kernel has a scalar reference version and,
// where the target supports it, an AVX2+FMA version; the active table is
// chosen once at startup from CPU features and may be pinned with the
// PRISM_ISA environment variable ("scalar" or "avx2").

namespace prism::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

template <class T>
struct KernelTable {
  /// c[M,N] = a[M,K] * b[K,N], all row-major and contiguous.
  void (*gemm)(std::int64_t m, std::int64_t n, std::int64_t k, const T* a, const T* b, T* c);
  void (*add)(std::int64_t n, const T* a, const T* b, T* out);
  void (*sub)(std::int64_t n, const T* a, const T* b, T* out);
  void (*mul)(std::int64_t n, const T* a, const T* b, T* out);
  /// y += alpha * x
  void (*axpy)(std::int64_t n, T alpha, const T* x, T* y);
  void (*relu)(std::int64_t n, const T* x, T* out);
  /// out = g where x > 0, else 0.
  void (*relu_grad)(std::int64_t n, const T* x, const T* g, T* out);
};

bool isa_supported(Isa isa);

/// Kernel table for a specific ISA. Throws prism::ValueError if unsupported.
template <class T>
const KernelTable<T>& table(Isa isa);

Isa active_isa();
/// Pins the process-wide ISA; intended for tests and benchmarks.
void set_active_isa(Isa isa);

template <class T>
const KernelTable<T>& active() {
  return table<T>(active_isa());
}

namespace scalar {
template <class T>
const KernelTable<T>& table();
}

#if defined(__x86_64__) || defined(_M_X64)
#define PRISM_KERNELS_AVX2 1
namespace avx2 {
const KernelTable<float>& table_f32();
const KernelTable<double>& table_f64();
}  // namespace avx2
#endif

}  // namespace prism::kernels
