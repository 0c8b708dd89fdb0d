// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <cstdlib>
#include <string>

#include "prism/tensor/dtype.hpp"
#include "prism/tensor/kernels.hpp"

namespace prism::kernels {
namespace {

Isa detect_isa() {
  if (const char* forced = std::getenv("PRISM_ISA")) {
    const std::string name(forced);
    if (name == "scalar") return Isa::scalar;
    if (name == "avx2" && isa_supported(Isa::avx2)) return Isa::avx2;
  }
  return isa_supported(Isa::avx2) ? Isa::avx2 : Isa::scalar;
}

std::atomic<Isa>& active_slot() {
  static std::atomic<Isa> slot{detect_isa()};
  return slot;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "?";
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if PRISM_KERNELS_AVX2
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

template <class T>
const KernelTable<T>& table(Isa isa) {
  if (!isa_supported(isa)) {
    throw ValueError("kernel ISA not supported on this CPU: " + std::string(isa_name(isa)));
  }
#if PRISM_KERNELS_AVX2
  if (isa == Isa::avx2) {
    if constexpr (std::is_same_v<T, float>) {
      return avx2::table_f32();
    } else {
      return avx2::table_f64();
    }
  }
#endif
  return scalar::table<T>();
}

template const KernelTable<float>& table<float>(Isa);
template const KernelTable<double>& table<double>(Isa);

Isa active_isa() { return active_slot().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  if (!isa_supported(isa)) {
    throw ValueError("kernel ISA not supported on this CPU: " + std::string(isa_name(isa)));
  }
  active_slot().store(isa, std::memory_order_relaxed);
}

}  // namespace prism::kernels
