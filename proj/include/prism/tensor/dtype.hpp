// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>

namespace prism {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class DTypeError : public Error {
 public:
  using Error::Error;
};

class ValueError : public Error {
 public:
  using Error::Error;
};

/// Lookup failure in a registry or keyed container.
class KeyError : public Error {
 public:
  using Error::Error;
};

enum class DType : std::uint8_t { f32 = 0, f64 = 1, i32 = 2, boolean = 3 };

constexpr std::string_view dtype_name(DType dt) {
  switch (dt) {
    case DType::f32:
      return "f32";
    case DType::f64:
      return "f64";
    case DType::i32:
      return "i32";
    case DType::boolean:
      return "bool";
  }
  return "?";
}

DType parse_dtype(std::string_view name);

constexpr bool is_float(DType dt) { return dt == DType::f32 || dt == DType::f64; }

constexpr std::size_t dtype_size(DType dt) {
  switch (dt) {
    case DType::f32:
    case DType::i32:
      return 4;
    case DType::f64:
      return 8;
    case DType::boolean:
      return 1;
  }
  return 0;
}

template <class T>
constexpr DType dtype_of() {
  if constexpr (std::is_same_v<T, float>) {
    return DType::f32;
  } else if constexpr (std::is_same_v<T, double>) {
    return DType::f64;
  } else if constexpr (std::is_same_v<T, std::int32_t>) {
    return DType::i32;
  } else {
    static_assert(std::is_same_v<T, std::uint8_t>, "unsupported element type");
    return DType::boolean;
  }
}

/// Calls `f(T{})` with the C++ element type of `dt`.
template <class F>
decltype(auto) dispatch(DType dt, F&& f) {
  switch (dt) {
    case DType::f32:
      return f(float{});
    case DType::f64:
      return f(double{});
    case DType::i32:
      return f(std::int32_t{});
    case DType::boolean:
      return f(std::uint8_t{});
  }
  throw DTypeError("invalid dtype");
}

/// Like dispatch(), restricted to floating dtypes.
template <class F>
decltype(auto) dispatch_float(DType dt, F&& f) {
  switch (dt) {
    case DType::f32:
      return f(float{});
    case DType::f64:
      return f(double{});
    default:
      throw DTypeError("expected a float dtype, got " + std::string(dtype_name(dt)));
  }
}

}  // namespace prism
