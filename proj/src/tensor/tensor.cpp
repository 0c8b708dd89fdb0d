// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#include "prism/tensor/tensor.hpp"

#include <algorithm>
#include <cstring>

#include <fmt/format.h>

#include "prism/tensor/autodiff.hpp"

namespace prism {

DType parse_dtype(std::string_view name) {
  if (name == "f32" || name == "float32") return DType::f32;
  if (name == "f64" || name == "float64") return DType::f64;
  if (name == "i32" || name == "int32") return DType::i32;
  if (name == "bool") return DType::boolean;
  throw DTypeError(fmt::format("unknown dtype '{}'", name));
}

std::int64_t numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) {
    n *= d;
  }
  return n;
}

std::string to_string(const Shape& shape) { return fmt::format("[{}]", fmt::join(shape, ", ")); }

Shape strides_of(const Shape& shape) {
  Shape strides(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;) {
    strides[i - 1] = strides[i] * shape[i];
  }
  return strides;
}

Shape broadcast_shapes(const Shape& a, const Shape& b) {
  const std::size_t nd = std::max(a.size(), b.size());
  Shape out(nd);
  for (std::size_t i = 0; i < nd; ++i) {
    const std::int64_t da = i < nd - a.size() ? 1 : a[i - (nd - a.size())];
    const std::int64_t db = i < nd - b.size() ? 1 : b[i - (nd - b.size())];
    if (da != db && da != 1 && db != 1) {
      throw ShapeError(fmt::format("shapes {} and {} do not broadcast", to_string(a), to_string(b)));
    }
    out[i] = da == 1 ? db : da;
  }
  return out;
}

int normalize_axis(int axis, std::size_t ndim) {
  const int nd = static_cast<int>(ndim);
  const int a = axis < 0 ? axis + nd : axis;
  if (a < 0 || a >= nd) {
    throw ShapeError(fmt::format("axis {} out of range for rank {}", axis, ndim));
  }
  return a;
}

Tensor Tensor::scalar(double value, DType dtype) { return full({}, value, dtype); }

Tensor Tensor::zeros(const Shape& shape, DType dtype) { return full(shape, 0.0, dtype); }

Tensor Tensor::ones(const Shape& shape, DType dtype) { return full(shape, 1.0, dtype); }

Tensor Tensor::full(const Shape& shape, double value, DType dtype) {
  for (auto d : shape) {
    if (d < 0) throw ShapeError("negative extent in " + to_string(shape));
  }
  return dispatch(dtype, [&](auto tag) {
    using T = decltype(tag);
    return Tensor(shape, std::vector<T>(static_cast<std::size_t>(prism::numel(shape)),
                                        static_cast<T>(value)));
  });
}

Tensor Tensor::from_doubles(const Shape& shape, const std::vector<double>& values, DType dtype) {
  return dispatch(dtype, [&](auto tag) {
    using T = decltype(tag);
    std::vector<T> data(values.size());
    std::transform(values.begin(), values.end(), data.begin(),
                   [](double v) { return static_cast<T>(v); });
    return Tensor(shape, std::move(data));
  });
}

std::int64_t Tensor::dim(int axis) const {
  return shape_[static_cast<std::size_t>(normalize_axis(axis, shape_.size()))];
}

double Tensor::flat(std::int64_t index) const {
  return dispatch(dtype_, [&](auto tag) {
    using T = decltype(tag);
    return static_cast<double>(data<T>()[static_cast<std::size_t>(index)]);
  });
}

double Tensor::item() const {
  if (numel() != 1) {
    throw ShapeError("item() on tensor of shape " + to_string(shape_));
  }
  return flat(0);
}

std::vector<double> Tensor::to_doubles() const {
  return dispatch(dtype_, [&](auto tag) {
    using T = decltype(tag);
    auto src = data<T>();
    return std::vector<double>(src.begin(), src.end());
  });
}

bool Tensor::tracked() const {
  return node_ >= 0 && tape_id_ != 0 && tape_id_ == autodiff::current_tape_id();
}

Tensor Tensor::detached() const {
  Tensor out = *this;
  out.tape_id_ = 0;
  out.node_ = -1;
  return out;
}

Tensor Tensor::with_shape(Shape shape) const {
  if (prism::numel(shape) != numel()) {
    throw ShapeError(fmt::format("cannot view {} as {}", to_string(shape_), to_string(shape)));
  }
  Tensor out = detached();
  out.shape_ = std::move(shape);
  return out;
}

bool Tensor::equals(const Tensor& other) const {
  if (shape_ != other.shape_ || dtype_ != other.dtype_ || defined() != other.defined()) {
    return false;
  }
  if (!defined()) return true;
  return *storage_ == *other.storage_;
}

void Tensor::check_size() const {
  const auto expected = prism::numel(shape_);
  const auto actual = std::visit([](const auto& v) { return static_cast<std::int64_t>(v.size()); },
                                 *storage_);
  if (expected != actual) {
    throw ShapeError(fmt::format("buffer of {} elements does not match shape {}", actual,
                                 to_string(shape_)));
  }
}

void Tensor::throw_dtype_mismatch(DType requested) const {
  if (!storage_) {
    throw ValueError("access to an undefined tensor");
  }
  throw DTypeError(fmt::format("tensor has dtype {}, requested {}", dtype_name(dtype_),
                               dtype_name(requested)));
}

std::int64_t count_elements(const TensorMap& tensors) {
  std::int64_t total = 0;
  for (const auto& [name, t] : tensors) {
    total += t.numel();
  }
  return total;
}

bool equal_maps(const TensorMap& a, const TensorMap& b) {
  if (a.size() != b.size()) return false;
  for (auto ia = a.begin(), ib = b.begin(); ia != a.end(); ++ia, ++ib) {
    if (ia->first != ib->first || !ia->second.equals(ib->second)) return false;
  }
  return true;
}

}  // namespace prism
