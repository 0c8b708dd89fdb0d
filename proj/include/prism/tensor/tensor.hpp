// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "prism/tensor/dtype.hpp"
#include "prism/tensor/shape.hpp"

namespace prism {

namespace autodiff {
struct TapeAccess;
}

/// Dense row-major n-dimensional array.
///
/// Tensors are immutable values: the element buffer is shared between copies
/// and never written after construction, so copies are cheap and safe to hand
/// across threads. A tensor produced while a Tape is recording carries a
/// handle into that tape; the handle is inert once the tape is gone.
class Tensor {
 public:
  using Storage = std::variant<std::vector<float>, std::vector<double>,
                               std::vector<std::int32_t>, std::vector<std::uint8_t>>;

  Tensor() = default;

  template <class T>
  Tensor(Shape shape, std::vector<T> data)
      : shape_(std::move(shape)),
        dtype_(dtype_of<T>()),
        storage_(std::make_shared<const Storage>(std::move(data))) {
    check_size();
  }

  static Tensor scalar(double value, DType dtype = DType::f32);
  static Tensor zeros(const Shape& shape, DType dtype = DType::f32);
  static Tensor ones(const Shape& shape, DType dtype = DType::f32);
  static Tensor full(const Shape& shape, double value, DType dtype = DType::f32);
  /// Converts `values` to `dtype` element-wise.
  static Tensor from_doubles(const Shape& shape, const std::vector<double>& values,
                             DType dtype = DType::f64);

  bool defined() const { return storage_ != nullptr; }
  const Shape& shape() const { return shape_; }
  DType dtype() const { return dtype_; }
  std::int64_t numel() const { return prism::numel(shape_); }
  std::size_t ndim() const { return shape_.size(); }
  /// Extent along `axis`; negative axes count from the end.
  std::int64_t dim(int axis) const;

  template <class T>
  std::span<const T> data() const {
    const auto* vec = storage_ ? std::get_if<std::vector<T>>(storage_.get()) : nullptr;
    if (vec == nullptr) {
      throw_dtype_mismatch(dtype_of<T>());
    }
    return {vec->data(), vec->size()};
  }

  /// Element at flat index, converted to double.
  double flat(std::int64_t index) const;
  /// Value of a one-element tensor, converted to double.
  double item() const;
  /// Copy of all elements converted to double.
  std::vector<double> to_doubles() const;

  /// True when this tensor is recorded on the currently active tape.
  bool tracked() const;

  /// Copy of this value without its tape handle.
  Tensor detached() const;

  /// Same storage viewed with a different shape of equal element count.
  Tensor with_shape(Shape shape) const;

  /// Exact element-wise equality of shape, dtype and values.
  bool equals(const Tensor& other) const;

 private:
  friend struct autodiff::TapeAccess;

  void check_size() const;
  [[noreturn]] void throw_dtype_mismatch(DType requested) const;

  Shape shape_;
  DType dtype_ = DType::f32;
  std::shared_ptr<const Storage> storage_;
  std::uint64_t tape_id_ = 0;
  std::int64_t node_ = -1;
};

/// Named tensors, ordered by name so iteration is deterministic.
using TensorMap = std::map<std::string, Tensor>;

/// Total element count over all tensors in the map.
std::int64_t count_elements(const TensorMap& tensors);

bool equal_maps(const TensorMap& a, const TensorMap& b);

}  // namespace prism
