// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cstring>
#include <numeric>

#include "ops_common.hpp"

namespace prism {

using detail::axis_view;

Tensor reshape(const Tensor& x, Shape shape) {
  std::int64_t known = 1;
  int infer = -1;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (shape[i] == -1) {
      if (infer >= 0) throw ShapeError("reshape: more than one -1 extent");
      infer = static_cast<int>(i);
    } else {
      known *= shape[i];
    }
  }
  if (infer >= 0) {
    if (known == 0 || x.numel() % known != 0) {
      throw ShapeError(fmt::format("reshape: cannot infer extent for {} from {}",
                                   to_string(shape), to_string(x.shape())));
    }
    shape[static_cast<std::size_t>(infer)] = x.numel() / known;
  }
  Tensor out = x.with_shape(shape);
  if (!x.tracked()) return out;
  return autodiff::record(std::move(out), {x}, [in_shape = x.shape()](const Tensor& g) {
    return std::vector<Tensor>{g.with_shape(in_shape)};
  });
}

Tensor transpose(const Tensor& x, std::vector<int> perm) {
  const std::size_t nd = x.ndim();
  if (perm.size() != nd) {
    throw ShapeError("transpose: permutation rank does not match tensor rank");
  }
  for (auto& p : perm) p = normalize_axis(p, nd);
  {
    std::vector<int> sorted = perm;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < nd; ++i) {
      if (sorted[i] != static_cast<int>(i)) throw ShapeError("transpose: invalid permutation");
    }
  }
  Shape out_shape(nd);
  for (std::size_t i = 0; i < nd; ++i) out_shape[i] = x.shape()[static_cast<std::size_t>(perm[i])];
  const Shape in_strides = strides_of(x.shape());
  Shape src_strides(nd);
  for (std::size_t i = 0; i < nd; ++i) src_strides[i] = in_strides[static_cast<std::size_t>(perm[i])];

  Tensor out = dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto xv = x.data<T>();
    std::vector<T> out(xv.size());
    if (nd == 0) {
      out.assign(xv.begin(), xv.end());
    } else if (!out.empty()) {
      // Odometer over the outer axes; the last output axis is a strided run.
      const std::int64_t run = out_shape[nd - 1];
      const std::int64_t step = src_strides[nd - 1];
      const std::int64_t rows = x.numel() / run;
      std::vector<std::int64_t> idx(nd, 0);
      std::int64_t src = 0;
      const T* in = xv.data();
      T* dst = out.data();
      for (std::int64_t r = 0; r < rows; ++r, dst += run) {
        if (step == 1) {
          std::copy(in + src, in + src + run, dst);
        } else {
          for (std::int64_t j = 0; j < run; ++j) dst[j] = in[src + j * step];
        }
        for (std::size_t d = nd - 1; d-- > 0;) {
          ++idx[d];
          src += src_strides[d];
          if (idx[d] < out_shape[d]) break;
          src -= src_strides[d] * out_shape[d];
          idx[d] = 0;
        }
      }
    }
    return Tensor(out_shape, std::move(out));
  });
  if (!x.tracked()) return out;
  std::vector<int> inverse(nd);
  for (std::size_t i = 0; i < nd; ++i) inverse[static_cast<std::size_t>(perm[i])] = static_cast<int>(i);
  return autodiff::record(std::move(out), {x}, [inverse](const Tensor& g) {
    return std::vector<Tensor>{transpose(g, inverse)};
  });
}

Tensor swap_last(const Tensor& x) {
  std::vector<int> perm(x.ndim());
  std::iota(perm.begin(), perm.end(), 0);
  if (perm.size() < 2) throw ShapeError("swap_last: rank must be >= 2");
  std::swap(perm[perm.size() - 1], perm[perm.size() - 2]);
  return transpose(x, perm);
}

Tensor slice(const Tensor& x, int axis, std::int64_t start, std::int64_t stop) {
  const int ax = normalize_axis(axis, x.ndim());
  const auto v = axis_view(x.shape(), ax);
  if (start < 0 || stop > v.extent || start > stop) {
    throw ShapeError(fmt::format("slice: [{}, {}) out of range for extent {}", start, stop, v.extent));
  }
  Shape out_shape = x.shape();
  out_shape[static_cast<std::size_t>(ax)] = stop - start;
  const std::int64_t len = stop - start;
  Tensor out = dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto xv = x.data<T>();
    std::vector<T> out(static_cast<std::size_t>(numel(out_shape)));
    for (std::int64_t o = 0; o < v.outer; ++o) {
      const T* src = xv.data() + (o * v.extent + start) * v.inner;
      std::copy(src, src + len * v.inner, out.data() + o * len * v.inner);
    }
    return Tensor(out_shape, std::move(out));
  });
  if (!x.tracked()) return out;
  const std::int64_t after = v.extent - stop;
  return autodiff::record(std::move(out), {x}, [ax, start, after](const Tensor& g) {
    return std::vector<Tensor>{pad(g, ax, start, after)};
  });
}

Tensor pad(const Tensor& x, int axis, std::int64_t before, std::int64_t after) {
  const int ax = normalize_axis(axis, x.ndim());
  if (before < 0 || after < 0) throw ShapeError("pad: negative padding");
  const auto v = axis_view(x.shape(), ax);
  Shape out_shape = x.shape();
  const std::int64_t out_extent = v.extent + before + after;
  out_shape[static_cast<std::size_t>(ax)] = out_extent;
  Tensor out = dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto xv = x.data<T>();
    std::vector<T> out(static_cast<std::size_t>(numel(out_shape)), T(0));
    for (std::int64_t o = 0; o < v.outer; ++o) {
      const T* src = xv.data() + o * v.extent * v.inner;
      std::copy(src, src + v.extent * v.inner, out.data() + (o * out_extent + before) * v.inner);
    }
    return Tensor(out_shape, std::move(out));
  });
  if (!x.tracked()) return out;
  const std::int64_t extent = v.extent;
  return autodiff::record(std::move(out), {x}, [ax, before, extent](const Tensor& g) {
    return std::vector<Tensor>{slice(g, ax, before, before + extent)};
  });
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Tensor& first = parts.front();
  const int ax = normalize_axis(axis, first.ndim());
  Shape out_shape = first.shape();
  std::int64_t total = 0;
  for (const auto& p : parts) {
    detail::require_same_dtype(first, p, "concat");
    if (p.ndim() != first.ndim()) throw ShapeError("concat: rank mismatch");
    for (std::size_t d = 0; d < p.ndim(); ++d) {
      if (static_cast<int>(d) != ax && p.shape()[d] != first.shape()[d]) {
        throw ShapeError(fmt::format("concat: shapes {} and {} differ off the concat axis",
                                     to_string(first.shape()), to_string(p.shape())));
      }
    }
    total += p.shape()[static_cast<std::size_t>(ax)];
  }
  out_shape[static_cast<std::size_t>(ax)] = total;
  const auto ov = axis_view(out_shape, ax);
  Tensor out = dispatch(first.dtype(), [&](auto tag) {
    using T = decltype(tag);
    std::vector<T> out(static_cast<std::size_t>(numel(out_shape)));
    std::int64_t offset = 0;
    for (const auto& p : parts) {
      auto pv = p.data<T>();
      const std::int64_t len = p.shape()[static_cast<std::size_t>(ax)];
      for (std::int64_t o = 0; o < ov.outer; ++o) {
        const T* src = pv.data() + o * len * ov.inner;
        std::copy(src, src + len * ov.inner, out.data() + (o * ov.extent + offset) * ov.inner);
      }
      offset += len;
    }
    return Tensor(out_shape, std::move(out));
  });
  const bool any = std::any_of(parts.begin(), parts.end(), [](const Tensor& t) { return t.tracked(); });
  if (!any) return out;
  std::vector<std::int64_t> bounds{0};
  for (const auto& p : parts) bounds.push_back(bounds.back() + p.shape()[static_cast<std::size_t>(ax)]);
  return autodiff::record(std::move(out), parts, [ax, bounds](const Tensor& g) {
    std::vector<Tensor> grads;
    for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
      grads.push_back(slice(g, ax, bounds[i], bounds[i + 1]));
    }
    return grads;
  });
}

Tensor broadcast_to(const Tensor& x, const Shape& shape) {
  Tensor out = detail::materialize_broadcast(x, shape);
  if (!x.tracked()) return out;
  return autodiff::record(std::move(out), {x}, [in_shape = x.shape()](const Tensor& g) {
    return std::vector<Tensor>{sum_to(g, in_shape)};
  });
}

Tensor astype(const Tensor& x, DType dtype) {
  if (x.dtype() == dtype) return x;
  Tensor out = dispatch(x.dtype(), [&](auto src_tag) {
    using S = decltype(src_tag);
    auto xv = x.data<S>();
    return dispatch(dtype, [&](auto dst_tag) {
      using D = decltype(dst_tag);
      std::vector<D> out(xv.size());
      std::transform(xv.begin(), xv.end(), out.begin(), [](S v) { return static_cast<D>(v); });
      return Tensor(x.shape(), std::move(out));
    });
  });
  if (!x.tracked() || !is_float(dtype)) return out;
  return autodiff::record(std::move(out), {x}, [src = x.dtype()](const Tensor& g) {
    return std::vector<Tensor>{astype(g, src)};
  });
}

Tensor stop_gradient(const Tensor& x) { return x.detached(); }

Tensor one_hot(const Tensor& labels, std::int64_t depth, DType dtype) {
  if (labels.dtype() != DType::i32) {
    throw DTypeError("one_hot: labels must be i32");
  }
  auto lv = labels.data<std::int32_t>();
  Shape shape = labels.shape();
  shape.push_back(depth);
  return dispatch(dtype, [&](auto tag) {
    using T = decltype(tag);
    std::vector<T> out(static_cast<std::size_t>(numel(shape)), T(0));
    for (std::size_t i = 0; i < lv.size(); ++i) {
      if (lv[i] >= 0 && lv[i] < depth) {
        out[i * static_cast<std::size_t>(depth) + static_cast<std::size_t>(lv[i])] = T(1);
      }
    }
    return Tensor(shape, std::move(out));
  });
}

}  // namespace prism
