// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <limits>

#include "ops_common.hpp"
#include "prism/tensor/kernels.hpp"

namespace prism {
namespace {

using detail::axis_view;
using detail::require_float;

std::vector<int> normalized_axes(std::vector<int> axes, std::size_t ndim) {
  if (axes.empty()) {
    axes.resize(ndim);
    for (std::size_t i = 0; i < ndim; ++i) axes[i] = static_cast<int>(i);
  }
  for (auto& a : axes) a = normalize_axis(a, ndim);
  std::sort(axes.begin(), axes.end());
  axes.erase(std::unique(axes.begin(), axes.end()), axes.end());
  return axes;
}

Shape reduced_shape(const Shape& shape, const std::vector<int>& axes, bool keepdims) {
  Shape out;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    const bool reduced = std::binary_search(axes.begin(), axes.end(), static_cast<int>(i));
    if (!reduced) {
      out.push_back(shape[i]);
    } else if (keepdims) {
      out.push_back(1);
    }
  }
  return out;
}

// Sum over `axes` with double accumulators; returns values in keepdims layout order.
template <class T>
std::vector<T> sum_values(const Tensor& x, const std::vector<int>& axes) {
  const Shape& shape = x.shape();
  const std::size_t nd = shape.size();
  auto xv = x.data<T>();
  const Shape kshape = reduced_shape(shape, axes, true);
  const std::int64_t out_n = numel(kshape);
  std::vector<double> acc(static_cast<std::size_t>(out_n), 0.0);
  if (x.numel() == 0) {
    return std::vector<T>(acc.begin(), acc.end());
  }
  if (nd == 0) return std::vector<T>(xv.begin(), xv.end());
  // Contiguous trailing reduction: rows of length `inner`.
  bool trailing = !axes.empty();
  for (std::size_t i = 0; i < axes.size(); ++i) {
    if (axes[i] != static_cast<int>(nd - axes.size() + i)) trailing = false;
  }
  if (trailing) {
    const std::int64_t inner = x.numel() / out_n;
    for (std::int64_t o = 0; o < out_n; ++o) {
      double s = 0.0;
      const T* row = xv.data() + o * inner;
      for (std::int64_t j = 0; j < inner; ++j) s += static_cast<double>(row[j]);
      acc[static_cast<std::size_t>(o)] = s;
    }
  } else {
    Shape ostrides = strides_of(kshape);
    for (int a : axes) ostrides[static_cast<std::size_t>(a)] = 0;
    const std::int64_t run = shape[nd - 1];
    const std::int64_t step = ostrides[nd - 1];
    const std::int64_t rows = x.numel() / run;
    std::vector<std::int64_t> idx(nd, 0);
    std::int64_t off = 0;
    const T* row = xv.data();
    for (std::int64_t r = 0; r < rows; ++r, row += run) {
      if (step == 0) {
        double s = acc[static_cast<std::size_t>(off)];
        for (std::int64_t j = 0; j < run; ++j) s += static_cast<double>(row[j]);
        acc[static_cast<std::size_t>(off)] = s;
      } else {
        double* dst = acc.data() + off;
        for (std::int64_t j = 0; j < run; ++j) dst[j] += static_cast<double>(row[j]);
      }
      for (std::size_t d = nd - 1; d-- > 0;) {
        ++idx[d];
        off += ostrides[d];
        if (idx[d] < shape[d]) break;
        off -= ostrides[d] * shape[d];
        idx[d] = 0;
      }
    }
  }
  return std::vector<T>(acc.begin(), acc.end());
}

}  // namespace

Tensor sum(const Tensor& x, std::vector<int> axes, bool keepdims) {
  if (!x.defined()) throw ValueError("sum: undefined tensor");
  axes = normalized_axes(std::move(axes), x.ndim());
  const Shape out_shape = reduced_shape(x.shape(), axes, keepdims);
  Tensor out = dispatch(x.dtype(), [&](auto tag) -> Tensor {
    using T = decltype(tag);
    if constexpr (std::is_same_v<T, std::uint8_t>) {
      throw DTypeError("sum: bool tensors are not summable");
    } else {
      return Tensor(out_shape, sum_values<T>(x, axes));
    }
  });
  if (!x.tracked()) return out;
  const Shape in_shape = x.shape();
  const Shape kshape = reduced_shape(in_shape, axes, true);
  return autodiff::record(std::move(out), {x}, [in_shape, kshape](const Tensor& g) {
    return std::vector<Tensor>{detail::materialize_broadcast(g.with_shape(kshape), in_shape)};
  });
}

Tensor mean(const Tensor& x, std::vector<int> axes, bool keepdims) {
  require_float(x, "mean");
  axes = normalized_axes(std::move(axes), x.ndim());
  std::int64_t count = 1;
  for (int a : axes) count *= x.shape()[static_cast<std::size_t>(a)];
  return sum(x, axes, keepdims) * (1.0 / static_cast<double>(std::max<std::int64_t>(count, 1)));
}

Tensor sum_to(const Tensor& x, const Shape& shape) {
  if (x.shape() == shape) return x;
  const std::size_t nd = x.ndim();
  if (shape.size() > nd) {
    throw ShapeError(
        fmt::format("sum_to: cannot reduce {} to {}", to_string(x.shape()), to_string(shape)));
  }
  const std::size_t lead = nd - shape.size();
  std::vector<int> axes;
  for (std::size_t i = 0; i < nd; ++i) {
    if (i < lead) {
      axes.push_back(static_cast<int>(i));
    } else if (shape[i - lead] == 1 && x.shape()[i] != 1) {
      axes.push_back(static_cast<int>(i));
    } else if (shape[i - lead] != x.shape()[i]) {
      throw ShapeError(
          fmt::format("sum_to: cannot reduce {} to {}", to_string(x.shape()), to_string(shape)));
    }
  }
  if (axes.empty()) return reshape(x, shape);
  return reshape(sum(x, axes, true), shape);
}

Tensor max(const Tensor& x, int axis, bool keepdims) {
  const int ax = normalize_axis(axis, x.ndim());
  const auto v = axis_view(x.shape(), ax);
  Shape out_shape = reduced_shape(x.shape(), {ax}, keepdims);
  Tensor result = dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto xv = x.data<T>();
    std::vector<T> out(static_cast<std::size_t>(v.outer * v.inner));
    for (std::int64_t o = 0; o < v.outer; ++o) {
      for (std::int64_t i = 0; i < v.inner; ++i) {
        T best = std::numeric_limits<T>::lowest();
        for (std::int64_t k = 0; k < v.extent; ++k) {
          best = std::max(best, xv[static_cast<std::size_t>((o * v.extent + k) * v.inner + i)]);
        }
        out[static_cast<std::size_t>(o * v.inner + i)] = best;
      }
    }
    return Tensor(out_shape, std::move(out));
  });
  if (!x.tracked()) return result;
  const Tensor winners = argmax(x.detached(), ax);
  const Shape in_shape = x.shape();
  const DType dtype = x.dtype();
  return autodiff::record(std::move(result), {x}, [winners, in_shape, dtype, v](const Tensor& g) {
    const auto gv = g.to_doubles();
    auto wv = winners.data<std::int32_t>();
    std::vector<double> dx(static_cast<std::size_t>(numel(in_shape)), 0.0);
    for (std::int64_t o = 0; o < v.outer; ++o) {
      for (std::int64_t i = 0; i < v.inner; ++i) {
        const auto r = static_cast<std::size_t>(o * v.inner + i);
        dx[static_cast<std::size_t>((o * v.extent + wv[r]) * v.inner + i)] = gv[r];
      }
    }
    return std::vector<Tensor>{Tensor::from_doubles(in_shape, dx, dtype)};
  });
}

Tensor argmax(const Tensor& x, int axis) {
  const int ax = normalize_axis(axis, x.ndim());
  const auto v = axis_view(x.shape(), ax);
  Shape out_shape = reduced_shape(x.shape(), {ax}, false);
  return dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto xv = x.data<T>();
    std::vector<std::int32_t> out(static_cast<std::size_t>(v.outer * v.inner));
    for (std::int64_t o = 0; o < v.outer; ++o) {
      for (std::int64_t i = 0; i < v.inner; ++i) {
        std::int64_t best_k = 0;
        T best = xv[static_cast<std::size_t>(o * v.extent * v.inner + i)];
        for (std::int64_t k = 1; k < v.extent; ++k) {
          const T val = xv[static_cast<std::size_t>((o * v.extent + k) * v.inner + i)];
          if (val > best) {
            best = val;
            best_k = k;
          }
        }
        out[static_cast<std::size_t>(o * v.inner + i)] = static_cast<std::int32_t>(best_k);
      }
    }
    return Tensor(out_shape, std::move(out));
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_float(a, "matmul");
  detail::require_same_dtype(a, b, "matmul");
  if (a.ndim() < 2 || b.ndim() < 2) {
    throw ShapeError("matmul: operands need rank >= 2");
  }
  const std::int64_t n = a.dim(-2);
  const std::int64_t k = a.dim(-1);
  const std::int64_t m = b.dim(-1);
  if (b.dim(-2) != k) {
    throw ShapeError(fmt::format("matmul: inner dimensions differ, {} vs {}", to_string(a.shape()),
                                 to_string(b.shape())));
  }
  const Shape abatch(a.shape().begin(), a.shape().end() - 2);
  const Shape bbatch(b.shape().begin(), b.shape().end() - 2);
  const Shape batch = broadcast_shapes(abatch, bbatch);
  Shape out_shape = batch;
  out_shape.push_back(n);
  out_shape.push_back(m);

  Tensor out = dispatch_float(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto av = a.data<T>();
    auto bv = b.data<T>();
    std::vector<T> out(static_cast<std::size_t>(numel(out_shape)));
    const auto& gemm = kernels::active<T>().gemm;
    const std::int64_t nbatch = numel(batch);
    const std::size_t nd = batch.size();
    // Per-batch element offsets, honoring broadcast of size-1 batch axes.
    Shape astr(nd, 0);
    Shape bstr(nd, 0);
    {
      const Shape as = strides_of(abatch);
      const Shape bs = strides_of(bbatch);
      for (std::size_t i = 0; i < abatch.size(); ++i) {
        astr[nd - abatch.size() + i] = abatch[i] == 1 ? 0 : as[i] * n * k;
      }
      for (std::size_t i = 0; i < bbatch.size(); ++i) {
        bstr[nd - bbatch.size() + i] = bbatch[i] == 1 ? 0 : bs[i] * k * m;
      }
    }
    std::vector<std::int64_t> idx(nd, 0);
    std::int64_t aoff = 0;
    std::int64_t boff = 0;
    for (std::int64_t bi = 0; bi < nbatch; ++bi) {
      gemm(n, m, k, av.data() + aoff, bv.data() + boff, out.data() + bi * n * m);
      for (std::size_t d = nd; d-- > 0;) {
        ++idx[d];
        aoff += astr[d];
        boff += bstr[d];
        if (idx[d] < batch[d]) break;
        aoff -= astr[d] * batch[d];
        boff -= bstr[d] * batch[d];
        idx[d] = 0;
      }
    }
    return Tensor(out_shape, std::move(out));
  });
  if (!a.tracked() && !b.tracked()) return out;
  const bool need_a = a.tracked();
  const bool need_b = b.tracked();
  return autodiff::record(
      std::move(out), {a, b},
      [a = a.detached(), b = b.detached(), need_a, need_b](const Tensor& g) {
        Tensor ga;
        Tensor gb;
        if (need_a) ga = sum_to(matmul(g, swap_last(b)), a.shape());
        if (need_b) gb = sum_to(matmul(swap_last(a), g), b.shape());
        return std::vector<Tensor>{ga, gb};
      });
}

namespace {

template <class T>
void softmax_rows(const T* x, T* y, const detail::AxisView& v, bool log_space) {
  std::vector<double> e(static_cast<std::size_t>(log_space ? 0 : v.extent));
  for (std::int64_t o = 0; o < v.outer; ++o) {
    for (std::int64_t i = 0; i < v.inner; ++i) {
      const std::int64_t base = o * v.extent * v.inner + i;
      T mx = std::numeric_limits<T>::lowest();
      for (std::int64_t k = 0; k < v.extent; ++k) mx = std::max(mx, x[base + k * v.inner]);
      double total = 0.0;
      if (log_space) {
        for (std::int64_t k = 0; k < v.extent; ++k) {
          total += std::exp(static_cast<double>(x[base + k * v.inner] - mx));
        }
        const T lse = static_cast<T>(std::log(total));
        for (std::int64_t k = 0; k < v.extent; ++k) {
          y[base + k * v.inner] = x[base + k * v.inner] - mx - lse;
        }
      } else {
        for (std::int64_t k = 0; k < v.extent; ++k) {
          e[static_cast<std::size_t>(k)] = std::exp(static_cast<double>(x[base + k * v.inner] - mx));
          total += e[static_cast<std::size_t>(k)];
        }
        for (std::int64_t k = 0; k < v.extent; ++k) {
          y[base + k * v.inner] = static_cast<T>(e[static_cast<std::size_t>(k)] / total);
        }
      }
    }
  }
}

Tensor softmax_impl(const Tensor& x, int axis, bool log_space) {
  require_float(x, log_space ? "log_softmax" : "softmax");
  const int ax = normalize_axis(axis, x.ndim());
  const auto v = axis_view(x.shape(), ax);
  Tensor y = dispatch_float(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    std::vector<T> out(static_cast<std::size_t>(x.numel()));
    softmax_rows<T>(x.data<T>().data(), out.data(), v, log_space);
    return Tensor(x.shape(), std::move(out));
  });
  if (!x.tracked()) return y;
  return autodiff::record(
      std::move(y), {x}, [yd = y.detached(), v, log_space](const Tensor& g) {
        return std::vector<Tensor>{dispatch_float(yd.dtype(), [&](auto tag) {
          using T = decltype(tag);
          auto yv = yd.data<T>();
          auto gv = g.data<T>();
          std::vector<T> out(yv.size());
          for (std::int64_t o = 0; o < v.outer; ++o) {
            for (std::int64_t i = 0; i < v.inner; ++i) {
              const std::int64_t base = o * v.extent * v.inner + i;
              double dot = 0.0;
              for (std::int64_t k = 0; k < v.extent; ++k) {
                const auto at = static_cast<std::size_t>(base + k * v.inner);
                dot += log_space ? static_cast<double>(gv[at])
                                 : static_cast<double>(gv[at]) * static_cast<double>(yv[at]);
              }
              for (std::int64_t k = 0; k < v.extent; ++k) {
                const auto at = static_cast<std::size_t>(base + k * v.inner);
                if (log_space) {
                  out[at] = static_cast<T>(gv[at] - std::exp(static_cast<double>(yv[at])) * dot);
                } else {
                  out[at] = static_cast<T>(static_cast<double>(yv[at]) *
                                           (static_cast<double>(gv[at]) - dot));
                }
              }
            }
          }
          return Tensor(yd.shape(), std::move(out));
        })};
      });
}

}  // namespace

Tensor softmax(const Tensor& x, int axis) { return softmax_impl(x, axis, false); }

Tensor log_softmax(const Tensor& x, int axis) { return softmax_impl(x, axis, true); }

}  // namespace prism
