// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>

#include "ops_common.hpp"
#include "prism/tensor/kernels.hpp"

namespace prism {
namespace {

using detail::require_float;
using detail::require_same_dtype;

// Broadcast strides of `shape` embedded in rank `nd` (0 on broadcast axes).
Shape broadcast_strides(const Shape& shape, std::size_t nd) {
  Shape strides(nd, 0);
  const Shape own = strides_of(shape);
  const std::size_t offset = nd - shape.size();
  for (std::size_t i = 0; i < shape.size(); ++i) {
    strides[offset + i] = shape[i] == 1 ? 0 : own[i];
  }
  return strides;
}

// True when `small` (ignoring leading ones) equals the trailing dims of `big`.
bool is_suffix(const Shape& small, const Shape& big) {
  std::size_t start = 0;
  while (start < small.size() && small[start] == 1) ++start;
  const std::size_t len = small.size() - start;
  if (len > big.size()) return false;
  for (std::size_t i = 0; i < len; ++i) {
    if (small[start + i] != big[big.size() - len + i]) return false;
  }
  return true;
}

template <class T, class F>
void broadcast_loop(const T* a, const Shape& as, const T* b, const Shape& bs, T* out,
                    const Shape& os, F f) {
  const std::size_t nd = os.size();
  const Shape sa = broadcast_strides(as, nd);
  const Shape sb = broadcast_strides(bs, nd);
  const std::int64_t total = numel(os);
  if (nd == 0) {
    out[0] = f(a[0], b[0]);
    return;
  }
  std::vector<std::int64_t> idx(nd, 0);
  std::int64_t oa = 0;
  std::int64_t ob = 0;
  const std::int64_t last = os[nd - 1];
  const std::int64_t la = sa[nd - 1];
  const std::int64_t lb = sb[nd - 1];
  for (std::int64_t o = 0; o < total; o += last) {
    for (std::int64_t j = 0; j < last; ++j) {
      out[o + j] = f(a[oa + j * la], b[ob + j * lb]);
    }
    // Advance the multi-index over all but the last axis.
    for (std::size_t d = nd - 1; d-- > 0;) {
      ++idx[d];
      oa += sa[d];
      ob += sb[d];
      if (idx[d] < os[d]) break;
      oa -= sa[d] * os[d];
      ob -= sb[d] * os[d];
      idx[d] = 0;
    }
  }
}

template <class T>
using KernelFn = void (*)(std::int64_t, const T*, const T*, T*);

template <class T, class F>
std::vector<T> binary_values(const Tensor& a, const Tensor& b, const Shape& os, F f,
                             KernelFn<T> kernel) {
  auto av = a.data<T>();
  auto bv = b.data<T>();
  std::vector<T> out(static_cast<std::size_t>(numel(os)));
  const std::int64_t n = numel(os);
  if (a.shape() == b.shape()) {
    if (kernel != nullptr) {
      kernel(n, av.data(), bv.data(), out.data());
    } else {
      for (std::int64_t i = 0; i < n; ++i) out[i] = f(av[i], bv[i]);
    }
  } else if (b.numel() == 1 && a.shape() == os) {
    const T s = bv[0];
    for (std::int64_t i = 0; i < n; ++i) out[i] = f(av[i], s);
  } else if (a.numel() == 1 && b.shape() == os) {
    const T s = av[0];
    for (std::int64_t i = 0; i < n; ++i) out[i] = f(s, bv[i]);
  } else if (a.shape() == os && is_suffix(b.shape(), os) && b.numel() > 0) {
    const std::int64_t inner = b.numel();
    for (std::int64_t o = 0; o < n; o += inner) {
      if (kernel != nullptr) {
        kernel(inner, av.data() + o, bv.data(), out.data() + o);
      } else {
        for (std::int64_t j = 0; j < inner; ++j) out[o + j] = f(av[o + j], bv[j]);
      }
    }
  } else if (b.shape() == os && is_suffix(a.shape(), os) && a.numel() > 0) {
    const std::int64_t inner = a.numel();
    for (std::int64_t o = 0; o < n; o += inner) {
      if (kernel != nullptr) {
        kernel(inner, av.data(), bv.data() + o, out.data() + o);
      } else {
        for (std::int64_t j = 0; j < inner; ++j) out[o + j] = f(av[j], bv[o + j]);
      }
    }
  } else if (n > 0) {
    broadcast_loop(av.data(), a.shape(), bv.data(), b.shape(), out.data(), os, f);
  }
  return out;
}

Tensor binary_forward(BinaryOp op, const Tensor& a, const Tensor& b) {
  require_same_dtype(a, b, "elementwise");
  const Shape os = broadcast_shapes(a.shape(), b.shape());
  return dispatch(a.dtype(), [&](auto tag) -> Tensor {
    using T = decltype(tag);
    KernelFn<T> kernel = nullptr;
    if constexpr (std::is_floating_point_v<T>) {
      const auto& k = kernels::active<T>();
      kernel = op == BinaryOp::add ? k.add : op == BinaryOp::sub ? k.sub
             : op == BinaryOp::mul ? k.mul : nullptr;
    }
    switch (op) {
      case BinaryOp::add:
        return Tensor(os, binary_values<T>(a, b, os, [](T x, T y) { return T(x + y); }, kernel));
      case BinaryOp::sub:
        return Tensor(os, binary_values<T>(a, b, os, [](T x, T y) { return T(x - y); }, kernel));
      case BinaryOp::mul:
        return Tensor(os, binary_values<T>(a, b, os, [](T x, T y) { return T(x * y); }, kernel));
      case BinaryOp::div:
        return Tensor(os, binary_values<T>(a, b, os, [](T x, T y) { return T(x / y); }, nullptr));
    }
    throw ValueError("unknown binary op");
  });
}

template <class T, class F>
Tensor map_unary(const Tensor& x, F f) {
  auto xv = x.data<T>();
  std::vector<T> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
  return Tensor(x.shape(), std::move(out));
}

// out_i = f(x_i, y_i, g_i), where y is the forward output.
template <class F>
Tensor unary_grad(const Tensor& x, const Tensor& y, const Tensor& g, F f) {
  return dispatch_float(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto xv = x.data<T>();
    auto yv = y.data<T>();
    auto gv = g.data<T>();
    std::vector<T> out(xv.size());
    for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i], yv[i], gv[i]);
    return Tensor(x.shape(), std::move(out));
  });
}

constexpr double kSqrt2OverPi = 0.7978845608028654;
constexpr double kGeluCubic = 0.044715;

}  // namespace

Tensor elementwise(BinaryOp op, const Tensor& a, const Tensor& b) {
  if (!a.defined() || !b.defined()) {
    throw ValueError("elementwise: undefined operand");
  }
  Tensor out = binary_forward(op, a, b);
  if (!is_float(a.dtype()) || !(a.tracked() || b.tracked())) {
    return out;
  }
  const bool need_a = a.tracked();
  const bool need_b = b.tracked();
  const Shape as = a.shape();
  const Shape bs = b.shape();
  autodiff::BackwardFn backward;
  switch (op) {
    case BinaryOp::add:
      backward = [as, bs, need_a, need_b](const Tensor& g) {
        return std::vector<Tensor>{need_a ? sum_to(g, as) : Tensor(),
                                   need_b ? sum_to(g, bs) : Tensor()};
      };
      break;
    case BinaryOp::sub:
      backward = [as, bs, need_a, need_b](const Tensor& g) {
        return std::vector<Tensor>{need_a ? sum_to(g, as) : Tensor(),
                                   need_b ? sum_to(neg(g), bs) : Tensor()};
      };
      break;
    case BinaryOp::mul:
      backward = [a = a.detached(), b = b.detached(), need_a, need_b](const Tensor& g) {
        return std::vector<Tensor>{need_a ? sum_to(mul(g, b), a.shape()) : Tensor(),
                                   need_b ? sum_to(mul(g, a), b.shape()) : Tensor()};
      };
      break;
    case BinaryOp::div:
      backward = [a = a.detached(), b = b.detached(), need_a, need_b](const Tensor& g) {
        Tensor ga;
        Tensor gb;
        if (need_a) ga = sum_to(div(g, b), a.shape());
        if (need_b) gb = sum_to(neg(div(mul(g, a), mul(b, b))), b.shape());
        return std::vector<Tensor>{ga, gb};
      };
      break;
  }
  return autodiff::record(std::move(out), {a, b}, std::move(backward));
}

Tensor elementwise(UnaryOp op, const Tensor& x) {
  if (op == UnaryOp::neg && (x.dtype() == DType::i32)) {
    return map_unary<std::int32_t>(x, [](std::int32_t v) { return -v; });
  }
  require_float(x, "elementwise");
  Tensor y = dispatch_float(x.dtype(), [&](auto tag) -> Tensor {
    using T = decltype(tag);
    switch (op) {
      case UnaryOp::neg:
        return map_unary<T>(x, [](T v) { return -v; });
      case UnaryOp::relu: {
        auto xv = x.data<T>();
        std::vector<T> out(xv.size());
        kernels::active<T>().relu(static_cast<std::int64_t>(xv.size()), xv.data(), out.data());
        return Tensor(x.shape(), std::move(out));
      }
      case UnaryOp::gelu:
        return map_unary<T>(x, [](T v) {
          const T inner = T(kSqrt2OverPi) * (v + T(kGeluCubic) * v * v * v);
          return T(0.5) * v * (T(1) + std::tanh(inner));
        });
      case UnaryOp::exp:
        return map_unary<T>(x, [](T v) { return std::exp(v); });
      case UnaryOp::log:
        return map_unary<T>(x, [](T v) { return std::log(v); });
      case UnaryOp::sigmoid:
        return map_unary<T>(x, [](T v) {
          // Branches keep exp() from overflowing for large |v|.
          if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
          const T e = std::exp(v);
          return e / (T(1) + e);
        });
      case UnaryOp::tanh:
        return map_unary<T>(x, [](T v) { return std::tanh(v); });
      case UnaryOp::sqrt:
        return map_unary<T>(x, [](T v) { return std::sqrt(v); });
      case UnaryOp::square:
        return map_unary<T>(x, [](T v) { return v * v; });
      case UnaryOp::abs:
        return map_unary<T>(x, [](T v) { return std::abs(v); });
    }
    throw ValueError("unknown unary op");
  });
  if (!x.tracked()) {
    return y;
  }
  autodiff::BackwardFn backward;
  const Tensor xd = x.detached();
  const Tensor yd = y.detached();
  switch (op) {
    case UnaryOp::neg:
      backward = [](const Tensor& g) { return std::vector<Tensor>{neg(g)}; };
      break;
    case UnaryOp::relu:
      backward = [xd](const Tensor& g) {
        return std::vector<Tensor>{dispatch_float(xd.dtype(), [&](auto tag) {
          using T = decltype(tag);
          auto xv = xd.data<T>();
          std::vector<T> out(xv.size());
          kernels::active<T>().relu_grad(static_cast<std::int64_t>(xv.size()), xv.data(),
                                         g.data<T>().data(), out.data());
          return Tensor(xd.shape(), std::move(out));
        })};
      };
      break;
    case UnaryOp::gelu:
      backward = [xd, yd](const Tensor& g) {
        return std::vector<Tensor>{unary_grad(xd, yd, g, [](auto v, auto, auto gv) {
          using T = decltype(v);
          const T inner = T(kSqrt2OverPi) * (v + T(kGeluCubic) * v * v * v);
          const T t = std::tanh(inner);
          const T dinner = T(kSqrt2OverPi) * (T(1) + T(3 * kGeluCubic) * v * v);
          return gv * (T(0.5) * (T(1) + t) + T(0.5) * v * (T(1) - t * t) * dinner);
        })};
      };
      break;
    case UnaryOp::exp:
      backward = [xd, yd](const Tensor& g) {
        return std::vector<Tensor>{
            unary_grad(xd, yd, g, [](auto, auto yv, auto gv) { return gv * yv; })};
      };
      break;
    case UnaryOp::log:
      backward = [xd, yd](const Tensor& g) {
        return std::vector<Tensor>{
            unary_grad(xd, yd, g, [](auto v, auto, auto gv) { return gv / v; })};
      };
      break;
    case UnaryOp::sigmoid:
      backward = [xd, yd](const Tensor& g) {
        return std::vector<Tensor>{unary_grad(xd, yd, g, [](auto, auto yv, auto gv) {
          return gv * yv * (decltype(yv)(1) - yv);
        })};
      };
      break;
    case UnaryOp::tanh:
      backward = [xd, yd](const Tensor& g) {
        return std::vector<Tensor>{unary_grad(xd, yd, g, [](auto, auto yv, auto gv) {
          return gv * (decltype(yv)(1) - yv * yv);
        })};
      };
      break;
    case UnaryOp::sqrt:
      backward = [xd, yd](const Tensor& g) {
        return std::vector<Tensor>{unary_grad(xd, yd, g, [](auto, auto yv, auto gv) {
          return gv * decltype(yv)(0.5) / yv;
        })};
      };
      break;
    case UnaryOp::square:
      backward = [xd, yd](const Tensor& g) {
        return std::vector<Tensor>{unary_grad(xd, yd, g, [](auto v, auto, auto gv) {
          return gv * decltype(v)(2) * v;
        })};
      };
      break;
    case UnaryOp::abs:
      backward = [xd, yd](const Tensor& g) {
        return std::vector<Tensor>{unary_grad(xd, yd, g, [](auto v, auto, auto gv) {
          using T = decltype(v);
          return v > T(0) ? gv : v < T(0) ? -gv : T(0);
        })};
      };
      break;
  }
  return autodiff::record(std::move(y), {x}, std::move(backward));
}

Tensor add(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::add, a, b); }
Tensor sub(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::sub, a, b); }
Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::mul, a, b); }
Tensor div(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::div, a, b); }

Tensor neg(const Tensor& x) { return elementwise(UnaryOp::neg, x); }
Tensor relu(const Tensor& x) { return elementwise(UnaryOp::relu, x); }
Tensor gelu(const Tensor& x) { return elementwise(UnaryOp::gelu, x); }
Tensor exp(const Tensor& x) { return elementwise(UnaryOp::exp, x); }
Tensor log(const Tensor& x) { return elementwise(UnaryOp::log, x); }
Tensor sigmoid(const Tensor& x) { return elementwise(UnaryOp::sigmoid, x); }
Tensor tanh(const Tensor& x) { return elementwise(UnaryOp::tanh, x); }
Tensor sqrt(const Tensor& x) { return elementwise(UnaryOp::sqrt, x); }
Tensor square(const Tensor& x) { return elementwise(UnaryOp::square, x); }
Tensor abs(const Tensor& x) { return elementwise(UnaryOp::abs, x); }

Tensor scalar_like(const Tensor& like, double value) { return Tensor::scalar(value, like.dtype()); }
Tensor zeros_like(const Tensor& x) { return Tensor::zeros(x.shape(), x.dtype()); }
Tensor ones_like(const Tensor& x) { return Tensor::ones(x.shape(), x.dtype()); }

Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }
Tensor operator-(const Tensor& x) { return neg(x); }
Tensor operator+(const Tensor& a, double b) { return add(a, scalar_like(a, b)); }
Tensor operator-(const Tensor& a, double b) { return sub(a, scalar_like(a, b)); }
Tensor operator*(const Tensor& a, double b) { return mul(a, scalar_like(a, b)); }
Tensor operator/(const Tensor& a, double b) { return div(a, scalar_like(a, b)); }
Tensor operator*(double a, const Tensor& b) { return mul(scalar_like(b, a), b); }
Tensor operator-(double a, const Tensor& b) { return sub(scalar_like(b, a), b); }

namespace detail {

Tensor materialize_broadcast(const Tensor& x, const Shape& shape) {
  if (x.shape() == shape) return x.detached();
  const Shape check = broadcast_shapes(x.shape(), shape);
  if (check != shape) {
    throw ShapeError(
        fmt::format("cannot broadcast {} to {}", to_string(x.shape()), to_string(shape)));
  }
  return dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto xv = x.data<T>();
    std::vector<T> out(static_cast<std::size_t>(numel(shape)));
    if (!out.empty()) {
      const std::vector<T> zero(1, T(0));
      broadcast_loop(xv.data(), x.shape(), zero.data(), Shape{}, out.data(), shape,
                     [](T v, T) { return v; });
    }
    return Tensor(shape, std::move(out));
  });
}

}  // namespace detail

}  // namespace prism
