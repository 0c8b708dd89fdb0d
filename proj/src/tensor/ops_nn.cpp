// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#include <limits>
#include <memory>

#include "ops_common.hpp"
#include "prism/tensor/kernels.hpp"

namespace prism {
namespace {

using detail::require_float;

struct ConvGeometry {
  std::int64_t n, h, w, c;     // input
  std::int64_t kh, kw, o;      // kernel
  std::int64_t oh, ow;         // output
  std::int64_t pad_top, pad_left;
  int stride;

  std::int64_t patches() const { return n * oh * ow; }
  std::int64_t patch_size() const { return kh * kw * c; }
  bool pointwise() const { return kh == 1 && kw == 1 && stride == 1; }
};

ConvGeometry conv_geometry(const Shape& xs, const Shape& ks, int stride, Padding padding) {
  if (xs.size() != 4 || ks.size() != 4) {
    throw ShapeError(fmt::format("conv2d: expected NHWC input and HWIO kernel, got {} and {}",
                                 to_string(xs), to_string(ks)));
  }
  if (ks[2] != xs[3]) {
    throw ShapeError(fmt::format("conv2d: kernel expects {} input channels, input has {}", ks[2],
                                 xs[3]));
  }
  if (stride < 1) throw ShapeError("conv2d: stride must be >= 1");
  ConvGeometry g{xs[0], xs[1], xs[2], xs[3], ks[0], ks[1], ks[3], 0, 0, 0, 0, stride};
  if (padding == Padding::same) {
    g.oh = (g.h + stride - 1) / stride;
    g.ow = (g.w + stride - 1) / stride;
    const std::int64_t ph = std::max<std::int64_t>((g.oh - 1) * stride + g.kh - g.h, 0);
    const std::int64_t pw = std::max<std::int64_t>((g.ow - 1) * stride + g.kw - g.w, 0);
    g.pad_top = ph / 2;
    g.pad_left = pw / 2;
  } else {
    if (g.h < g.kh || g.w < g.kw) {
      throw ShapeError("conv2d: kernel larger than input with valid padding");
    }
    g.oh = (g.h - g.kh) / stride + 1;
    g.ow = (g.w - g.kw) / stride + 1;
  }
  return g;
}

template <class T>
std::vector<T> im2col(const T* x, const ConvGeometry& g) {
  std::vector<T> cols(static_cast<std::size_t>(g.patches() * g.patch_size()), T(0));
  T* dst = cols.data();
  for (std::int64_t n = 0; n < g.n; ++n) {
    for (std::int64_t oy = 0; oy < g.oh; ++oy) {
      for (std::int64_t ox = 0; ox < g.ow; ++ox) {
        for (std::int64_t ky = 0; ky < g.kh; ++ky) {
          const std::int64_t iy = oy * g.stride - g.pad_top + ky;
          for (std::int64_t kx = 0; kx < g.kw; ++kx) {
            const std::int64_t ix = ox * g.stride - g.pad_left + kx;
            if (iy >= 0 && iy < g.h && ix >= 0 && ix < g.w) {
              const T* src = x + ((n * g.h + iy) * g.w + ix) * g.c;
              std::copy(src, src + g.c, dst);
            }
            dst += g.c;
          }
        }
      }
    }
  }
  return cols;
}

template <class T>
void col2im(const T* cols, const ConvGeometry& g, T* dx) {
  const T* src = cols;
  for (std::int64_t n = 0; n < g.n; ++n) {
    for (std::int64_t oy = 0; oy < g.oh; ++oy) {
      for (std::int64_t ox = 0; ox < g.ow; ++ox) {
        for (std::int64_t ky = 0; ky < g.kh; ++ky) {
          const std::int64_t iy = oy * g.stride - g.pad_top + ky;
          for (std::int64_t kx = 0; kx < g.kw; ++kx) {
            const std::int64_t ix = ox * g.stride - g.pad_left + kx;
            if (iy >= 0 && iy < g.h && ix >= 0 && ix < g.w) {
              T* out = dx + ((n * g.h + iy) * g.w + ix) * g.c;
              for (std::int64_t ch = 0; ch < g.c; ++ch) out[ch] += src[ch];
            }
            src += g.c;
          }
        }
      }
    }
  }
}

template <class T>
std::vector<T> transpose2d(const T* a, std::int64_t rows, std::int64_t cols) {
  std::vector<T> out(static_cast<std::size_t>(rows * cols));
  for (std::int64_t i = 0; i < rows; ++i) {
    for (std::int64_t j = 0; j < cols; ++j) out[j * rows + i] = a[i * cols + j];
  }
  return out;
}

struct PoolGeometry {
  std::int64_t n, h, w, c, oh, ow;
  int window, stride;
};

PoolGeometry pool_geometry(const Tensor& x, int window, int stride) {
  if (x.ndim() != 4) throw ShapeError("pool2d: expected NHWC input");
  if (window < 1 || stride < 1) throw ShapeError("pool2d: window and stride must be >= 1");
  const auto& s = x.shape();
  if (s[1] < window || s[2] < window) throw ShapeError("pool2d: window larger than input");
  return {s[0], s[1], s[2], s[3], (s[1] - window) / stride + 1, (s[2] - window) / stride + 1,
          window, stride};
}

}  // namespace

Padding parse_padding(std::string_view name) {
  if (name == "same" || name == "SAME") return Padding::same;
  if (name == "valid" || name == "VALID") return Padding::valid;
  throw ValueError(fmt::format("unknown padding '{}'", name));
}

Tensor conv2d(const Tensor& x, const Tensor& kernel, int stride, Padding padding) {
  require_float(x, "conv2d");
  detail::require_same_dtype(x, kernel, "conv2d");
  const ConvGeometry g = conv_geometry(x.shape(), kernel.shape(), stride, padding);
  const Shape out_shape{g.n, g.oh, g.ow, g.o};
  const bool keep_cols = x.tracked() || kernel.tracked();
  Tensor cols_tensor;
  Tensor out = dispatch_float(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto xv = x.data<T>();
    std::vector<T> out(static_cast<std::size_t>(numel(out_shape)));
    const auto& k = kernels::active<T>();
    if (g.pointwise()) {
      k.gemm(g.patches(), g.o, g.c, xv.data(), kernel.data<T>().data(), out.data());
      if (keep_cols) cols_tensor = x.with_shape({g.patches(), g.patch_size()});
    } else {
      std::vector<T> cols = im2col(xv.data(), g);
      k.gemm(g.patches(), g.o, g.patch_size(), cols.data(), kernel.data<T>().data(), out.data());
      if (keep_cols) cols_tensor = Tensor({g.patches(), g.patch_size()}, std::move(cols));
    }
    return Tensor(out_shape, std::move(out));
  });
  if (!keep_cols) return out;
  const bool need_x = x.tracked();
  const bool need_k = kernel.tracked();
  return autodiff::record(
      std::move(out), {x, kernel},
      [g, cols_tensor, kd = kernel.detached(), need_x, need_k](const Tensor& grad) {
        return dispatch_float(kd.dtype(), [&](auto tag) {
          using T = decltype(tag);
          const auto& k = kernels::active<T>();
          const T* gv = grad.data<T>().data();
          Tensor gx;
          Tensor gk;
          if (need_x) {
            const std::vector<T> kt = transpose2d(kd.data<T>().data(), g.patch_size(), g.o);
            std::vector<T> dcols(static_cast<std::size_t>(g.patches() * g.patch_size()));
            k.gemm(g.patches(), g.patch_size(), g.o, gv, kt.data(), dcols.data());
            if (g.pointwise()) {
              gx = Tensor({g.n, g.h, g.w, g.c}, std::move(dcols));
            } else {
              std::vector<T> dx(static_cast<std::size_t>(g.n * g.h * g.w * g.c), T(0));
              col2im(dcols.data(), g, dx.data());
              gx = Tensor({g.n, g.h, g.w, g.c}, std::move(dx));
            }
          }
          if (need_k) {
            const std::vector<T> ct =
                transpose2d(cols_tensor.data<T>().data(), g.patches(), g.patch_size());
            std::vector<T> dk(static_cast<std::size_t>(g.patch_size() * g.o));
            k.gemm(g.patch_size(), g.o, g.patches(), ct.data(), gv, dk.data());
            gk = Tensor(kd.shape(), std::move(dk));
          }
          return std::vector<Tensor>{gx, gk};
        });
      });
}

Tensor max_pool2d(const Tensor& x, int window, int stride) {
  require_float(x, "max_pool2d");
  const PoolGeometry p = pool_geometry(x, window, stride);
  const Shape out_shape{p.n, p.oh, p.ow, p.c};
  auto argmax = std::make_shared<std::vector<std::int64_t>>(static_cast<std::size_t>(numel(out_shape)));
  Tensor out = dispatch_float(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto xv = x.data<T>();
    std::vector<T> out(static_cast<std::size_t>(numel(out_shape)));
    std::size_t o = 0;
    for (std::int64_t n = 0; n < p.n; ++n) {
      for (std::int64_t oy = 0; oy < p.oh; ++oy) {
        for (std::int64_t ox = 0; ox < p.ow; ++ox) {
          for (std::int64_t ch = 0; ch < p.c; ++ch, ++o) {
            T best = std::numeric_limits<T>::lowest();
            std::int64_t best_at = 0;
            for (int ky = 0; ky < p.window; ++ky) {
              for (int kx = 0; kx < p.window; ++kx) {
                const std::int64_t at =
                    ((n * p.h + oy * p.stride + ky) * p.w + ox * p.stride + kx) * p.c + ch;
                if (xv[static_cast<std::size_t>(at)] > best) {
                  best = xv[static_cast<std::size_t>(at)];
                  best_at = at;
                }
              }
            }
            out[o] = best;
            (*argmax)[o] = best_at;
          }
        }
      }
    }
    return Tensor(out_shape, std::move(out));
  });
  if (!x.tracked()) return out;
  return autodiff::record(std::move(out), {x}, [argmax, in_shape = x.shape()](const Tensor& g) {
    return std::vector<Tensor>{dispatch_float(g.dtype(), [&](auto tag) {
      using T = decltype(tag);
      auto gv = g.data<T>();
      std::vector<T> dx(static_cast<std::size_t>(numel(in_shape)), T(0));
      for (std::size_t i = 0; i < gv.size(); ++i) dx[static_cast<std::size_t>((*argmax)[i])] += gv[i];
      return Tensor(in_shape, std::move(dx));
    })};
  });
}

Tensor avg_pool2d(const Tensor& x, int window, int stride) {
  require_float(x, "avg_pool2d");
  const PoolGeometry p = pool_geometry(x, window, stride);
  const Shape out_shape{p.n, p.oh, p.ow, p.c};
  const double scale = 1.0 / (window * window);
  Tensor out = dispatch_float(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto xv = x.data<T>();
    std::vector<T> out(static_cast<std::size_t>(numel(out_shape)), T(0));
    std::size_t o = 0;
    for (std::int64_t n = 0; n < p.n; ++n) {
      for (std::int64_t oy = 0; oy < p.oh; ++oy) {
        for (std::int64_t ox = 0; ox < p.ow; ++ox) {
          for (std::int64_t ch = 0; ch < p.c; ++ch, ++o) {
            double acc = 0.0;
            for (int ky = 0; ky < p.window; ++ky) {
              for (int kx = 0; kx < p.window; ++kx) {
                acc += xv[static_cast<std::size_t>(
                    ((n * p.h + oy * p.stride + ky) * p.w + ox * p.stride + kx) * p.c + ch)];
              }
            }
            out[o] = static_cast<T>(acc * scale);
          }
        }
      }
    }
    return Tensor(out_shape, std::move(out));
  });
  if (!x.tracked()) return out;
  return autodiff::record(std::move(out), {x}, [p, scale, in_shape = x.shape()](const Tensor& g) {
    return std::vector<Tensor>{dispatch_float(g.dtype(), [&](auto tag) {
      using T = decltype(tag);
      auto gv = g.data<T>();
      std::vector<T> dx(static_cast<std::size_t>(numel(in_shape)), T(0));
      std::size_t o = 0;
      for (std::int64_t n = 0; n < p.n; ++n) {
        for (std::int64_t oy = 0; oy < p.oh; ++oy) {
          for (std::int64_t ox = 0; ox < p.ow; ++ox) {
            for (std::int64_t ch = 0; ch < p.c; ++ch, ++o) {
              const T share = static_cast<T>(gv[o] * scale);
              for (int ky = 0; ky < p.window; ++ky) {
                for (int kx = 0; kx < p.window; ++kx) {
                  dx[static_cast<std::size_t>(
                      ((n * p.h + oy * p.stride + ky) * p.w + ox * p.stride + kx) * p.c + ch)] +=
                      share;
                }
              }
            }
          }
        }
      }
      return Tensor(in_shape, std::move(dx));
    })};
  });
}

Tensor upsample_nearest(const Tensor& x, int factor) {
  require_float(x, "upsample_nearest");
  if (x.ndim() != 4) throw ShapeError("upsample_nearest: expected NHWC input");
  if (factor < 1) throw ShapeError("upsample_nearest: factor must be >= 1");
  const auto& s = x.shape();
  const std::int64_t n = s[0], h = s[1], w = s[2], c = s[3];
  const Shape out_shape{n, h * factor, w * factor, c};
  Tensor out = dispatch_float(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto xv = x.data<T>();
    std::vector<T> out(static_cast<std::size_t>(numel(out_shape)));
    T* dst = out.data();
    for (std::int64_t b = 0; b < n; ++b) {
      for (std::int64_t y = 0; y < h * factor; ++y) {
        for (std::int64_t xx = 0; xx < w * factor; ++xx) {
          const T* src = xv.data() + ((b * h + y / factor) * w + xx / factor) * c;
          dst = std::copy(src, src + c, dst);
        }
      }
    }
    return Tensor(out_shape, std::move(out));
  });
  if (!x.tracked()) return out;
  return autodiff::record(std::move(out), {x}, [factor, in_shape = s](const Tensor& g) {
    return std::vector<Tensor>{dispatch_float(g.dtype(), [&](auto tag) {
      using T = decltype(tag);
      auto gv = g.data<T>();
      const std::int64_t n = in_shape[0], h = in_shape[1], w = in_shape[2], c = in_shape[3];
      std::vector<T> dx(static_cast<std::size_t>(numel(in_shape)), T(0));
      const T* src = gv.data();
      for (std::int64_t b = 0; b < n; ++b) {
        for (std::int64_t y = 0; y < h * factor; ++y) {
          for (std::int64_t xx = 0; xx < w * factor; ++xx) {
            T* out = dx.data() + ((b * h + y / factor) * w + xx / factor) * c;
            for (std::int64_t ch = 0; ch < c; ++ch) out[ch] += *src++;
          }
        }
      }
      return Tensor(in_shape, std::move(dx));
    })};
  });
}

}  // namespace prism
