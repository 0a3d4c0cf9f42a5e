#pragma once

// Raw dense kernels behind the differentiable ops. All tensors are row-major
// [C, D, H, W] volumes; convolution is cross-correlation with stride 1.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fpp/error.hpp"
#include "fpp/tensor.hpp"

namespace fpp {

using Padding3 = std::array<std::size_t, 3>;
using Window3 = std::array<std::size_t, 3>;

struct Conv3dGeometry {
  std::size_t cin, d, h, w;
  std::size_t cout, kd, kh, kw;
  std::size_t pd, ph, pw;
  std::size_t od, oh, ow;
};

template <class T>
Conv3dGeometry conv3d_geometry(const Tensor<T>& input, const Tensor<T>& kernels, const Tensor<T>& bias,
                               const Padding3& pad) {
  if (input.rank() != 4) throw ShapeError("conv3d", -1, "input must be [C,D,H,W], got " + shape_string(input.shape()));
  if (kernels.rank() != 5) {
    throw ShapeError("conv3d", -1, "kernels must be [Cout,Cin,kD,kH,kW], got " + shape_string(kernels.shape()));
  }
  if (kernels.dim(1) != input.dim(0)) {
    throw ShapeError("conv3d", 0,
                     "input channels " + std::to_string(input.dim(0)) + " != kernel input channels " +
                         std::to_string(kernels.dim(1)));
  }
  if (bias.rank() != 1 || bias.dim(0) != kernels.dim(0)) {
    throw ShapeError("conv3d", 0, "bias " + shape_string(bias.shape()) + " does not match " +
                                      std::to_string(kernels.dim(0)) + " output channels");
  }
  Conv3dGeometry g{};
  g.cin = input.dim(0);
  g.d = input.dim(1);
  g.h = input.dim(2);
  g.w = input.dim(3);
  g.cout = kernels.dim(0);
  g.kd = kernels.dim(2);
  g.kh = kernels.dim(3);
  g.kw = kernels.dim(4);
  g.pd = pad[0];
  g.ph = pad[1];
  g.pw = pad[2];
  const std::array<std::size_t, 3> n{g.d, g.h, g.w}, k{g.kd, g.kh, g.kw};
  for (int a = 0; a < 3; ++a) {
    if (k[a] > n[a] + 2 * pad[a]) {
      throw ShapeError("conv3d", a + 1,
                       "kernel extent " + std::to_string(k[a]) + " exceeds padded length " +
                           std::to_string(n[a] + 2 * pad[a]));
    }
  }
  g.od = g.d + 2 * g.pd - g.kd + 1;
  g.oh = g.h + 2 * g.ph - g.kh + 1;
  g.ow = g.w + 2 * g.pw - g.kw + 1;
  return g;
}

namespace detail {

// Output index range [lo, hi) for which o + k - pad lands inside [0, n).
inline void valid_range(std::size_t n, std::size_t k, std::size_t pad, std::size_t out_len, std::size_t& lo,
                        std::size_t& hi) {
  lo = pad > k ? pad - k : 0;
  const std::ptrdiff_t h = static_cast<std::ptrdiff_t>(n) + static_cast<std::ptrdiff_t>(pad) -
                           static_cast<std::ptrdiff_t>(k);
  hi = h <= 0 ? 0 : std::min(out_len, static_cast<std::size_t>(h));
  if (hi < lo) hi = lo;
}

// Dot product with a SIMD reduction (needs -fopenmp-simd to vectorize). The
// summation order is fixed for a given build. Kept out of line: inlined into
// the conv loop nest, GCC generates much slower code for it.
template <class T>
[[gnu::noinline]] T dot_lanes(const T* a, const T* b, std::size_t n) {
  T acc{0};
#pragma omp simd reduction(+ : acc)
  for (std::size_t q = 0; q < n; ++q) acc += a[q] * b[q];
  return acc;
}

// Copies [C, D, H, W] into a lat/lon zero-padded buffer [C, D, H+2ph, W+2pw].
template <class T>
std::vector<T> pad_planes(const Conv3dGeometry& g, std::size_t channels, const T* in) {
  const std::size_t hp = g.h + 2 * g.ph, wp = g.w + 2 * g.pw;
  std::vector<T> out(channels * g.d * hp * wp, T{0});
  for (std::size_t c = 0; c < channels * g.d; ++c) {
    for (std::size_t i = 0; i < g.h; ++i) {
      const T* src = in + (c * g.h + i) * g.w;
      std::copy(src, src + g.w, out.begin() + static_cast<std::ptrdiff_t>((c * hp + i + g.ph) * wp + g.pw));
    }
  }
  return out;
}

}  // namespace detail

// The kernels below work on lat/lon-padded planes: an output plane is held
// with row stride Wp = W + 2pw, so every (kh, kw) tap is one contiguous
// multiply-add run over the plane. Columns ow >= Wo of that layout are
// scratch and never read back.

template <class T>
void conv3d_forward(const Conv3dGeometry& g, const T* in, const T* ker, const T* bias, T* out) {
  const std::size_t hp = g.h + 2 * g.ph, wp = g.w + 2 * g.pw;
  const std::size_t pplane = hp * wp, oplane = g.oh * wp;
  const std::size_t run = oplane - (g.kw - 1);
  const std::vector<T> xp = detail::pad_planes(g, g.cin, in);
  std::vector<T> acc(g.od * oplane);
  for (std::size_t co = 0; co < g.cout; ++co) {
    std::fill(acc.begin(), acc.end(), bias[co]);
    for (std::size_t ci = 0; ci < g.cin; ++ci) {
      const T* kk = ker + (co * g.cin + ci) * g.kd * g.kh * g.kw;
      for (std::size_t a = 0; a < g.kd; ++a) {
        std::size_t d0, d1;
        detail::valid_range(g.d, a, g.pd, g.od, d0, d1);
        for (std::size_t od = d0; od < d1; ++od) {
          const T* x = xp.data() + (ci * g.d + od + a - g.pd) * pplane;
          T* o = acc.data() + od * oplane;
          for (std::size_t b = 0; b < g.kh; ++b) {
            for (std::size_t c = 0; c < g.kw; ++c) {
              const T wv = kk[(a * g.kh + b) * g.kw + c];
              const T* xs = x + b * wp + c;
              for (std::size_t q = 0; q < run; ++q) o[q] += wv * xs[q];
            }
          }
        }
      }
    }
    T* dst = out + co * g.od * g.oh * g.ow;
    for (std::size_t od = 0; od < g.od; ++od) {
      for (std::size_t oh = 0; oh < g.oh; ++oh) {
        const T* src = acc.data() + od * oplane + oh * wp;
        std::copy(src, src + g.ow, dst + (od * g.oh + oh) * g.ow);
      }
    }
  }
}

/// Accumulates gradients of conv3d. Any of gin/gker/gbias may be null to skip.
template <class T>
void conv3d_backward(const Conv3dGeometry& g, const T* in, const T* ker, const T* gout, T* gin, T* gker,
                     T* gbias) {
  const std::size_t hp = g.h + 2 * g.ph, wp = g.w + 2 * g.pw;
  const std::size_t pplane = hp * wp, oplane = g.oh * wp;
  const std::size_t run = oplane - (g.kw - 1);
  const std::size_t ovol = g.od * g.oh * g.ow;
  std::vector<T> xp;
  if (gker) xp = detail::pad_planes(g, g.cin, in);
  std::vector<T> gxp;
  if (gin) gxp.assign(g.cin * g.d * pplane, T{0});
  std::vector<T> go(g.od * oplane, T{0});  // gout in padded-row layout, zero scratch columns
  for (std::size_t co = 0; co < g.cout; ++co) {
    const T* src = gout + co * ovol;
    if (gbias) {
      T s{0};
      for (std::size_t i = 0; i < ovol; ++i) s += src[i];
      gbias[co] += s;
    }
    if (!gin && !gker) continue;
    for (std::size_t od = 0; od < g.od; ++od) {
      for (std::size_t oh = 0; oh < g.oh; ++oh) {
        std::copy(src + (od * g.oh + oh) * g.ow, src + (od * g.oh + oh + 1) * g.ow,
                  go.begin() + static_cast<std::ptrdiff_t>(od * oplane + oh * wp));
      }
    }
    for (std::size_t ci = 0; ci < g.cin; ++ci) {
      const std::size_t koff = (co * g.cin + ci) * g.kd * g.kh * g.kw;
      for (std::size_t a = 0; a < g.kd; ++a) {
        std::size_t d0, d1;
        detail::valid_range(g.d, a, g.pd, g.od, d0, d1);
        for (std::size_t od = d0; od < d1; ++od) {
          const std::size_t ioff = (ci * g.d + od + a - g.pd) * pplane;
          const T* gq = go.data() + od * oplane;
          for (std::size_t b = 0; b < g.kh; ++b) {
            for (std::size_t c = 0; c < g.kw; ++c) {
              const std::size_t kidx = koff + (a * g.kh + b) * g.kw + c;
              const std::size_t shift = ioff + b * wp + c;
              if (gker) {
                gker[kidx] += detail::dot_lanes(gq, xp.data() + shift, run);
              }
              if (gin) {
                const T wv = ker[kidx];
                T* gs = gxp.data() + shift;
                for (std::size_t q = 0; q < run; ++q) gs[q] += wv * gq[q];
              }
            }
          }
        }
      }
    }
  }
  if (gin) {
    for (std::size_t c = 0; c < g.cin * g.d; ++c) {
      for (std::size_t i = 0; i < g.h; ++i) {
        const T* s = gxp.data() + (c * hp + i + g.ph) * wp + g.pw;
        T* d = gin + (c * g.h + i) * g.w;
        for (std::size_t j = 0; j < g.w; ++j) d[j] += s[j];
      }
    }
  }
}

/// Non-overlapping max pooling (stride = window, floor on remainders).
/// `argmax` receives the flat input index selected for each output cell; the
/// first maximal element in scan order wins ties.
template <class T>
Tensor<T> maxpool3d_forward(const Tensor<T>& input, const Window3& window, std::vector<std::uint32_t>& argmax) {
  if (input.rank() != 4) throw ShapeError("maxpool3d", -1, "input must be [C,D,H,W], got " + shape_string(input.shape()));
  for (int a = 0; a < 3; ++a) {
    if (window[a] == 0) throw ShapeError("maxpool3d", a + 1, "window must be positive");
    if (input.dim(a + 1) < window[a]) {
      throw ShapeError("maxpool3d", a + 1,
                       "length " + std::to_string(input.dim(a + 1)) + " is smaller than window " +
                           std::to_string(window[a]));
    }
  }
  const std::size_t C = input.dim(0), D = input.dim(1), H = input.dim(2), W = input.dim(3);
  const std::size_t od = D / window[0], oh = H / window[1], ow = W / window[2];
  Tensor<T> out(Shape{C, od, oh, ow});
  argmax.assign(out.size(), 0);
  const T* x = input.data().data();
  T* o = out.data().data();
  std::size_t oi = 0;
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t i = 0; i < od; ++i) {
      for (std::size_t j = 0; j < oh; ++j) {
        for (std::size_t k = 0; k < ow; ++k, ++oi) {
          std::size_t best = ((c * D + i * window[0]) * H + j * window[1]) * W + k * window[2];
          T bv = x[best];
          for (std::size_t a = 0; a < window[0]; ++a) {
            for (std::size_t b = 0; b < window[1]; ++b) {
              const std::size_t row = ((c * D + i * window[0] + a) * H + j * window[1] + b) * W + k * window[2];
              for (std::size_t e = 0; e < window[2]; ++e) {
                if (x[row + e] > bv) {
                  bv = x[row + e];
                  best = row + e;
                }
              }
            }
          }
          o[oi] = bv;
          argmax[oi] = static_cast<std::uint32_t>(best);
        }
      }
    }
  }
  return out;
}

template <class T>
void maxpool3d_backward(std::span<const std::uint32_t> argmax, const T* gout, T* gin) {
  for (std::size_t i = 0; i < argmax.size(); ++i) gin[argmax[i]] += gout[i];
}

}  // namespace fpp
