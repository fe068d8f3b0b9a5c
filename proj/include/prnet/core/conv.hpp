#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "prnet/core/gemm.hpp"
#include "prnet/core/shape.hpp"

namespace prnet {

/// Resolved convolution geometry. Output extents must be integral; modern
/// frameworks floor instead, but silent truncation hides shape bugs.
struct ConvGeom {
  int64_t cin = 0, cout = 0, k = 0, stride = 1, pad = 0;
  int64_t hin = 0, win = 0, hout = 0, wout = 0;

  static ConvGeom resolve(const Shape& in, const Shape& weight, int64_t stride, int64_t pad) {
    if (stride < 1) throw GeometryError("conv2d: stride must be >= 1");
    if (pad < 0) throw GeometryError("conv2d: padding must be >= 0");
    if (weight.h != weight.w)
      throw DimensionError("conv2d: kernel must be square, got " + weight.str());
    if (in.c != weight.c)
      throw DimensionError("conv2d: input channels " + std::to_string(in.c) +
                           " != weight in-channels " + std::to_string(weight.c));
    ConvGeom g;
    g.cin = weight.c;
    g.cout = weight.n;
    g.k = weight.h;
    g.stride = stride;
    g.pad = pad;
    g.hin = in.h;
    g.win = in.w;
    const int64_t eh = in.h + 2 * pad - g.k;
    const int64_t ew = in.w + 2 * pad - g.k;
    if (eh < 0 || ew < 0 || eh % stride != 0 || ew % stride != 0)
      throw GeometryError("conv2d: non-integer output extent for input " + in.str() +
                          ", kernel " + std::to_string(g.k) + ", stride " +
                          std::to_string(stride) + ", pad " + std::to_string(pad));
    g.hout = eh / stride + 1;
    g.wout = ew / stride + 1;
    return g;
  }

  int64_t patch() const { return cin * k * k; }
  int64_t in_plane() const { return hin * win; }
  int64_t out_plane() const { return hout * wout; }
};

namespace detail {

// Output rows per im2col strip, sized to keep the scratch buffers modest.
inline int64_t conv_strip_rows(const ConvGeom& g, size_t bytes_per_cell) {
  const size_t budget = size_t(8) << 20;
  const size_t row_bytes = size_t(g.patch()) * size_t(g.wout) * bytes_per_cell;
  int64_t rows = row_bytes ? int64_t(budget / row_bytes) : g.hout;
  return std::clamp<int64_t>(rows, 1, g.hout);
}

// col[(ci*k*k) x (rows*wout)] for output rows [y0, y1) of one image.
// Stride-1 rows reduce to zero-fill plus one contiguous copy.
template <typename T>
void im2col_strip(const ConvGeom& g, const T* in, int64_t y0, int64_t y1, T* col) {
  const int64_t m = (y1 - y0) * g.wout;
  for (int64_t ci = 0; ci < g.cin; ++ci) {
    const T* plane = in + ci * g.in_plane();
    for (int64_t ky = 0; ky < g.k; ++ky)
      for (int64_t kx = 0; kx < g.k; ++kx) {
        T* dst = col + ((ci * g.k + ky) * g.k + kx) * m;
        if (g.stride == 1) {
          const int64_t x0 = std::max<int64_t>(0, g.pad - kx);
          const int64_t x1 = std::min<int64_t>(g.wout, g.win + g.pad - kx);
          for (int64_t oy = y0; oy < y1; ++oy) {
            const int64_t iy = oy - g.pad + ky;
            T* drow = dst + (oy - y0) * g.wout;
            if (iy < 0 || iy >= g.hin || x1 <= x0) {
              std::fill(drow, drow + g.wout, T(0));
              continue;
            }
            std::fill(drow, drow + x0, T(0));
            const T* srow = plane + iy * g.win + (x0 - g.pad + kx);
            std::copy(srow, srow + (x1 - x0), drow + x0);
            std::fill(drow + x1, drow + g.wout, T(0));
          }
        } else {
          for (int64_t oy = y0; oy < y1; ++oy) {
            const int64_t iy = oy * g.stride - g.pad + ky;
            T* drow = dst + (oy - y0) * g.wout;
            if (iy < 0 || iy >= g.hin) {
              std::fill(drow, drow + g.wout, T(0));
              continue;
            }
            const T* srow = plane + iy * g.win;
            for (int64_t ox = 0; ox < g.wout; ++ox) {
              const int64_t ix = ox * g.stride - g.pad + kx;
              drow[ox] = (ix >= 0 && ix < g.win) ? srow[ix] : T(0);
            }
          }
        }
      }
  }
}

// Scatter-add a column-layout gradient strip back onto the input gradient.
template <typename T>
void col2im_add_strip(const ConvGeom& g, const T* col, int64_t y0, int64_t y1, T* din) {
  const int64_t m = (y1 - y0) * g.wout;
  for (int64_t ci = 0; ci < g.cin; ++ci) {
    T* plane = din + ci * g.in_plane();
    for (int64_t ky = 0; ky < g.k; ++ky)
      for (int64_t kx = 0; kx < g.k; ++kx) {
        const T* src = col + ((ci * g.k + ky) * g.k + kx) * m;
        if (g.stride == 1) {
          const int64_t x0 = std::max<int64_t>(0, g.pad - kx);
          const int64_t x1 = std::min<int64_t>(g.wout, g.win + g.pad - kx);
          if (x1 <= x0) continue;
          for (int64_t oy = y0; oy < y1; ++oy) {
            const int64_t iy = oy - g.pad + ky;
            if (iy < 0 || iy >= g.hin) continue;
            const T* srow = src + (oy - y0) * g.wout + x0;
            T* drow = plane + iy * g.win + (x0 - g.pad + kx);
            const int64_t len = x1 - x0;
            for (int64_t t = 0; t < len; ++t) drow[t] += srow[t];
          }
        } else {
          for (int64_t oy = y0; oy < y1; ++oy) {
            const int64_t iy = oy * g.stride - g.pad + ky;
            if (iy < 0 || iy >= g.hin) continue;
            const T* srow = src + (oy - y0) * g.wout;
            T* irow = plane + iy * g.win;
            for (int64_t ox = 0; ox < g.wout; ++ox) {
              const int64_t ix = ox * g.stride - g.pad + kx;
              if (ix >= 0 && ix < g.win) irow[ix] += srow[ox];
            }
          }
        }
      }
  }
}

// C[M x N] (+)= A[M x K] * B[N x K]^T as lane-split dot products, so the
// reduction vectorizes without -ffast-math and stays deterministic.
template <typename T>
void gemm_nt_acc(int64_t M, int64_t N, int64_t K, const T* A, int64_t lda, const T* B,
                 int64_t ldb, T* C, int64_t ldc) {
  constexpr int64_t L = 16;  // partial-sum lanes
  constexpr int64_t JB = 4;
  for (int64_t i = 0; i < M; ++i) {
    const T* arow = A + i * lda;
    for (int64_t j0 = 0; j0 < N; j0 += JB) {
      const int64_t jn = std::min(JB, N - j0);
      T lanes[JB][L] = {};
      const int64_t kv = K - K % L;
      for (int64_t k = 0; k < kv; k += L)
        for (int64_t j = 0; j < jn; ++j) {
          const T* brow = B + (j0 + j) * ldb + k;
          const T* a = arow + k;
          for (int64_t l = 0; l < L; ++l) lanes[j][l] += a[l] * brow[l];
        }
      for (int64_t j = 0; j < jn; ++j) {
        T dot = T(0);
        for (int64_t l = 0; l < L; ++l) dot += lanes[j][l];
        for (int64_t k = kv; k < K; ++k) dot += arow[k] * B[(j0 + j) * ldb + k];
        C[i * ldc + j0 + j] += dot;
      }
    }
  }
}

}  // namespace detail

/// out[n] = weight * im2col(in[n]) + bias. Strip-tiled so scratch memory
/// stays bounded at any resolution; strips cover whole output rows, which
/// keeps each strip's output contiguous inside its channel plane.
template <typename T>
void conv2d_forward(const ConvGeom& g, int64_t batch, const T* in, const T* weight,
                    const T* bias, T* out) {
  const int64_t kk = g.patch();
  const bool direct = (g.k == 1 && g.stride == 1 && g.pad == 0);
  const int64_t strip = detail::conv_strip_rows(g, sizeof(T));
  std::vector<T> col;
  if (!direct) col.resize(size_t(kk * strip * g.wout));
  for (int64_t n = 0; n < batch; ++n) {
    const T* src = in + n * g.cin * g.in_plane();
    T* dst = out + n * g.cout * g.out_plane();
    if (direct) {
      // 1x1 stride-1: the input already is the column matrix.
      gemm_nn<T>(g.cout, g.out_plane(), kk, weight, src, dst, false);
    } else {
      for (int64_t y0 = 0; y0 < g.hout; y0 += strip) {
        const int64_t y1 = std::min(y0 + strip, g.hout);
        const int64_t m = (y1 - y0) * g.wout;
        detail::im2col_strip(g, src, y0, y1, col.data());
        gemm_nn_ld<T>(g.cout, m, kk, weight, kk, col.data(), m, dst + y0 * g.wout,
                      g.out_plane(), false);
      }
    }
    if (bias) {
      for (int64_t co = 0; co < g.cout; ++co) {
        const T b = bias[co];
        T* p = dst + co * g.out_plane();
        for (int64_t i = 0; i < g.out_plane(); ++i) p[i] += b;
      }
    }
  }
}

/// Gradients w.r.t. input, weight and bias. Any destination may be null to
/// skip that gradient. All destinations are accumulated into (+=).
template <typename T>
void conv2d_backward(const ConvGeom& g, int64_t batch, const T* in, const T* weight,
                     const T* dout, T* din, T* dweight, T* dbias) {
  const int64_t kk = g.patch();
  const bool direct = (g.k == 1 && g.stride == 1 && g.pad == 0);
  const int64_t strip = detail::conv_strip_rows(g, sizeof(T) * (din && dweight ? 2 : 1));
  std::vector<T> col, dcol, wt;
  if (dweight && !direct) col.resize(size_t(kk * strip * g.wout));
  if (din) {
    if (!direct) dcol.resize(size_t(kk * strip * g.wout));
    wt.resize(size_t(kk * g.cout));
    transpose(g.cout, kk, weight, wt.data());
  }
  for (int64_t n = 0; n < batch; ++n) {
    const T* src = in + n * g.cin * g.in_plane();
    const T* gout = dout + n * g.cout * g.out_plane();
    if (dbias) {
      for (int64_t co = 0; co < g.cout; ++co) {
        const T* p = gout + co * g.out_plane();
        T acc = T(0);
        for (int64_t i = 0; i < g.out_plane(); ++i) acc += p[i];
        dbias[co] += acc;
      }
    }
    if (!dweight && !din) continue;
    T* gin = din ? din + n * g.cin * g.in_plane() : nullptr;
    if (direct) {
      // dW += dout * in^T; din += W^T * dout
      if (dweight)
        detail::gemm_nt_acc<T>(g.cout, kk, g.out_plane(), gout, g.out_plane(), src,
                               g.in_plane(), dweight, kk);
      if (din)
        gemm_nn_ld<T>(kk, g.out_plane(), g.cout, wt.data(), g.cout, gout, g.out_plane(), gin,
                      g.in_plane(), true);
      continue;
    }
    for (int64_t y0 = 0; y0 < g.hout; y0 += strip) {
      const int64_t y1 = std::min(y0 + strip, g.hout);
      const int64_t m = (y1 - y0) * g.wout;
      if (dweight) {
        detail::im2col_strip(g, src, y0, y1, col.data());
        // dW[cout x kk] += dout_strip[cout x m] * col[kk x m]^T
        detail::gemm_nt_acc<T>(g.cout, kk, m, gout + y0 * g.wout, g.out_plane(), col.data(), m,
                               dweight, kk);
      }
      if (din) {
        // dcol[kk x m] = W^T[kk x cout] * dout_strip[cout x m]
        gemm_nn_ld<T>(kk, m, g.cout, wt.data(), g.cout, gout + y0 * g.wout, g.out_plane(),
                      dcol.data(), m, false);
        detail::col2im_add_strip(g, dcol.data(), y0, y1, gin);
      }
    }
  }
}

}  // namespace prnet
