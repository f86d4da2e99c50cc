#include "matteforge/engine/kernels.hpp"

#include <algorithm>
#include <vector>

namespace mf::kernels {
namespace {

constexpr std::size_t kColumnBlock = 256;

// Eight independent partial sums in a fixed order: vectorizable and still
// deterministic.
template <typename T>
T dot(const T* a, const T* b, std::size_t n) {
  T acc[8] = {};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (std::size_t j = 0; j < 8; ++j) acc[j] += a[i + j] * b[i + j];
  }
  T tail = 0;
  for (; i < n; ++i) tail += a[i] * b[i];
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail;
}

template <typename T>
void im2col(const ConvGeometry& g, const T* img, T* col) {
  const std::size_t oh = g.out_h(), ow = g.out_w();
  const std::size_t rows = g.patch_size();
  const long pad = static_cast<long>(g.padding);
#pragma omp parallel for schedule(static)
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t kx = r % g.kernel_w;
    const std::size_t ky = (r / g.kernel_w) % g.kernel_h;
    const std::size_t c = r / (g.kernel_w * g.kernel_h);
    const T* plane = img + c * g.in_h * g.in_w;
    T* dst = col + r * oh * ow;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      const long iy = static_cast<long>(oy * g.stride + ky) - pad;
      if (iy < 0 || iy >= static_cast<long>(g.in_h)) {
        std::fill(dst + oy * ow, dst + (oy + 1) * ow, T(0));
        continue;
      }
      const T* src = plane + iy * g.in_w;
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const long ix = static_cast<long>(ox * g.stride + kx) - pad;
        dst[oy * ow + ox] = (ix < 0 || ix >= static_cast<long>(g.in_w)) ? T(0) : src[ix];
      }
    }
  }
}

// Parallel over channels: each thread scatters only into its own plane.
template <typename T>
void col2im_accumulate(const ConvGeometry& g, const T* col, T* img) {
  const std::size_t oh = g.out_h(), ow = g.out_w();
  const std::size_t kk = g.kernel_h * g.kernel_w;
  const long pad = static_cast<long>(g.padding);
#pragma omp parallel for schedule(static)
  for (std::size_t c = 0; c < g.in_channels; ++c) {
    T* plane = img + c * g.in_h * g.in_w;
    for (std::size_t k = 0; k < kk; ++k) {
      const std::size_t ky = k / g.kernel_w, kx = k % g.kernel_w;
      const T* src = col + (c * kk + k) * oh * ow;
      for (std::size_t oy = 0; oy < oh; ++oy) {
        const long iy = static_cast<long>(oy * g.stride + ky) - pad;
        if (iy < 0 || iy >= static_cast<long>(g.in_h)) continue;
        T* row = plane + iy * g.in_w;
        for (std::size_t ox = 0; ox < ow; ++ox) {
          const long ix = static_cast<long>(ox * g.stride + kx) - pad;
          if (ix >= 0 && ix < static_cast<long>(g.in_w)) row[ix] += src[oy * ow + ox];
        }
      }
    }
  }
}

bool is_pointwise(const ConvGeometry& g) {
  return g.kernel_h == 1 && g.kernel_w == 1 && g.stride == 1 && g.padding == 0;
}

// C[k*n] = A[m*k]^T * B[m*n]
template <typename T>
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c) {
  const std::size_t blocks = (n + kColumnBlock - 1) / kColumnBlock;
#pragma omp parallel for collapse(2) schedule(static)
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t blk = 0; blk < blocks; ++blk) {
      const std::size_t j0 = blk * kColumnBlock, j1 = std::min(n, j0 + kColumnBlock);
      T* dst = c + r * n;
      std::fill(dst + j0, dst + j1, T(0));
      for (std::size_t i = 0; i < m; ++i) {
        const T av = a[i * k + r];
        if (av == T(0)) continue;
        const T* src = b + i * n;
        for (std::size_t j = j0; j < j1; ++j) dst[j] += av * src[j];
      }
    }
  }
}

}  // namespace

template <typename T>
void gemm(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c,
          bool accumulate) {
  const std::size_t blocks = (n + kColumnBlock - 1) / kColumnBlock;
#pragma omp parallel for collapse(2) schedule(static)
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t blk = 0; blk < blocks; ++blk) {
      const std::size_t j0 = blk * kColumnBlock, j1 = std::min(n, j0 + kColumnBlock);
      T* dst = c + i * n;
      if (!accumulate) std::fill(dst + j0, dst + j1, T(0));
      for (std::size_t p = 0; p < k; ++p) {
        const T av = a[i * k + p];
        const T* src = b + p * n;
        for (std::size_t j = j0; j < j1; ++j) dst[j] += av * src[j];
      }
    }
  }
}

template <typename T>
void conv2d_forward(const ConvGeometry& g, const T* x, const T* w, const T* bias, T* out) {
  const std::size_t plane_out = g.out_h() * g.out_w();
  const std::size_t plane_in = g.in_channels * g.in_h * g.in_w;
  const bool pointwise = is_pointwise(g);
  std::vector<T> col(pointwise ? 0 : g.patch_size() * plane_out);
  for (std::size_t n = 0; n < g.batch; ++n) {
    const T* xin = x + n * plane_in;
    T* y = out + n * g.out_channels * plane_out;
    if (!pointwise) im2col(g, xin, col.data());
    const T* cols = pointwise ? xin : col.data();
    if (bias) {
#pragma omp parallel for schedule(static)
      for (std::size_t o = 0; o < g.out_channels; ++o) {
        std::fill(y + o * plane_out, y + (o + 1) * plane_out, bias[o]);
      }
    }
    gemm(g.out_channels, plane_out, g.patch_size(), w, cols, y, bias != nullptr);
  }
}

template <typename T>
void conv2d_backward(const ConvGeometry& g, const T* x, const T* w, const T* dout, T* dx, T* dw,
                     T* dbias) {
  const std::size_t plane_out = g.out_h() * g.out_w();
  const std::size_t plane_in = g.in_channels * g.in_h * g.in_w;
  const std::size_t kdim = g.patch_size();
  const bool pointwise = is_pointwise(g);
  std::vector<T> col((pointwise || !dw) ? 0 : kdim * plane_out);
  std::vector<T> dcol(dx ? kdim * plane_out : 0);
  for (std::size_t n = 0; n < g.batch; ++n) {
    const T* xin = x + n * plane_in;
    const T* dy = dout + n * g.out_channels * plane_out;
    if (dbias) {
#pragma omp parallel for schedule(static)
      for (std::size_t o = 0; o < g.out_channels; ++o) {
        T s = 0;
        for (std::size_t p = 0; p < plane_out; ++p) s += dy[o * plane_out + p];
        dbias[o] += s;
      }
    }
    if (dw) {
      if (!pointwise) im2col(g, xin, col.data());
      const T* cols = pointwise ? xin : col.data();
#pragma omp parallel for collapse(2) schedule(static)
      for (std::size_t o = 0; o < g.out_channels; ++o) {
        for (std::size_t r = 0; r < kdim; ++r) {
          dw[o * kdim + r] += dot(dy + o * plane_out, cols + r * plane_out, plane_out);
        }
      }
    }
    if (dx) {
      gemm_tn(g.out_channels, plane_out, kdim, w, dy, dcol.data());
      T* dxn = dx + n * plane_in;
      if (pointwise) {
#pragma omp parallel for schedule(static)
        for (std::size_t i = 0; i < plane_in; ++i) dxn[i] += dcol[i];
      } else {
        col2im_accumulate(g, dcol.data(), dxn);
      }
    }
  }
}

template <typename T>
void max_pool2_forward(std::size_t planes, std::size_t h, std::size_t w, const T* x, T* out,
                       std::size_t* argmax) {
  const std::size_t oh = h / 2, ow = w / 2;
#pragma omp parallel for schedule(static)
  for (std::size_t p = 0; p < planes; ++p) {
    const T* src = x + p * h * w;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        std::size_t best = (2 * oy) * w + 2 * ox;
        const std::size_t cand[3] = {best + 1, best + w, best + w + 1};
        for (std::size_t c : cand) {
          if (src[c] > src[best]) best = c;
        }
        out[p * oh * ow + oy * ow + ox] = src[best];
        argmax[p * oh * ow + oy * ow + ox] = best;
      }
    }
  }
}

template <typename T>
void resize_nearest_forward(std::size_t planes, std::size_t in_h, std::size_t in_w,
                            std::size_t out_h, std::size_t out_w, const T* x, T* out) {
  std::vector<std::size_t> sx(out_w);
  for (std::size_t j = 0; j < out_w; ++j) sx[j] = j * in_w / out_w;
#pragma omp parallel for schedule(static)
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t i = 0; i < out_h; ++i) {
      const T* src = x + p * in_h * in_w + (i * in_h / out_h) * in_w;
      T* dst = out + p * out_h * out_w + i * out_w;
      for (std::size_t j = 0; j < out_w; ++j) dst[j] = src[sx[j]];
    }
  }
}

template <typename T>
void resize_nearest_backward(std::size_t planes, std::size_t in_h, std::size_t in_w,
                             std::size_t out_h, std::size_t out_w, const T* dout, T* dx) {
  std::vector<std::size_t> sx(out_w);
  for (std::size_t j = 0; j < out_w; ++j) sx[j] = j * in_w / out_w;
#pragma omp parallel for schedule(static)
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t i = 0; i < out_h; ++i) {
      T* dst = dx + p * in_h * in_w + (i * in_h / out_h) * in_w;
      const T* src = dout + p * out_h * out_w + i * out_w;
      for (std::size_t j = 0; j < out_w; ++j) dst[sx[j]] += src[j];
    }
  }
}

#define MF_INSTANTIATE(T)                                                                         \
  template void gemm<T>(std::size_t, std::size_t, std::size_t, const T*, const T*, T*, bool);     \
  template void conv2d_forward<T>(const ConvGeometry&, const T*, const T*, const T*, T*);         \
  template void conv2d_backward<T>(const ConvGeometry&, const T*, const T*, const T*, T*, T*, T*); \
  template void max_pool2_forward<T>(std::size_t, std::size_t, std::size_t, const T*, T*,         \
                                     std::size_t*);                                               \
  template void resize_nearest_forward<T>(std::size_t, std::size_t, std::size_t, std::size_t,     \
                                          std::size_t, const T*, T*);                             \
  template void resize_nearest_backward<T>(std::size_t, std::size_t, std::size_t, std::size_t,    \
                                           std::size_t, const T*, T*);

MF_INSTANTIATE(float)
MF_INSTANTIATE(double)
#undef MF_INSTANTIATE

}  // namespace mf::kernels
