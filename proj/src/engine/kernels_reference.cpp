#include "matteforge/engine/kernels.hpp"

namespace mf::kernels::reference {

template <typename T>
void gemm(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c,
          bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      T s = accumulate ? c[i * n + j] : T(0);
      for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
      c[i * n + j] = s;
    }
  }
}

template <typename T>
void conv2d_forward(const ConvGeometry& g, const T* x, const T* w, const T* bias, T* out) {
  const std::size_t oh = g.out_h(), ow = g.out_w();
  for (std::size_t n = 0; n < g.batch; ++n) {
    for (std::size_t o = 0; o < g.out_channels; ++o) {
      for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
          T s = bias ? bias[o] : T(0);
          for (std::size_t c = 0; c < g.in_channels; ++c) {
            for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
              for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
                const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.padding);
                const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.padding);
                if (iy < 0 || ix < 0 || iy >= static_cast<long>(g.in_h) ||
                    ix >= static_cast<long>(g.in_w)) {
                  continue;
                }
                s += w[((o * g.in_channels + c) * g.kernel_h + ky) * g.kernel_w + kx] *
                     x[((n * g.in_channels + c) * g.in_h + iy) * g.in_w + ix];
              }
            }
          }
          out[((n * g.out_channels + o) * oh + oy) * ow + ox] = s;
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward(const ConvGeometry& g, const T* x, const T* w, const T* dout, T* dx, T* dw,
                     T* dbias) {
  const std::size_t oh = g.out_h(), ow = g.out_w();
  for (std::size_t n = 0; n < g.batch; ++n) {
    for (std::size_t o = 0; o < g.out_channels; ++o) {
      for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
          const T d = dout[((n * g.out_channels + o) * oh + oy) * ow + ox];
          if (dbias) dbias[o] += d;
          for (std::size_t c = 0; c < g.in_channels; ++c) {
            for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
              for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
                const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.padding);
                const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.padding);
                if (iy < 0 || ix < 0 || iy >= static_cast<long>(g.in_h) ||
                    ix >= static_cast<long>(g.in_w)) {
                  continue;
                }
                const std::size_t wi = ((o * g.in_channels + c) * g.kernel_h + ky) * g.kernel_w + kx;
                const std::size_t xi = ((n * g.in_channels + c) * g.in_h + iy) * g.in_w + ix;
                if (dw) dw[wi] += d * x[xi];
                if (dx) dx[xi] += d * w[wi];
              }
            }
          }
        }
      }
    }
  }
}

template <typename T>
void max_pool2_forward(std::size_t planes, std::size_t h, std::size_t w, const T* x, T* out,
                       std::size_t* argmax) {
  const std::size_t oh = h / 2, ow = w / 2;
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        std::size_t best = 0;
        bool first = true;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = (2 * oy + dy) * w + 2 * ox + dx;
            if (first || x[p * h * w + idx] > x[p * h * w + best]) best = idx;
            first = false;
          }
        }
        out[(p * oh + oy) * ow + ox] = x[p * h * w + best];
        argmax[(p * oh + oy) * ow + ox] = best;
      }
    }
  }
}

template <typename T>
void resize_nearest_forward(std::size_t planes, std::size_t in_h, std::size_t in_w,
                            std::size_t out_h, std::size_t out_w, const T* x, T* out) {
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t i = 0; i < out_h; ++i) {
      for (std::size_t j = 0; j < out_w; ++j) {
        out[(p * out_h + i) * out_w + j] =
            x[(p * in_h + i * in_h / out_h) * in_w + j * in_w / out_w];
      }
    }
  }
}

template <typename T>
void resize_nearest_backward(std::size_t planes, std::size_t in_h, std::size_t in_w,
                             std::size_t out_h, std::size_t out_w, const T* dout, T* dx) {
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t i = 0; i < out_h; ++i) {
      for (std::size_t j = 0; j < out_w; ++j) {
        dx[(p * in_h + i * in_h / out_h) * in_w + j * in_w / out_w] +=
            dout[(p * out_h + i) * out_w + j];
      }
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

}  // namespace mf::kernels::reference
