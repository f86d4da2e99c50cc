#include "matteforge/engine/ops.hpp"

#include <cmath>

#include "matteforge/engine/kernels.hpp"

namespace mf::engine {
namespace {

template <typename T>
T* grad_sink(const Tensor<T>& t) {
  if (!t.defined() || !t.requires_grad()) return nullptr;
  return t.node()->ensure_grad().data();
}

template <typename T>
void require_rank4(const Tensor<T>& x, const char* op) {
  if (x.rank() != 4) {
    throw DimensionError(std::string(op) + " expects an NCHW tensor, got " + shape_str(x.shape()));
  }
}

template <typename T>
void require_same_shape(const Tensor<T>& x, const Tensor<T>& y, const char* op) {
  if (x.shape() != y.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(x.shape()) + " vs " +
                         shape_str(y.shape()));
  }
}

template <typename T>
void require_even_spatial(const Tensor<T>& x, const char* op) {
  if (x.dim(2) % 2 != 0 || x.dim(3) % 2 != 0) {
    throw DimensionError(std::string(op) + " needs even spatial sizes, got " + shape_str(x.shape()));
  }
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                 std::size_t stride, std::size_t padding) {
  require_rank4(x, "conv2d");
  if (weight.rank() != 4 || weight.dim(1) != x.dim(1)) {
    throw DimensionError("conv2d: input " + shape_str(x.shape()) + " incompatible with weight " +
                         shape_str(weight.shape()));
  }
  if (stride < 1) throw DimensionError("conv2d: stride must be >= 1");
  if (bias.defined() && bias.shape() != Shape{weight.dim(0)}) {
    throw DimensionError("conv2d: bias " + shape_str(bias.shape()) + " does not match weight " +
                         shape_str(weight.shape()));
  }
  if (x.dim(2) + 2 * padding < weight.dim(2) || x.dim(3) + 2 * padding < weight.dim(3)) {
    throw DimensionError("conv2d: kernel " + shape_str(weight.shape()) + " larger than padded input " +
                         shape_str(x.shape()));
  }
  kernels::ConvGeometry g{x.dim(0), x.dim(1), x.dim(2), x.dim(3), weight.dim(0),
                          weight.dim(2), weight.dim(3), stride, padding};
  Shape out_shape{g.batch, g.out_channels, g.out_h(), g.out_w()};
  std::vector<T> out(shape_numel(out_shape));
  kernels::conv2d_forward(g, x.data().data(), weight.data().data(),
                          bias.defined() ? bias.data().data() : nullptr, out.data());
  return make_result<T>(std::move(out_shape), std::move(out), {x, weight, bias},
                        [x, weight, bias, g](Node<T>& self) {
                          kernels::conv2d_backward(g, x.data().data(), weight.data().data(),
                                                   self.grad.data(), grad_sink(x),
                                                   grad_sink(weight), grad_sink(bias));
                        });
}

template <typename T>
Tensor<T> downsample_conv(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  require_rank4(x, "downsample_conv");
  require_even_spatial(x, "downsample_conv");
  return conv2d(x, weight, bias, 2, weight.dim(2) / 2);
}

template <typename T>
Tensor<T> max_pool2(const Tensor<T>& x) {
  require_rank4(x, "max_pool2");
  require_even_spatial(x, "max_pool2");
  const std::size_t planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  Shape out_shape{x.dim(0), x.dim(1), h / 2, w / 2};
  std::vector<T> out(shape_numel(out_shape));
  auto argmax = std::make_shared<std::vector<std::size_t>>(out.size());
  kernels::max_pool2_forward(planes, h, w, x.data().data(), out.data(), argmax->data());
  return make_result<T>(std::move(out_shape), std::move(out), {x},
                        [x, argmax, planes, h, w](Node<T>& self) {
                          T* dx = grad_sink(x);
                          if (!dx) return;
                          const std::size_t per = (h / 2) * (w / 2);
                          for (std::size_t p = 0; p < planes; ++p) {
                            for (std::size_t i = 0; i < per; ++i) {
                              dx[p * h * w + (*argmax)[p * per + i]] += self.grad[p * per + i];
                            }
                          }
                        });
}

template <typename T>
Tensor<T> resize_nearest(const Tensor<T>& x, std::size_t out_h, std::size_t out_w) {
  require_rank4(x, "resize_nearest");
  if (out_h < 1 || out_w < 1) throw DimensionError("resize_nearest: output size must be >= 1");
  const std::size_t planes = x.dim(0) * x.dim(1), in_h = x.dim(2), in_w = x.dim(3);
  Shape out_shape{x.dim(0), x.dim(1), out_h, out_w};
  std::vector<T> out(shape_numel(out_shape));
  kernels::resize_nearest_forward(planes, in_h, in_w, out_h, out_w, x.data().data(), out.data());
  return make_result<T>(std::move(out_shape), std::move(out), {x},
                        [x, planes, in_h, in_w, out_h, out_w](Node<T>& self) {
                          if (T* dx = grad_sink(x)) {
                            kernels::resize_nearest_backward(planes, in_h, in_w, out_h, out_w,
                                                             self.grad.data(), dx);
                          }
                        });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  std::vector<T> out(x.data().begin(), x.data().end());
  for (T& v : out) v = v > T(0) ? v : T(0);
  return make_result<T>(x.shape(), std::move(out), {x}, [x](Node<T>& self) {
    if (T* dx = grad_sink(x)) {
      auto xs = x.data();
      for (std::size_t i = 0; i < xs.size(); ++i) {
        if (xs[i] > T(0)) dx[i] += self.grad[i];
      }
    }
  });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& x) {
  std::vector<T> out(x.numel());
  auto xs = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(xs[i]);
  return make_result<T>(x.shape(), std::move(out), {x}, [x](Node<T>& self) {
    if (T* dx = grad_sink(x)) {
      for (std::size_t i = 0; i < self.data.size(); ++i) {
        dx[i] += self.grad[i] * (T(1) - self.data[i] * self.data[i]);
      }
    }
  });
}

template <typename T>
Tensor<T> add(const Tensor<T>& x, const Tensor<T>& y) {
  require_same_shape(x, y, "add");
  std::vector<T> out(x.numel());
  auto xs = x.data();
  auto ys = y.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xs[i] + ys[i];
  return make_result<T>(x.shape(), std::move(out), {x, y}, [x, y](Node<T>& self) {
    for (T* d : {grad_sink(x), grad_sink(y)}) {
      if (!d) continue;
      for (std::size_t i = 0; i < self.grad.size(); ++i) d[i] += self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, const Tensor<T>& s) {
  if (s.numel() != 1) throw DimensionError("scale: factor must hold one element, got " + shape_str(s.shape()));
  const T factor = s.data()[0];
  std::vector<T> out(x.data().begin(), x.data().end());
  for (T& v : out) v *= factor;
  return make_result<T>(x.shape(), std::move(out), {x, s}, [x, s](Node<T>& self) {
    const T factor = s.data()[0];
    auto xs = x.data();
    if (T* dx = grad_sink(x)) {
      for (std::size_t i = 0; i < xs.size(); ++i) dx[i] += factor * self.grad[i];
    }
    if (T* ds = grad_sink(s)) {
      T acc = 0;
      for (std::size_t i = 0; i < xs.size(); ++i) acc += xs[i] * self.grad[i];
      ds[0] += acc;
    }
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T c) {
  std::vector<T> out(x.data().begin(), x.data().end());
  for (T& v : out) v *= c;
  return make_result<T>(x.shape(), std::move(out), {x}, [x, c](Node<T>& self) {
    if (T* dx = grad_sink(x)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) dx[i] += c * self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> clamp(const Tensor<T>& x, T lo, T hi) {
  std::vector<T> out(x.data().begin(), x.data().end());
  for (T& v : out) v = v < lo ? lo : (v > hi ? hi : v);
  return make_result<T>(x.shape(), std::move(out), {x}, [x, lo, hi](Node<T>& self) {
    if (T* dx = grad_sink(x)) {
      auto xs = x.data();
      for (std::size_t i = 0; i < xs.size(); ++i) {
        if (xs[i] >= lo && xs[i] <= hi) dx[i] += self.grad[i];
      }
    }
  });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T acc = 0;
  for (T v : x.data()) acc += v;
  return make_result<T>(Shape{}, std::vector<T>{acc}, {x}, [x](Node<T>& self) {
    if (T* dx = grad_sink(x)) {
      for (std::size_t i = 0; i < x.numel(); ++i) dx[i] += self.grad[0];
    }
  });
}

template <typename T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& xs) {
  if (xs.empty()) throw DimensionError("concat_channels: no inputs");
  for (const auto& t : xs) require_rank4(t, "concat_channels");
  const std::size_t n = xs[0].dim(0), h = xs[0].dim(2), w = xs[0].dim(3);
  std::size_t channels = 0;
  for (const auto& t : xs) {
    if (t.dim(0) != n || t.dim(2) != h || t.dim(3) != w) {
      throw DimensionError("concat_channels: " + shape_str(t.shape()) + " vs " +
                           shape_str(xs[0].shape()));
    }
    channels += t.dim(1);
  }
  const std::size_t plane = h * w;
  std::vector<T> out(n * channels * plane);
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const auto& t : xs) {
    offsets.push_back(off);
    const std::size_t c = t.dim(1);
    for (std::size_t b = 0; b < n; ++b) {
      std::copy_n(t.data().data() + b * c * plane, c * plane,
                  out.data() + (b * channels + off) * plane);
    }
    off += c;
  }
  return make_result<T>(Shape{n, channels, h, w}, std::move(out), xs,
                        [xs, offsets, n, channels, plane](Node<T>& self) {
                          for (std::size_t i = 0; i < xs.size(); ++i) {
                            T* d = grad_sink(xs[i]);
                            if (!d) continue;
                            const std::size_t c = xs[i].dim(1);
                            for (std::size_t b = 0; b < n; ++b) {
                              const T* src = self.grad.data() + (b * channels + offsets[i]) * plane;
                              T* dst = d + b * c * plane;
                              for (std::size_t j = 0; j < c * plane; ++j) dst[j] += src[j];
                            }
                          }
                        });
}

template <typename T>
Tensor<T> crop(const Tensor<T>& x, std::size_t h, std::size_t w) {
  require_rank4(x, "crop");
  if (h > x.dim(2) || w > x.dim(3) || h == 0 || w == 0) {
    throw DimensionError("crop: window " + std::to_string(h) + "x" + std::to_string(w) +
                         " outside " + shape_str(x.shape()));
  }
  const std::size_t planes = x.dim(0) * x.dim(1), in_h = x.dim(2), in_w = x.dim(3);
  std::vector<T> out(planes * h * w);
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t i = 0; i < h; ++i) {
      std::copy_n(x.data().data() + (p * in_h + i) * in_w, w, out.data() + (p * h + i) * w);
    }
  }
  return make_result<T>(Shape{x.dim(0), x.dim(1), h, w}, std::move(out), {x},
                        [x, planes, in_h, in_w, h, w](Node<T>& self) {
                          T* dx = grad_sink(x);
                          if (!dx) return;
                          for (std::size_t p = 0; p < planes; ++p) {
                            for (std::size_t i = 0; i < h; ++i) {
                              for (std::size_t j = 0; j < w; ++j) {
                                dx[(p * in_h + i) * in_w + j] += self.grad[(p * h + i) * w + j];
                              }
                            }
                          }
                        });
}

template <typename T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     RunningStats<T>& stats, NormMode mode) {
  require_rank4(x, "batch_norm");
  const std::size_t n = x.dim(0), c = x.dim(1), plane = x.dim(2) * x.dim(3);
  if (gamma.shape() != Shape{c} || beta.shape() != Shape{c} || stats.mean.shape() != Shape{c} ||
      stats.var.shape() != Shape{c}) {
    throw DimensionError("batch_norm: parameters do not match channel count of " +
                         shape_str(x.shape()));
  }
  const std::size_t count = n * plane;
  if (mode == NormMode::kTrain && count < 2) {
    throw DimensionError("batch_norm: train mode needs N*H*W >= 2, got " + shape_str(x.shape()));
  }
  auto xs = x.data();
  auto g = gamma.data();
  auto b = beta.data();
  std::vector<T> mean(c), inv_std(c);
  if (mode == NormMode::kTrain) {
    auto rm = stats.mean.data();
    auto rv = stats.var.data();
#pragma omp parallel for schedule(static)
    for (std::size_t ch = 0; ch < c; ++ch) {
      T s = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const T* src = xs.data() + (i * c + ch) * plane;
        for (std::size_t p = 0; p < plane; ++p) s += src[p];
      }
      const T mu = s / T(count);
      T ss = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const T* src = xs.data() + (i * c + ch) * plane;
        for (std::size_t p = 0; p < plane; ++p) ss += (src[p] - mu) * (src[p] - mu);
      }
      const T var = ss / T(count);
      mean[ch] = mu;
      inv_std[ch] = T(1) / std::sqrt(var + stats.eps);
      rm[ch] = (T(1) - stats.momentum) * rm[ch] + stats.momentum * mu;
      rv[ch] = (T(1) - stats.momentum) * rv[ch] + stats.momentum * (ss / T(count - 1));
    }
  } else {
    for (std::size_t ch = 0; ch < c; ++ch) {
      mean[ch] = stats.mean.data()[ch];
      inv_std[ch] = T(1) / std::sqrt(stats.var.data()[ch] + stats.eps);
    }
  }

  std::vector<T> out(xs.size());
  auto xhat = std::make_shared<std::vector<T>>(xs.size());
#pragma omp parallel for collapse(2) schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t base = (i * c + ch) * plane;
      for (std::size_t p = 0; p < plane; ++p) {
        const T h = (xs[base + p] - mean[ch]) * inv_std[ch];
        (*xhat)[base + p] = h;
        out[base + p] = g[ch] * h + b[ch];
      }
    }
  }

  const bool train = mode == NormMode::kTrain;
  return make_result<T>(
      x.shape(), std::move(out), {x, gamma, beta},
      [x, gamma, beta, xhat, inv_std, n, c, plane, train](Node<T>& self) {
        const auto& dy = self.grad;
        const auto& xh = *xhat;
        T* dx = grad_sink(x);
        T* dg = grad_sink(gamma);
        T* db = grad_sink(beta);
        auto gv = gamma.data();
        const T count = T(n * plane);
#pragma omp parallel for schedule(static)
        for (std::size_t ch = 0; ch < c; ++ch) {
          T sum_dy = 0, sum_dy_xh = 0;
          for (std::size_t i = 0; i < n; ++i) {
            const std::size_t base = (i * c + ch) * plane;
            for (std::size_t p = 0; p < plane; ++p) {
              sum_dy += dy[base + p];
              sum_dy_xh += dy[base + p] * xh[base + p];
            }
          }
          if (dg) dg[ch] += sum_dy_xh;
          if (db) db[ch] += sum_dy;
          if (!dx) continue;
          const T k = gv[ch] * inv_std[ch];
          for (std::size_t i = 0; i < n; ++i) {
            const std::size_t base = (i * c + ch) * plane;
            for (std::size_t p = 0; p < plane; ++p) {
              if (train) {
                dx[base + p] += k * (dy[base + p] - sum_dy / count - xh[base + p] * sum_dy_xh / count);
              } else {
                dx[base + p] += k * dy[base + p];
              }
            }
          }
        }
      });
}

#define MF_INSTANTIATE(T)                                                                          \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, std::size_t,     \
                            std::size_t);                                                          \
  template Tensor<T> downsample_conv(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);        \
  template Tensor<T> max_pool2(const Tensor<T>&);                                                  \
  template Tensor<T> resize_nearest(const Tensor<T>&, std::size_t, std::size_t);                   \
  template Tensor<T> relu(const Tensor<T>&);                                                       \
  template Tensor<T> tanh(const Tensor<T>&);                                                       \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                      \
  template Tensor<T> scale(const Tensor<T>&, const Tensor<T>&);                                    \
  template Tensor<T> scale(const Tensor<T>&, T);                                                   \
  template Tensor<T> clamp(const Tensor<T>&, T, T);                                                \
  template Tensor<T> sum(const Tensor<T>&);                                                        \
  template Tensor<T> concat_channels(const std::vector<Tensor<T>>&);                               \
  template Tensor<T> crop(const Tensor<T>&, std::size_t, std::size_t);                             \
  template Tensor<T> batch_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,              \
                                RunningStats<T>&, NormMode);

MF_INSTANTIATE(float)
MF_INSTANTIATE(double)
#undef MF_INSTANTIATE

}  // namespace mf::engine
