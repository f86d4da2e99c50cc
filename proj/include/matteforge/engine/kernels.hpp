#pragma once

#include <cstddef>

// Raw-buffer compute kernels behind the tensor ops. The default namespace
// holds the OpenMP versions; kernels::reference holds plain serial loops kept
// as a test oracle and as the benchmark baseline.
//
// Every parallel kernel partitions work by output element, so each output is
// produced by exactly one thread with a fixed summation order. Results are
// therefore bit-identical for any thread count.

namespace mf::kernels {

struct ConvGeometry {
  std::size_t batch = 1;
  std::size_t in_channels = 1;
  std::size_t in_h = 1;
  std::size_t in_w = 1;
  std::size_t out_channels = 1;
  std::size_t kernel_h = 1;
  std::size_t kernel_w = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;

  std::size_t out_h() const { return (in_h + 2 * padding - kernel_h) / stride + 1; }
  std::size_t out_w() const { return (in_w + 2 * padding - kernel_w) / stride + 1; }
  std::size_t patch_size() const { return in_channels * kernel_h * kernel_w; }
};

// x: N*C*H*W, w: O*C*kh*kw, bias: O or nullptr, out: N*O*Ho*Wo (overwritten).
template <typename T>
void conv2d_forward(const ConvGeometry& g, const T* x, const T* w, const T* bias, T* out);

// Accumulates into dx / dw / dbias; any of them may be nullptr to skip.
template <typename T>
void conv2d_backward(const ConvGeometry& g, const T* x, const T* w, const T* dout, T* dx, T* dw,
                     T* dbias);

// x: planes*H*W -> out: planes*(H/2)*(W/2); argmax holds the flat source
// index inside each plane.
template <typename T>
void max_pool2_forward(std::size_t planes, std::size_t h, std::size_t w, const T* x, T* out,
                       std::size_t* argmax);

template <typename T>
void resize_nearest_forward(std::size_t planes, std::size_t in_h, std::size_t in_w,
                            std::size_t out_h, std::size_t out_w, const T* x, T* out);

// Scatter-add of dout into dx through the floor mapping.
template <typename T>
void resize_nearest_backward(std::size_t planes, std::size_t in_h, std::size_t in_w,
                             std::size_t out_h, std::size_t out_w, const T* dout, T* dx);

// Row-major C[m*n] (+)= A[m*k] * B[k*n].
template <typename T>
void gemm(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c,
          bool accumulate);

namespace reference {

template <typename T>
void conv2d_forward(const ConvGeometry& g, const T* x, const T* w, const T* bias, T* out);

template <typename T>
void conv2d_backward(const ConvGeometry& g, const T* x, const T* w, const T* dout, T* dx, T* dw,
                     T* dbias);

template <typename T>
void max_pool2_forward(std::size_t planes, std::size_t h, std::size_t w, const T* x, T* out,
                       std::size_t* argmax);

template <typename T>
void resize_nearest_forward(std::size_t planes, std::size_t in_h, std::size_t in_w,
                            std::size_t out_h, std::size_t out_w, const T* x, T* out);

template <typename T>
void resize_nearest_backward(std::size_t planes, std::size_t in_h, std::size_t in_w,
                             std::size_t out_h, std::size_t out_w, const T* dout, T* dx);

template <typename T>
void gemm(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c,
          bool accumulate);

}  // namespace reference
}  // namespace mf::kernels
