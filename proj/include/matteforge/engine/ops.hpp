#pragma once

#include <vector>

#include "matteforge/engine/tensor.hpp"

// Differentiable tensor ops. Spatial ops take NCHW tensors. No op
// broadcasts: binary ops require identical shapes.

namespace mf::engine {

/// `bias` may be an undefined tensor for bias-free convolutions.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                 std::size_t stride, std::size_t padding);

/// Stride-2 convolution with "same" padding (kernel/2). Requires even H, W.
template <typename T>
Tensor<T> downsample_conv(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);

/// 2x2 max pooling with stride 2. Requires even H, W.
template <typename T>
Tensor<T> max_pool2(const Tensor<T>& x);

/// Nearest-neighbour resize with floor mapping src = dst * in / out.
template <typename T>
Tensor<T> resize_nearest(const Tensor<T>& x, std::size_t out_h, std::size_t out_w);

template <typename T>
Tensor<T> relu(const Tensor<T>& x);

template <typename T>
Tensor<T> tanh(const Tensor<T>& x);

template <typename T>
Tensor<T> add(const Tensor<T>& x, const Tensor<T>& y);

/// x * s for a learnable scalar s (rank-0 or single-element tensor).
template <typename T>
Tensor<T> scale(const Tensor<T>& x, const Tensor<T>& s);

/// x * c for a constant c.
template <typename T>
Tensor<T> scale(const Tensor<T>& x, T c);

/// Clamp to [lo, hi]. The gradient passes through on the closed interval.
template <typename T>
Tensor<T> clamp(const Tensor<T>& x, T lo, T hi);

template <typename T>
Tensor<T> sum(const Tensor<T>& x);

/// Concatenation of NCHW tensors along the channel axis.
template <typename T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& xs);

/// Top-left h x w window of an NCHW tensor.
template <typename T>
Tensor<T> crop(const Tensor<T>& x, std::size_t h, std::size_t w);

enum class NormMode { kTrain, kEval };

template <typename T>
struct RunningStats {
  Tensor<T> mean;  // C, not differentiable
  Tensor<T> var;   // C, not differentiable
  T momentum = T(0.1);
  T eps = T(1e-5);

  static RunningStats make(std::size_t channels) {
    return {Tensor<T>::zeros({channels}), Tensor<T>::full({channels}, T(1))};
  }
};

/// Per-channel batch normalization. Train mode uses biased batch statistics
/// and folds the unbiased variance into the running stats; eval mode uses the
/// running stats.
template <typename T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     RunningStats<T>& stats, NormMode mode);

}  // namespace mf::engine
