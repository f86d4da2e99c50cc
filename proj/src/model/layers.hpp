#pragma once

#include <string>

#include "matteforge/engine/ops.hpp"
#include "matteforge/engine/params.hpp"
#include "matteforge/rng.hpp"

namespace mf::model::detail {

using engine::NormMode;
using engine::ParamStore;
using engine::Tensor;

enum class Init { kKaiming, kZero };

template <typename T>
struct Conv {
  Tensor<T> weight;
  Tensor<T> bias;  // undefined when followed by normalization
  std::size_t stride = 1;
  std::size_t padding = 0;

  static Conv make(ParamStore<T>& store, const std::string& name, std::size_t in, std::size_t out,
                   std::size_t kernel, std::size_t stride, bool with_bias, Rng& rng,
                   Init init = Init::kKaiming);

  Tensor<T> operator()(const Tensor<T>& x) const {
    return engine::conv2d(x, weight, bias, stride, padding);
  }
};

template <typename T>
struct Norm {
  Tensor<T> gamma;
  Tensor<T> beta;
  engine::RunningStats<T>* stats = nullptr;

  static Norm make(ParamStore<T>& store, const std::string& name, std::size_t channels);

  Tensor<T> operator()(const Tensor<T>& x, NormMode mode) const {
    return engine::batch_norm(x, gamma, beta, *stats, mode);
  }
};

/// conv -> norm -> relu
template <typename T>
struct ConvNormRelu {
  Conv<T> conv;
  Norm<T> norm;

  static ConvNormRelu make(ParamStore<T>& store, const std::string& name, std::size_t in,
                           std::size_t out, std::size_t kernel, std::size_t stride, Rng& rng) {
    return {Conv<T>::make(store, name + "/conv", in, out, kernel, stride, false, rng),
            Norm<T>::make(store, name + "/bn", out)};
  }
  Tensor<T> operator()(const Tensor<T>& x, NormMode mode) const {
    return engine::relu(norm(conv(x), mode));
  }
};

/// ResNet basic block; a strided 1x1 projection shortcut when the shape
/// changes.
template <typename T>
struct BasicBlock {
  Conv<T> conv1, conv2;
  Norm<T> bn1, bn2;
  bool has_down = false;
  Conv<T> down;
  Norm<T> down_bn;

  static BasicBlock make(ParamStore<T>& store, const std::string& name, std::size_t in,
                         std::size_t out, std::size_t stride, Rng& rng);
  Tensor<T> operator()(const Tensor<T>& x, NormMode mode) const;
};

/// Residual unit of the texture path: every convolution is followed by a
/// ReLU and then normalization.
template <typename T>
struct TextureBlock {
  Conv<T> conv1, conv2;
  Norm<T> bn1, bn2;

  static TextureBlock make(ParamStore<T>& store, const std::string& name, std::size_t width,
                           Rng& rng);
  Tensor<T> operator()(const Tensor<T>& x, NormMode mode, std::vector<engine::Shape>* trace) const;
};

}  // namespace mf::model::detail
