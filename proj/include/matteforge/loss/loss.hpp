#pragma once

#include <cstdint>
#include <vector>

#include "matteforge/engine/tensor.hpp"

namespace mf::loss {

using engine::Tensor;

struct LossConfig {
  double epsilon = 1e-6;
  double bg_threshold = 0.1;  // theta
  double w_alpha = 0.9;       // w1
  double w_bg = 0.1;          // w2
};

/// Per-pixel 0/1 membership, same element count as the prediction.
using PixelMask = std::vector<std::uint8_t>;

/// Mean over U of sqrt((gt - pred)^2 + eps^2). `gt` and `pred` have equal
/// shapes (any layout); gt is a constant. Throws EmptyRegionError when U is
/// empty.
template <typename T>
Tensor<T> alpha_prediction_loss(const Tensor<T>& gt, const Tensor<T>& pred, const PixelMask& unknown,
                                double epsilon);

/// Same penalty over R_bg = {p in U : gt_p < theta}; 0 with zero gradient
/// when R_bg is empty.
template <typename T>
Tensor<T> background_enhancement_loss(const Tensor<T>& gt, const Tensor<T>& pred,
                                      const PixelMask& unknown, double theta, double epsilon);

template <typename T>
Tensor<T> total_loss(const Tensor<T>& l_alpha, const Tensor<T>& l_bg, double w_alpha, double w_bg);

/// R_bg membership as used by background_enhancement_loss.
template <typename T>
PixelMask background_region(const Tensor<T>& gt, const PixelMask& unknown, double theta);

}  // namespace mf::loss
