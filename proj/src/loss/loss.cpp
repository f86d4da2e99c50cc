#include "matteforge/loss/loss.hpp"

#include <cmath>

#include "matteforge/engine/ops.hpp"

namespace mf::loss {
namespace {

template <typename T>
void check_shapes(const Tensor<T>& gt, const Tensor<T>& pred, const PixelMask& mask, const char* op) {
  if (gt.shape() != pred.shape() || mask.size() != pred.numel()) {
    throw DimensionError(std::string(op) + ": ground truth " + engine::shape_str(gt.shape()) +
                         ", prediction " + engine::shape_str(pred.shape()) + ", mask of " +
                         std::to_string(mask.size()) + " pixels");
  }
}

// Charbonnier mean over the masked pixels, accumulated in double.
template <typename T>
Tensor<T> masked_charbonnier(const Tensor<T>& gt, const Tensor<T>& pred, const PixelMask& mask,
                             std::size_t count, double epsilon) {
  auto g = gt.data();
  auto p = pred.data();
  const double eps2 = epsilon * epsilon;
  double acc = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    const double d = static_cast<double>(g[i]) - static_cast<double>(p[i]);
    acc += std::sqrt(d * d + eps2);
  }
  const double n = static_cast<double>(count);
  return engine::make_result<T>(
      engine::Shape{}, std::vector<T>{static_cast<T>(acc / n)}, {pred},
      [gt, pred, mask, n, eps2](engine::Node<T>& self) {
        auto& dpred = pred.node()->ensure_grad();
        auto g = gt.data();
        auto p = pred.data();
        const double upstream = static_cast<double>(self.grad[0]);
        for (std::size_t i = 0; i < mask.size(); ++i) {
          if (!mask[i]) continue;
          const double d = static_cast<double>(p[i]) - static_cast<double>(g[i]);
          dpred[i] += static_cast<T>(upstream * d / (std::sqrt(d * d + eps2) * n));
        }
      });
}

}  // namespace

template <typename T>
PixelMask background_region(const Tensor<T>& gt, const PixelMask& unknown, double theta) {
  PixelMask region(unknown.size(), 0);
  auto g = gt.data();
  for (std::size_t i = 0; i < unknown.size(); ++i) {
    region[i] = (unknown[i] && static_cast<double>(g[i]) < theta) ? 1 : 0;
  }
  return region;
}

template <typename T>
Tensor<T> alpha_prediction_loss(const Tensor<T>& gt, const Tensor<T>& pred, const PixelMask& unknown,
                                double epsilon) {
  check_shapes(gt, pred, unknown, "alpha_prediction_loss");
  std::size_t count = 0;
  for (auto m : unknown) count += m ? 1 : 0;
  if (count == 0) throw EmptyRegionError("alpha_prediction_loss: the unknown region is empty");
  return masked_charbonnier(gt, pred, unknown, count, epsilon);
}

template <typename T>
Tensor<T> background_enhancement_loss(const Tensor<T>& gt, const Tensor<T>& pred,
                                      const PixelMask& unknown, double theta, double epsilon) {
  check_shapes(gt, pred, unknown, "background_enhancement_loss");
  const PixelMask region = background_region(gt, unknown, theta);
  std::size_t count = 0;
  for (auto m : region) count += m ? 1 : 0;
  if (count == 0) return Tensor<T>::scalar(T(0));
  return masked_charbonnier(gt, pred, region, count, epsilon);
}

template <typename T>
Tensor<T> total_loss(const Tensor<T>& l_alpha, const Tensor<T>& l_bg, double w_alpha, double w_bg) {
  return engine::add(engine::scale(l_alpha, static_cast<T>(w_alpha)),
                     engine::scale(l_bg, static_cast<T>(w_bg)));
}

#define MF_INSTANTIATE(T)                                                                     \
  template Tensor<T> alpha_prediction_loss(const Tensor<T>&, const Tensor<T>&,                \
                                           const PixelMask&, double);                         \
  template Tensor<T> background_enhancement_loss(const Tensor<T>&, const Tensor<T>&,          \
                                                 const PixelMask&, double, double);           \
  template Tensor<T> total_loss(const Tensor<T>&, const Tensor<T>&, double, double);          \
  template PixelMask background_region(const Tensor<T>&, const PixelMask&, double);

MF_INSTANTIATE(float)
MF_INSTANTIATE(double)
#undef MF_INSTANTIATE

}  // namespace mf::loss
