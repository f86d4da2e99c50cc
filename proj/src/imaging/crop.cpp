#include "matteforge/imaging/crop.hpp"

#include <algorithm>

namespace mf::imaging {

TrainingCrop crop_for_training(const Image& image, const AlphaMatte& alpha,
                               const trimap::Trimap& trimap, const CropConfig& cfg, Rng& rng) {
  if (cfg.sizes.empty() || cfg.out == 0) throw std::invalid_argument("crop config needs sizes and out > 0");
  if (!alpha.same_size(image.height, image.width) || trimap.height != image.height ||
      trimap.width != image.width) {
    throw DimensionError("crop_for_training: image, alpha and trimap sizes differ");
  }
  const std::size_t smallest = *std::min_element(cfg.sizes.begin(), cfg.sizes.end());
  const Image src = reflect_pad(image, smallest, smallest);
  const AlphaMatte src_alpha = reflect_pad(alpha, smallest, smallest);
  const std::size_t h = src.height, w = src.width;

  std::vector<std::size_t> unknown;
  for (std::size_t i = 0; i < trimap.labels.size(); ++i) {
    if (trimap.labels[i] == trimap::Label::kUnknown) unknown.push_back(i);
  }
  TrainingCrop out;
  if (unknown.empty()) {
    out.center_y = std::uniform_int_distribution<std::size_t>(0, h - 1)(rng);
    out.center_x = std::uniform_int_distribution<std::size_t>(0, w - 1)(rng);
  } else {
    const auto pick = unknown[std::uniform_int_distribution<std::size_t>(0, unknown.size() - 1)(rng)];
    out.center_y = pick / trimap.width;
    out.center_x = pick % trimap.width;
  }
  out.size = cfg.sizes[std::uniform_int_distribution<std::size_t>(0, cfg.sizes.size() - 1)(rng)];
  const std::size_t ch = std::min(out.size, h), cw = std::min(out.size, w);
  const auto place = [](std::size_t center, std::size_t extent, std::size_t limit) {
    const long start = static_cast<long>(center) - static_cast<long>(extent / 2);
    return static_cast<std::size_t>(std::clamp(start, 0L, static_cast<long>(limit - extent)));
  };
  const std::size_t top = place(out.center_y, ch, h), left = place(out.center_x, cw, w);

  out.image = resize_bilinear(crop(src, top, left, ch, cw), cfg.out, cfg.out);
  out.alpha = resize_bilinear(crop(src_alpha, top, left, ch, cw), cfg.out, cfg.out);
  out.flipped = cfg.flip && coin_flip(rng);
  if (out.flipped) {
    out.image = flip_horizontal(out.image);
    out.alpha = flip_horizontal(out.alpha);
  }
  return out;
}

}  // namespace mf::imaging
