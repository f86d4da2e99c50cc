#pragma once

#include <vector>

#include "matteforge/imaging/composite.hpp"
#include "matteforge/rng.hpp"
#include "matteforge/trimap/trimap.hpp"

namespace mf::imaging {

struct CropConfig {
  std::vector<std::size_t> sizes{320, 480, 640};
  std::size_t out = 320;
  bool flip = true;
};

struct TrainingCrop {
  Image image;
  AlphaMatte alpha;
  std::size_t center_y = 0;  // in the (padded) source frame
  std::size_t center_x = 0;
  std::size_t size = 0;
  bool flipped = false;
};

/// Random training window centered on an unknown pixel of `trimap`, resized
/// (bilinear) to out x out, optionally mirrored. Sources smaller than the
/// smallest crop size are reflect-padded first; crop sizes are clamped to
/// the source. With no unknown pixels the center is uniform over the image.
TrainingCrop crop_for_training(const Image& image, const AlphaMatte& alpha,
                               const trimap::Trimap& trimap, const CropConfig& cfg, Rng& rng);

inline TrainingCrop crop_for_training(const CompositeSample& sample, const trimap::Trimap& trimap,
                                      const CropConfig& cfg, Rng& rng) {
  return crop_for_training(sample.composite, sample.alpha, trimap, cfg, rng);
}

}  // namespace mf::imaging
