#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "matteforge/imaging/image.hpp"

namespace mf::imaging {

/// I = alpha * F + (1 - alpha) * B per pixel and channel, clamped to [0, 1].
Image composite(const Image& fg, const Image& bg, const AlphaMatte& alpha);

inline constexpr double kRecoverFloor = 1e-3;

struct RecoveredAlpha {
  AlphaMatte alpha;
  std::vector<std::uint8_t> undefined;  // 1 where every channel has |F - B| < floor
};

/// Least-squares inverse of compositing over the three channels:
/// alpha = sum_c (I - B)(F - B) / sum_c (F - B)^2, clamped to [0, 1].
RecoveredAlpha recover_alpha(const Image& comp, const Image& fg, const Image& bg,
                             double floor = kRecoverFloor);

/// Aspect-preserving cover: bilinear resize so both sides reach the target,
/// then center-crop.
Image fit_background(const Image& bg, std::size_t h, std::size_t w);

struct CompositeSample {
  Image foreground;
  Image background;  // already fitted to the foreground size
  AlphaMatte alpha;
  Image composite;
  std::size_t fg_id = 0;
  std::size_t bg_id = 0;
};

/// per_fg backgrounds per foreground, drawn without replacement (with
/// replacement and a warning when the pool is too small). Pure function of
/// the inputs and seed.
std::vector<CompositeSample> synthesize_set(const std::vector<Image>& foregrounds,
                                            const std::vector<AlphaMatte>& alphas,
                                            const std::vector<Image>& backgrounds,
                                            std::size_t per_fg, std::uint64_t seed);

/// The background ids synthesize_set would pick, without compositing.
std::vector<std::vector<std::size_t>> draw_background_ids(std::size_t num_fg, std::size_t num_bg,
                                                          std::size_t per_fg, std::uint64_t seed);

}  // namespace mf::imaging
