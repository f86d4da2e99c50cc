#pragma once

#include <cstddef>
#include <vector>

#include "matteforge/error.hpp"

namespace mf::imaging {

/// Interleaved H x W x Channels buffer of values in [0, 1].
template <std::size_t Channels>
struct Raster {
  static constexpr std::size_t kChannels = Channels;

  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;

  Raster() = default;
  Raster(std::size_t h, std::size_t w, double fill = 0.0)
      : height(h), width(w), values(h * w * Channels, fill) {}

  double& at(std::size_t y, std::size_t x, std::size_t c = 0) {
    return values[(y * width + x) * Channels + c];
  }
  double at(std::size_t y, std::size_t x, std::size_t c = 0) const {
    return values[(y * width + x) * Channels + c];
  }
  std::size_t pixels() const { return height * width; }
  bool same_size(std::size_t h, std::size_t w) const { return height == h && width == w; }
};

using Image = Raster<3>;
using AlphaMatte = Raster<1>;

/// Bilinear resize with half-pixel centers and edge clamping.
template <std::size_t C>
Raster<C> resize_bilinear(const Raster<C>& src, std::size_t out_h, std::size_t out_w);

template <std::size_t C>
Raster<C> crop(const Raster<C>& src, std::size_t top, std::size_t left, std::size_t h,
               std::size_t w);

template <std::size_t C>
Raster<C> flip_horizontal(const Raster<C>& src);

/// Grows to at least min_h x min_w by mirroring (without edge repeat) on the
/// bottom and right.
template <std::size_t C>
Raster<C> reflect_pad(const Raster<C>& src, std::size_t min_h, std::size_t min_w);

/// Mirror index into [0, n) without repeating the edge sample.
std::size_t reflect_index(long i, std::size_t n);

}  // namespace mf::imaging
