#include "matteforge/imaging/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mf::imaging {

std::size_t reflect_index(long i, std::size_t n) {
  if (n == 1) return 0;
  const long period = 2 * (static_cast<long>(n) - 1);
  long m = i % period;
  if (m < 0) m += period;
  return static_cast<std::size_t>(m < static_cast<long>(n) ? m : period - m);
}

template <std::size_t C>
Raster<C> resize_bilinear(const Raster<C>& src, std::size_t out_h, std::size_t out_w) {
  if (out_h == 0 || out_w == 0 || src.pixels() == 0) {
    throw DimensionError("resize_bilinear: empty source or target");
  }
  if (src.same_size(out_h, out_w)) return src;
  Raster<C> dst(out_h, out_w);
  const double sy = static_cast<double>(src.height) / static_cast<double>(out_h);
  const double sx = static_cast<double>(src.width) / static_cast<double>(out_w);
  for (std::size_t y = 0; y < out_h; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0,
                                 static_cast<double>(src.height - 1));
    const std::size_t y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, src.height - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < out_w; ++x) {
      const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0,
                                   static_cast<double>(src.width - 1));
      const std::size_t x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, src.width - 1);
      const double wx = fx - static_cast<double>(x0);
      for (std::size_t c = 0; c < C; ++c) {
        const double top = src.at(y0, x0, c) * (1 - wx) + src.at(y0, x1, c) * wx;
        const double bottom = src.at(y1, x0, c) * (1 - wx) + src.at(y1, x1, c) * wx;
        dst.at(y, x, c) = top * (1 - wy) + bottom * wy;
      }
    }
  }
  return dst;
}

template <std::size_t C>
Raster<C> crop(const Raster<C>& src, std::size_t top, std::size_t left, std::size_t h,
               std::size_t w) {
  if (top + h > src.height || left + w > src.width) {
    throw DimensionError("crop window outside " + std::to_string(src.height) + "x" +
                         std::to_string(src.width) + " raster");
  }
  Raster<C> dst(h, w);
  for (std::size_t y = 0; y < h; ++y) {
    const auto* row = &src.values[((top + y) * src.width + left) * C];
    std::copy_n(row, w * C, &dst.values[y * w * C]);
  }
  return dst;
}

template <std::size_t C>
Raster<C> flip_horizontal(const Raster<C>& src) {
  Raster<C> dst(src.height, src.width);
  for (std::size_t y = 0; y < src.height; ++y) {
    for (std::size_t x = 0; x < src.width; ++x) {
      for (std::size_t c = 0; c < C; ++c) dst.at(y, src.width - 1 - x, c) = src.at(y, x, c);
    }
  }
  return dst;
}

template <std::size_t C>
Raster<C> reflect_pad(const Raster<C>& src, std::size_t min_h, std::size_t min_w) {
  const std::size_t h = std::max(src.height, min_h), w = std::max(src.width, min_w);
  if (h == src.height && w == src.width) return src;
  Raster<C> dst(h, w);
  for (std::size_t y = 0; y < h; ++y) {
    const std::size_t sy = reflect_index(static_cast<long>(y), src.height);
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t sx = reflect_index(static_cast<long>(x), src.width);
      for (std::size_t c = 0; c < C; ++c) dst.at(y, x, c) = src.at(sy, sx, c);
    }
  }
  return dst;
}

template Image resize_bilinear(const Image&, std::size_t, std::size_t);
template AlphaMatte resize_bilinear(const AlphaMatte&, std::size_t, std::size_t);
template Image crop(const Image&, std::size_t, std::size_t, std::size_t, std::size_t);
template AlphaMatte crop(const AlphaMatte&, std::size_t, std::size_t, std::size_t, std::size_t);
template Image flip_horizontal(const Image&);
template AlphaMatte flip_horizontal(const AlphaMatte&);
template Image reflect_pad(const Image&, std::size_t, std::size_t);
template AlphaMatte reflect_pad(const AlphaMatte&, std::size_t, std::size_t);

}  // namespace mf::imaging
