#include "matteforge/trimap/morphology.hpp"

#include <algorithm>

#include "matteforge/error.hpp"

namespace mf::trimap {
namespace {

// One separable pass along rows (horizontal) or columns. With `all`, a pixel
// is set when every in-window sample is set and the window lies inside the
// image; otherwise when any in-window sample is set.
Mask pass(const Mask& m, std::size_t k, bool horizontal, bool all) {
  const long lo = -static_cast<long>(k / 2);
  const long hi = static_cast<long>(k) - 1 - static_cast<long>(k / 2);
  const std::size_t lines = horizontal ? m.height : m.width;
  const std::size_t len = horizontal ? m.width : m.height;
  Mask out{m.height, m.width, std::vector<std::uint8_t>(m.bits.size(), 0)};
  std::vector<long> prefix(len + 1);
  for (std::size_t line = 0; line < lines; ++line) {
    auto idx = [&](std::size_t i) { return horizontal ? line * m.width + i : i * m.width + line; };
    prefix[0] = 0;
    for (std::size_t i = 0; i < len; ++i) prefix[i + 1] = prefix[i] + m.bits[idx(i)];
    for (std::size_t i = 0; i < len; ++i) {
      const long a = static_cast<long>(i) + lo, b = static_cast<long>(i) + hi;
      const long ca = std::max(a, 0L), cb = std::min(b, static_cast<long>(len) - 1);
      const long count = prefix[cb + 1] - prefix[ca];
      const bool set = all ? (a >= 0 && b < static_cast<long>(len) && count == static_cast<long>(k))
                           : count > 0;
      out.bits[idx(i)] = set ? 1 : 0;
    }
  }
  return out;
}

void check_kernel(std::size_t k) {
  if (k < 1) throw std::invalid_argument("structuring element size must be >= 1");
}

}  // namespace

Mask erode(const Mask& m, std::size_t k) {
  check_kernel(k);
  if (k == 1) return m;
  return pass(pass(m, k, true, true), k, false, true);
}

Mask dilate(const Mask& m, std::size_t k) {
  check_kernel(k);
  if (k == 1) return m;
  return pass(pass(m, k, true, false), k, false, false);
}

}  // namespace mf::trimap
