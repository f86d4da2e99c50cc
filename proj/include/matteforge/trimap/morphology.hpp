#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace mf::trimap {

/// Binary H x W mask, 1 = inside.
struct Mask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> bits;
};

// Square k x k structuring element anchored at k/2, so it spans offsets
// [-k/2, k - 1 - k/2] on each axis. Pixels outside the image count as
// outside the mask.

Mask erode(const Mask& m, std::size_t k);
Mask dilate(const Mask& m, std::size_t k);

}  // namespace mf::trimap
