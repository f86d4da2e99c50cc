#pragma once

#include <cstdint>
#include <filesystem>
#include <variant>
#include <vector>

#include "matteforge/imaging/image.hpp"

namespace mf::imaging {

/// Raw 8-bit single-channel bytes, used for trimap files.
struct Gray8 {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> bytes;
};

/// Grayscale files decode to AlphaMatte, color files to Image (an alpha
/// channel is dropped with a warning). Values are byte / 255. Only 8-bit
/// PNGs are accepted; anything else throws DataError.
std::variant<Image, AlphaMatte> load_png(const std::filesystem::path& path);

/// Color image; grayscale files are replicated into three channels.
Image load_image(const std::filesystem::path& path);

/// Single-channel matte; color files throw DataError.
AlphaMatte load_alpha(const std::filesystem::path& path);

Gray8 load_gray8(const std::filesystem::path& path);

/// Quantizes round(v * 255) after clamping to [0, 1].
void save_png(const std::filesystem::path& path, const Image& image);
void save_png(const std::filesystem::path& path, const AlphaMatte& alpha);
void save_gray8(const std::filesystem::path& path, const Gray8& gray);

std::uint8_t quantize(double v);

}  // namespace mf::imaging
