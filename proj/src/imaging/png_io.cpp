#include "matteforge/imaging/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>

namespace mf::imaging {
namespace {

struct Decoded {
  std::size_t height = 0, width = 0, channels = 0;
  std::vector<std::uint8_t> bytes;
};

Decoded decode(const std::filesystem::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw DataError("cannot read PNG " + path.string() + ": " + img.message);
  }
  if (img.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&img);
    throw DataError("unsupported bit depth in " + path.string() + ": only 8-bit PNGs are accepted");
  }
  const bool color = img.format & PNG_FORMAT_FLAG_COLOR;
  const bool has_alpha = img.format & PNG_FORMAT_FLAG_ALPHA;
  if (has_alpha) log_warning("ignoring the alpha channel of " + path.string());
  img.format = color ? (has_alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB)
                     : (has_alpha ? PNG_FORMAT_GA : PNG_FORMAT_GRAY);
  Decoded out;
  out.height = img.height;
  out.width = img.width;
  const std::size_t stored = PNG_IMAGE_PIXEL_CHANNELS(img.format);
  std::vector<std::uint8_t> raw(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, raw.data(), 0, nullptr)) {
    throw DataError("cannot decode PNG " + path.string() + ": " + img.message);
  }
  out.channels = color ? 3 : 1;
  out.bytes.resize(out.height * out.width * out.channels);
  for (std::size_t p = 0; p < out.height * out.width; ++p) {
    for (std::size_t c = 0; c < out.channels; ++c) out.bytes[p * out.channels + c] = raw[p * stored + c];
  }
  return out;
}

void encode(const std::filesystem::path& path, std::size_t h, std::size_t w, bool color,
            const std::vector<std::uint8_t>& bytes) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(w);
  img.height = static_cast<png_uint_32>(h);
  img.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&img, path.c_str(), 0, bytes.data(), 0, nullptr)) {
    throw DataError("cannot write PNG " + path.string() + ": " + img.message);
  }
}

template <std::size_t C>
Raster<C> to_raster(const Decoded& d) {
  Raster<C> r(d.height, d.width);
  for (std::size_t i = 0; i < r.values.size(); ++i) r.values[i] = d.bytes[i] / 255.0;
  return r;
}

template <std::size_t C>
std::vector<std::uint8_t> to_bytes(const Raster<C>& r) {
  std::vector<std::uint8_t> out(r.values.size());
  std::transform(r.values.begin(), r.values.end(), out.begin(), quantize);
  return out;
}

}  // namespace

std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

std::variant<Image, AlphaMatte> load_png(const std::filesystem::path& path) {
  auto d = decode(path);
  if (d.channels == 3) return to_raster<3>(d);
  return to_raster<1>(d);
}

Image load_image(const std::filesystem::path& path) {
  auto d = decode(path);
  if (d.channels == 3) return to_raster<3>(d);
  Image img(d.height, d.width);
  for (std::size_t p = 0; p < d.height * d.width; ++p) {
    for (std::size_t c = 0; c < 3; ++c) img.values[p * 3 + c] = d.bytes[p] / 255.0;
  }
  return img;
}

AlphaMatte load_alpha(const std::filesystem::path& path) {
  auto d = decode(path);
  if (d.channels != 1) throw DataError("expected a grayscale matte in " + path.string());
  return to_raster<1>(d);
}

Gray8 load_gray8(const std::filesystem::path& path) {
  auto d = decode(path);
  if (d.channels != 1) throw DataError("expected a grayscale PNG in " + path.string());
  return {d.height, d.width, std::move(d.bytes)};
}

void save_png(const std::filesystem::path& path, const Image& image) {
  encode(path, image.height, image.width, true, to_bytes(image));
}

void save_png(const std::filesystem::path& path, const AlphaMatte& alpha) {
  encode(path, alpha.height, alpha.width, false, to_bytes(alpha));
}

void save_gray8(const std::filesystem::path& path, const Gray8& gray) {
  encode(path, gray.height, gray.width, false, gray.bytes);
}

}  // namespace mf::imaging
