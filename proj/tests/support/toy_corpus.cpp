#include "toy_corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "matteforge/imaging/png_io.hpp"

namespace mf::toy {
namespace {

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

}  // namespace

ToyForeground make_foreground(std::size_t h, std::size_t w, Rng& rng) {
  ToyForeground fg{imaging::Image(h, w), imaging::AlphaMatte(h, w)};
  const double cy = uniform(rng, 0.35, 0.65) * static_cast<double>(h);
  const double cx = uniform(rng, 0.35, 0.65) * static_cast<double>(w);
  const double ry = uniform(rng, 0.18, 0.3) * static_cast<double>(h);
  const double rx = uniform(rng, 0.18, 0.3) * static_cast<double>(w);
  const double soft = uniform(rng, 1.5, 4.0);
  const double col[3] = {uniform(rng, 0.5, 1.0), uniform(rng, 0.0, 0.5), uniform(rng, 0.2, 0.9)};
  const double strand_phase = uniform(rng, 0.0, 2 * std::numbers::pi);
  const double strand_freq = uniform(rng, 5.0, 9.0);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double dy = (static_cast<double>(y) - cy) / ry, dx = (static_cast<double>(x) - cx) / rx;
      const double r = std::sqrt(dy * dy + dx * dx);
      // Signed distance (pixels, approx.) outside the ellipse boundary.
      const double d = (r - 1.0) * std::min(rx, ry);
      double a = std::clamp(0.5 - d / soft, 0.0, 1.0);
      // Strands: a partially transparent fringe just outside the body.
      if (d > 0 && d < 0.35 * std::min(rx, ry)) {
        const double theta = std::atan2(dy, dx);
        const double s = 0.5 + 0.5 * std::sin(strand_freq * theta + strand_phase);
        a = std::max(a, 0.6 * s * s * (1.0 - d / (0.35 * std::min(rx, ry))));
      }
      a = std::round(a * 255.0) / 255.0;
      fg.alpha.at(y, x) = a;
      const double shade = 0.85 + 0.15 * std::cos(3.0 * dx);
      for (std::size_t c = 0; c < 3; ++c) fg.image.at(y, x, c) = std::clamp(col[c] * shade, 0.0, 1.0);
    }
  }
  return fg;
}

imaging::Image make_background(std::size_t h, std::size_t w, Rng& rng) {
  imaging::Image bg(h, w);
  const double a[3] = {uniform(rng, 0.0, 0.6), uniform(rng, 0.3, 1.0), uniform(rng, 0.0, 1.0)};
  const double b[3] = {uniform(rng, 0.0, 1.0), uniform(rng, 0.0, 0.6), uniform(rng, 0.0, 1.0)};
  const double fy = uniform(rng, 1.0, 3.0), fx = uniform(rng, 1.0, 3.0);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double u = static_cast<double>(x) / static_cast<double>(w);
      const double v = static_cast<double>(y) / static_cast<double>(h);
      const double ripple = 0.08 * std::sin(2 * std::numbers::pi * (fy * v + fx * u));
      for (std::size_t c = 0; c < 3; ++c) {
        bg.at(y, x, c) = std::clamp((1 - u) * a[c] + u * b[c] + ripple, 0.0, 1.0);
      }
    }
  }
  return bg;
}

void write_toy_corpus(const std::filesystem::path& dir, std::size_t num_fg, std::size_t num_bg,
                      std::size_t size, std::uint64_t seed) {
  for (const char* sub : {"fg", "alpha", "bg"}) std::filesystem::create_directories(dir / sub);
  char name[32];
  for (std::size_t i = 0; i < num_fg; ++i) {
    Rng rng(derive_seed(seed, {0, i}));
    const auto fg = make_foreground(size, size, rng);
    std::snprintf(name, sizeof name, "fg_%03zu.png", i);
    imaging::save_png(dir / "fg" / name, fg.image);
    imaging::save_png(dir / "alpha" / name, fg.alpha);
  }
  for (std::size_t i = 0; i < num_bg; ++i) {
    Rng rng(derive_seed(seed, {1, i}));
    std::snprintf(name, sizeof name, "bg_%03zu.png", i);
    // Backgrounds are larger than the foregrounds so the cover fit crops.
    imaging::save_png(dir / "bg" / name, make_background(size + size / 4, size + size / 2, rng));
  }
}

}  // namespace mf::toy
