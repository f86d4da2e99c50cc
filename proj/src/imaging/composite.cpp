#include "matteforge/imaging/composite.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "matteforge/rng.hpp"

namespace mf::imaging {

Image composite(const Image& fg, const Image& bg, const AlphaMatte& alpha) {
  if (!bg.same_size(fg.height, fg.width) || !alpha.same_size(fg.height, fg.width)) {
    throw DimensionError("composite: foreground, background and alpha sizes differ");
  }
  Image out(fg.height, fg.width);
  for (std::size_t p = 0; p < fg.pixels(); ++p) {
    const double a = alpha.values[p];
    for (std::size_t c = 0; c < 3; ++c) {
      const double v = a * fg.values[p * 3 + c] + (1.0 - a) * bg.values[p * 3 + c];
      out.values[p * 3 + c] = std::clamp(v, 0.0, 1.0);
    }
  }
  return out;
}

RecoveredAlpha recover_alpha(const Image& comp, const Image& fg, const Image& bg, double floor) {
  if (!fg.same_size(comp.height, comp.width) || !bg.same_size(comp.height, comp.width)) {
    throw DimensionError("recover_alpha: buffer sizes differ");
  }
  RecoveredAlpha r{AlphaMatte(comp.height, comp.width), std::vector<std::uint8_t>(comp.pixels(), 0)};
  for (std::size_t p = 0; p < comp.pixels(); ++p) {
    double num = 0, den = 0;
    bool contrast = false;
    for (std::size_t c = 0; c < 3; ++c) {
      const double d = fg.values[p * 3 + c] - bg.values[p * 3 + c];
      if (std::abs(d) >= floor) contrast = true;
      num += (comp.values[p * 3 + c] - bg.values[p * 3 + c]) * d;
      den += d * d;
    }
    if (!contrast) {
      r.undefined[p] = 1;
      continue;
    }
    r.alpha.values[p] = std::clamp(num / den, 0.0, 1.0);
  }
  return r;
}

Image fit_background(const Image& bg, std::size_t h, std::size_t w) {
  if (bg.same_size(h, w)) return bg;
  const double scale = std::max(static_cast<double>(h) / static_cast<double>(bg.height),
                                static_cast<double>(w) / static_cast<double>(bg.width));
  const auto rh = std::max(h, static_cast<std::size_t>(std::ceil(bg.height * scale - 1e-9)));
  const auto rw = std::max(w, static_cast<std::size_t>(std::ceil(bg.width * scale - 1e-9)));
  Image resized = resize_bilinear(bg, rh, rw);
  return crop(resized, (rh - h) / 2, (rw - w) / 2, h, w);
}

std::vector<std::vector<std::size_t>> draw_background_ids(std::size_t num_fg, std::size_t num_bg,
                                                          std::size_t per_fg, std::uint64_t seed) {
  if (num_fg == 0 || num_bg == 0) throw DataError("synthesize_set: empty inputs");
  if (per_fg == 0) throw std::invalid_argument("synthesize_set: per_fg must be >= 1");
  if (num_bg < per_fg) {
    log_warning("background pool (" + std::to_string(num_bg) + ") smaller than per_fg (" +
                std::to_string(per_fg) + "); drawing with replacement");
  }
  std::vector<std::vector<std::size_t>> ids(num_fg);
  for (std::size_t f = 0; f < num_fg; ++f) {
    Rng rng(derive_seed(seed, {f}));
    if (num_bg >= per_fg) {
      std::vector<std::size_t> pool(num_bg);
      std::iota(pool.begin(), pool.end(), 0);
      // Partial Fisher-Yates.
      for (std::size_t k = 0; k < per_fg; ++k) {
        auto j = std::uniform_int_distribution<std::size_t>(k, num_bg - 1)(rng);
        std::swap(pool[k], pool[j]);
      }
      ids[f].assign(pool.begin(), pool.begin() + static_cast<long>(per_fg));
    } else {
      for (std::size_t k = 0; k < per_fg; ++k) {
        ids[f].push_back(std::uniform_int_distribution<std::size_t>(0, num_bg - 1)(rng));
      }
    }
  }
  return ids;
}

std::vector<CompositeSample> synthesize_set(const std::vector<Image>& foregrounds,
                                            const std::vector<AlphaMatte>& alphas,
                                            const std::vector<Image>& backgrounds,
                                            std::size_t per_fg, std::uint64_t seed) {
  if (foregrounds.size() != alphas.size()) {
    throw DataError("synthesize_set: " + std::to_string(foregrounds.size()) + " foregrounds but " +
                    std::to_string(alphas.size()) + " alphas");
  }
  const auto ids = draw_background_ids(foregrounds.size(), backgrounds.size(), per_fg, seed);
  std::vector<CompositeSample> out;
  out.reserve(foregrounds.size() * per_fg);
  for (std::size_t f = 0; f < foregrounds.size(); ++f) {
    const auto& fg = foregrounds[f];
    if (!alphas[f].same_size(fg.height, fg.width)) {
      throw DimensionError("synthesize_set: alpha " + std::to_string(f) + " does not match its foreground");
    }
    for (std::size_t b : ids[f]) {
      CompositeSample s;
      s.foreground = fg;
      s.background = fit_background(backgrounds[b], fg.height, fg.width);
      s.alpha = alphas[f];
      s.composite = composite(s.foreground, s.background, s.alpha);
      s.fg_id = f;
      s.bg_id = b;
      out.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace mf::imaging
