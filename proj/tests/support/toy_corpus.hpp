#pragma once

#include <cstdint>
#include <filesystem>

#include "matteforge/imaging/image.hpp"
#include "matteforge/rng.hpp"

namespace mf::toy {

/// Soft-edged colored ellipse with thin semi-transparent strands: a
/// foreground whose alpha has solid FG, solid BG and a soft band.
struct ToyForeground {
  imaging::Image image;
  imaging::AlphaMatte alpha;
};
ToyForeground make_foreground(std::size_t h, std::size_t w, Rng& rng);

/// Smooth two-color gradient with a low-frequency ripple.
imaging::Image make_background(std::size_t h, std::size_t w, Rng& rng);

/// Writes fg/, alpha/ and bg/ PNGs under `dir` (fg_000.png, ...).
void write_toy_corpus(const std::filesystem::path& dir, std::size_t num_fg, std::size_t num_bg,
                      std::size_t size, std::uint64_t seed);

}  // namespace mf::toy
