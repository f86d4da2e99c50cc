#pragma once

#include <cstdint>
#include <vector>

#include "matteforge/engine/tensor.hpp"
#include "matteforge/imaging/image.hpp"
#include "matteforge/imaging/png_io.hpp"
#include "matteforge/rng.hpp"
#include "matteforge/trimap/morphology.hpp"

namespace mf::trimap {

enum class Label : std::uint8_t { kBackground = 0, kUnknown = 1, kForeground = 2 };

struct Trimap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<Label> labels;

  Trimap() = default;
  Trimap(std::size_t h, std::size_t w, Label fill = Label::kUnknown)
      : height(h), width(w), labels(h * w, fill) {}

  Label at(std::size_t y, std::size_t x) const { return labels[y * width + x]; }
  Label& at(std::size_t y, std::size_t x) { return labels[y * width + x]; }
  std::size_t count(Label l) const;
  Mask mask(Label l) const;
  bool operator==(const Trimap&) const = default;
};

struct TrimapPair {
  Trimap sp;   // semantic path input
  Trimap tcp;  // textural compensate path input
};

struct TrimapGenConfig {
  int base_kernel_min = 1;
  int base_kernel_max = 30;
  int steps_min = 0;
  int steps_max = 3;
  int iterations_min = 0;
  int iterations_max = 3;
  int dilate_kernel_min = 1;   // growing U (eroding the known masks)
  int dilate_kernel_max = 30;
  int erode_kernel_min = 1;    // shrinking U (dilating the known masks)
  int erode_kernel_max = 10;
  std::uint64_t seed = 0;
};

/// alpha == 1 -> FG, alpha == 0 -> BG, anything else -> U.
Trimap trimap_from_alpha(const imaging::AlphaMatte& alpha);

/// Erodes the FG and BG masks with a k x k square; pixels leaving both
/// become U. k must lie in [1, 30].
Trimap grow_unknown(const Trimap& t, int kernel);

Trimap gen_sp_trimap(const imaging::AlphaMatte& alpha, const TrimapGenConfig& cfg, Rng& rng);

enum class PerturbOp { kDilateUnknown, kErodeUnknown };

struct PerturbStep {
  PerturbOp op;
  int iterations;
  int kernel;
};

/// One perturbation step. kDilateUnknown erodes both known masks
/// `iterations` times; kErodeUnknown dilates both known masks `iterations`
/// times and relabels an unknown pixel with whichever mask reaches it
/// first, keeping it unknown on a tie.
Trimap apply_perturb_step(const Trimap& t, const PerturbStep& step);

/// Draws n steps, then per step an op, an iteration count and a kernel
/// size (in that order), and applies them. `trace` receives the draws.
Trimap perturb_for_tcp(const Trimap& sp, const TrimapGenConfig& cfg, Rng& rng,
                       std::vector<PerturbStep>* trace = nullptr);

/// Channels ordered (BG, U, FG); shape 3 x H x W.
template <typename T>
engine::Tensor<T> one_hot(const Trimap& t);

/// 0 = BG, 128 = U, 255 = FG.
imaging::Gray8 to_gray8(const Trimap& t);

/// Other byte values snap to the nearest of the three codes with a warning.
Trimap from_gray8(const imaging::Gray8& g);

}  // namespace mf::trimap
