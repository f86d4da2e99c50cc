#include <string>

#include "matteforge/trimap/trimap.hpp"

namespace mf::trimap {
namespace {

constexpr int kMaxKernel = 30;

Trimap erode_known(const Trimap& t, std::size_t k) {
  const Mask fg = erode(t.mask(Label::kForeground), k);
  const Mask bg = erode(t.mask(Label::kBackground), k);
  Trimap out(t.height, t.width, Label::kUnknown);
  for (std::size_t i = 0; i < out.labels.size(); ++i) {
    if (fg.bits[i]) out.labels[i] = Label::kForeground;
    else if (bg.bits[i]) out.labels[i] = Label::kBackground;
  }
  return out;
}

Trimap dilate_known(const Trimap& t, std::size_t k) {
  const Mask fg = dilate(t.mask(Label::kForeground), k);
  const Mask bg = dilate(t.mask(Label::kBackground), k);
  Trimap out = t;
  for (std::size_t i = 0; i < out.labels.size(); ++i) {
    if (out.labels[i] != Label::kUnknown || fg.bits[i] == bg.bits[i]) continue;
    out.labels[i] = fg.bits[i] ? Label::kForeground : Label::kBackground;
  }
  return out;
}

}  // namespace

Trimap grow_unknown(const Trimap& t, int kernel) {
  if (kernel < 1 || kernel > kMaxKernel) {
    throw std::invalid_argument("grow_unknown: kernel " + std::to_string(kernel) + " outside [1, 30]");
  }
  if (kernel == 1) return t;
  return erode_known(t, static_cast<std::size_t>(kernel));
}

Trimap gen_sp_trimap(const imaging::AlphaMatte& alpha, const TrimapGenConfig& cfg, Rng& rng) {
  const int k = uniform_int(rng, cfg.base_kernel_min, cfg.base_kernel_max);
  return grow_unknown(trimap_from_alpha(alpha), k);
}

Trimap apply_perturb_step(const Trimap& t, const PerturbStep& step) {
  if (step.kernel < 1) throw std::invalid_argument("perturbation kernel must be >= 1");
  Trimap out = t;
  const auto k = static_cast<std::size_t>(step.kernel);
  for (int i = 0; i < step.iterations && k > 1; ++i) {
    out = step.op == PerturbOp::kDilateUnknown ? erode_known(out, k) : dilate_known(out, k);
  }
  return out;
}

Trimap perturb_for_tcp(const Trimap& sp, const TrimapGenConfig& cfg, Rng& rng,
                       std::vector<PerturbStep>* trace) {
  const int n = uniform_int(rng, cfg.steps_min, cfg.steps_max);
  Trimap out = sp;
  for (int s = 0; s < n; ++s) {
    PerturbStep step{};
    step.op = coin_flip(rng) ? PerturbOp::kErodeUnknown : PerturbOp::kDilateUnknown;
    step.iterations = uniform_int(rng, cfg.iterations_min, cfg.iterations_max);
    step.kernel = step.op == PerturbOp::kDilateUnknown
                      ? uniform_int(rng, cfg.dilate_kernel_min, cfg.dilate_kernel_max)
                      : uniform_int(rng, cfg.erode_kernel_min, cfg.erode_kernel_max);
    if (trace) trace->push_back(step);
    out = apply_perturb_step(out, step);
  }
  return out;
}

}  // namespace mf::trimap
