#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "matteforge/engine/tensor.hpp"

namespace mf::engine {

template <typename T>
struct AdamState {
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  std::vector<std::vector<T>> first_moment;
  std::vector<std::vector<T>> second_moment;
};

/// One bias-corrected Adam update using the gradients held by `params`.
/// Parameters without a gradient are skipped, moments included.
/// Moment buffers are allocated on the first call.
template <typename T>
void adam_step(std::span<Tensor<T>> params, AdamState<T>& state, double lr);

struct LrSchedule {
  double base_lr = 4e-4;
  std::int64_t warmup_steps = 50;
  std::int64_t total_steps = 2000;
  double min_lr = 0.0;
};

/// Linear warmup from 0 to base_lr, then cosine annealing down to min_lr at
/// total_steps.
double lr_at(const LrSchedule& schedule, std::int64_t step);

}  // namespace mf::engine
