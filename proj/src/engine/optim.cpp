#include "matteforge/engine/optim.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace mf::engine {

template <typename T>
void adam_step(std::span<Tensor<T>> params, AdamState<T>& state, double lr) {
  if (!(lr >= 0.0)) throw std::invalid_argument("adam_step: negative learning rate");
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.emplace_back(p.numel(), T(0));
      state.second_moment.emplace_back(p.numel(), T(0));
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw DimensionError("adam_step: optimizer tracks " + std::to_string(state.first_moment.size()) +
                         " tensors, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.first_moment[i].size() != params[i].numel() ||
        state.second_moment[i].size() != params[i].numel()) {
      throw DimensionError("adam_step: moment buffer " + std::to_string(i) +
                           " does not match parameter shape " + shape_str(params[i].shape()));
    }
  }

  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  const T b1 = static_cast<T>(state.beta1), b2 = static_cast<T>(state.beta2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    if (!p.has_grad()) continue;  // not reached by the last backward pass
    auto data = p.data();
    auto grad = p.grad();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t j = 0; j < data.size(); ++j) {
      const T g = grad[j];
      m[j] = b1 * m[j] + (T(1) - b1) * g;
      v[j] = b2 * v[j] + (T(1) - b2) * g * g;
      const double mhat = static_cast<double>(m[j]) / bc1;
      const double vhat = static_cast<double>(v[j]) / bc2;
      data[j] = static_cast<T>(static_cast<double>(data[j]) - lr * mhat / (std::sqrt(vhat) + state.eps));
    }
  }
}

double lr_at(const LrSchedule& s, std::int64_t step) {
  if (s.warmup_steps < 0 || s.warmup_steps >= s.total_steps) {
    throw std::invalid_argument("lr schedule needs 0 <= warmup_steps < total_steps");
  }
  if (step < 0 || step > s.total_steps) {
    throw std::out_of_range("lr_at: step " + std::to_string(step) + " outside [0, " +
                            std::to_string(s.total_steps) + "]");
  }
  if (step < s.warmup_steps) {
    return s.base_lr * static_cast<double>(step) / static_cast<double>(s.warmup_steps);
  }
  const double t = static_cast<double>(step - s.warmup_steps) /
                   static_cast<double>(s.total_steps - s.warmup_steps);
  return s.min_lr + (s.base_lr - s.min_lr) * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

template void adam_step(std::span<Tensor<float>>, AdamState<float>&, double);
template void adam_step(std::span<Tensor<double>>, AdamState<double>&, double);

}  // namespace mf::engine
