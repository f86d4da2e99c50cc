#pragma once

#include <deque>
#include <span>
#include <string>
#include <vector>

#include "matteforge/engine/ops.hpp"

namespace mf::engine {

/// Named learnable tensors plus named normalization buffers. Names are the
/// checkpoint keys and must be unique.
template <typename T>
class ParamStore {
 public:
  Tensor<T> add(const std::string& name, Tensor<T> value);
  RunningStats<T>& add_stats(const std::string& prefix, std::size_t channels);

  std::span<Tensor<T>> tensors() { return params_; }
  std::span<const Tensor<T>> tensors() const { return params_; }
  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return params_.size(); }

  /// Returns an undefined tensor when the name is unknown.
  Tensor<T> find(const std::string& name) const;
  bool contains(const std::string& name) const;

  struct Buffer {
    std::string name;
    Tensor<T> tensor;
  };
  /// Running means and variances, named "<prefix>/running_mean|var".
  std::vector<Buffer> buffers() const;

  void zero_grad();

 private:
  std::vector<std::string> names_;
  std::vector<Tensor<T>> params_;
  std::vector<std::string> stat_prefixes_;
  std::deque<RunningStats<T>> stats_;  // stable addresses
};

}  // namespace mf::engine
