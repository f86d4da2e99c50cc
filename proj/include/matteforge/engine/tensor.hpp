#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "matteforge/error.hpp"

namespace mf::engine {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until the first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this->grad and accumulates into the parents' grads.
  std::function<void(Node&)> backward;

  std::vector<T>& ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), T(0));
    return grad;
  }
};

/// Shared handle to a node of the autodiff graph. Copies alias the same
/// storage; use clone() for an independent leaf.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<T> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t numel() const { return node_->data.size(); }

  std::span<T> data() { return node_->data; }
  std::span<const T> data() const { return node_->data; }
  T item() const;

  bool has_grad() const { return !node_->grad.empty(); }
  std::span<T> grad() { return node_->grad; }
  std::span<const T> grad() const { return node_->grad; }
  void zero_grad() { node_->grad.clear(); }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool flag) { node_->requires_grad = flag; }

  /// Leaf copy of the data, detached from any graph.
  Tensor clone(bool requires_grad = false) const;

  const std::shared_ptr<Node<T>>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}
  std::shared_ptr<Node<T>> node_;

  template <typename U>
  friend Tensor<U> make_result(Shape, std::vector<U>, const std::vector<Tensor<U>>&,
                               std::function<void(Node<U>&)>);
};

/// Builds an op output. The backward closure is kept only when at least one
/// parent requires a gradient.
template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> data, const std::vector<Tensor<T>>& parents,
                      std::function<void(Node<T>&)> backward_fn);

/// Reverse-mode accumulation from a scalar loss into every reachable node
/// that requires a gradient. Throws NumericalError if the loss or any leaf
/// gradient is not finite.
template <typename T>
void backward(const Tensor<T>& loss);

template <typename T>
bool all_finite(std::span<const T> values);

/// Throws NumericalError naming `where` when the tensor holds NaN/Inf.
template <typename T>
void check_finite(const Tensor<T>& t, const std::string& where);

}  // namespace mf::engine
