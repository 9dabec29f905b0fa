#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "lsaf/tensor.hpp"

namespace lsaf {

namespace detail {
struct Node;
}

/// Handle to a node of the reverse-mode tape.
///
/// Copies share the node. Leaves are either constants or parameters; only
/// parameters (and results computed from them) carry gradients.
class Var {
 public:
  Var() = default;

  static Var constant(Tensor value);
  static Var parameter(Tensor value);

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const;
  /// In-place access for optimizers and initializers. Do not mutate between a
  /// forward pass and its backward pass.
  Tensor& mutable_value();
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }

  bool requires_grad() const;
  bool is_leaf() const;
  bool has_grad() const;
  /// Throws ContractError when the gradient was never materialized.
  const Tensor& grad() const;
  /// Materializes a zero gradient of the value's shape.
  void zero_grad();
  /// Drops the gradient so that has_grad() is false until the next backward.
  void clear_grad();

  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  explicit Var(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  friend Var detail_make_var(std::shared_ptr<detail::Node>);

  std::shared_ptr<detail::Node> node_;
};

/// Disables tape recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

/// Reverse sweep from a scalar loss. Leaf gradients accumulate across calls;
/// intermediate gradients are transient.
void backward(const Var& loss);

namespace detail {

using BackwardFn = std::function<void(const Tensor& grad_out)>;

struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  bool leaf = true;
  std::vector<std::shared_ptr<Node>> parents;
  BackwardFn backward;
};

/// Wraps an op result. The backward closure is kept only when some input
/// requires a gradient and recording is enabled.
Var make_result(Tensor value, const std::vector<Var>& inputs, BackwardFn fn);

/// Adds delta into v's gradient; no-op for nodes without gradients.
void accumulate_grad(const Var& v, const Tensor& delta);
void accumulate_grad(const Var& v, Tensor&& delta);

}  // namespace detail

}  // namespace lsaf
