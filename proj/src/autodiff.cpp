#include "lsaf/autodiff.hpp"

#include <unordered_set>
#include <utility>

namespace lsaf {

namespace {
thread_local bool g_grad_enabled = true;
}

Var detail_make_var(std::shared_ptr<detail::Node> node) { return Var(std::move(node)); }

Var Var::constant(Tensor value) {
  auto node = std::make_shared<detail::Node>();
  node->value = std::move(value);
  return Var(std::move(node));
}

Var Var::parameter(Tensor value) {
  auto node = std::make_shared<detail::Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  return Var(std::move(node));
}

const Tensor& Var::value() const {
  if (!node_) throw ContractError("access to an undefined Var");
  return node_->value;
}

Tensor& Var::mutable_value() {
  if (!node_) throw ContractError("access to an undefined Var");
  return node_->value;
}

bool Var::requires_grad() const { return node_ && node_->requires_grad; }
bool Var::is_leaf() const { return node_ && node_->leaf; }
bool Var::has_grad() const { return node_ && !node_->grad.empty(); }

const Tensor& Var::grad() const {
  if (!has_grad()) throw ContractError("gradient requested but never materialized");
  return node_->grad;
}

void Var::zero_grad() {
  if (!node_) throw ContractError("zero_grad on an undefined Var");
  node_->grad = Tensor::zeros(node_->value.shape());
}

void Var::clear_grad() {
  if (!node_) throw ContractError("clear_grad on an undefined Var");
  node_->grad = Tensor{};
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

namespace detail {

Var make_result(Tensor value, const std::vector<Var>& inputs, BackwardFn fn) {
#ifdef LSAF_CHECKED
  if (!value.all_finite()) throw NumericError("non-finite value produced by tensor op");
#endif
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->leaf = false;
  if (g_grad_enabled) {
    for (const auto& in : inputs) {
      if (in.requires_grad()) {
        node->requires_grad = true;
        break;
      }
    }
  }
  if (node->requires_grad) {
    node->parents.reserve(inputs.size());
    for (const auto& in : inputs) {
      if (in.requires_grad()) node->parents.push_back(in.node());
    }
    node->backward = std::move(fn);
  }
  return detail_make_var(std::move(node));
}

void accumulate_grad(const Var& v, const Tensor& delta) {
  if (!v.requires_grad()) return;
  auto& node = *v.node();
  require_same_shape(node.value.shape(), delta.shape(), "gradient accumulation");
  if (node.grad.empty()) {
    node.grad = delta;
  } else {
    node.grad += delta;
  }
}

void accumulate_grad(const Var& v, Tensor&& delta) {
  if (!v.requires_grad()) return;
  auto& node = *v.node();
  require_same_shape(node.value.shape(), delta.shape(), "gradient accumulation");
  if (node.grad.empty()) {
    node.grad = std::move(delta);
  } else {
    node.grad += delta;
  }
}

}  // namespace detail

void backward(const Var& loss) {
  if (!loss.defined()) throw ContractError("backward on an undefined Var");
  if (loss.size() != 1) {
    throw ContractError("backward needs a scalar loss, got shape " + to_string(loss.shape()));
  }
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS gives a topological order (inputs before users).
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::Node* parent = node->parents[next++].get();
      if (visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (auto* node : order) {
    if (!node->leaf) node->grad = Tensor();
  }
  detail::Node& root = *loss.node();
  if (root.grad.empty()) {
    root.grad = Tensor::ones(root.value.shape());
  } else {
    root.grad += Tensor::ones(root.value.shape());
  }

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* node = *it;
    if (node->leaf || node->grad.empty() || !node->backward) continue;
    node->backward(node->grad);
    node->grad = Tensor();
  }
}

}  // namespace lsaf
