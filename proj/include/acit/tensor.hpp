#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "acit/errors.hpp"

namespace acit {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(s[i]);
  }
  out += ')';
  return out;
}

// One recorded operation result. The graph of nodes is the tape: nodes are
// created in topological order (inputs exist before outputs), each holds the
// parent links and a backward closure that carries whatever forward values
// its rule needs. backward() replays the recorded entries exactly once each.
template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // lazily allocated, same length as value
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  std::vector<T>& grad_buffer() {
    if (grad.empty()) grad.assign(value.size(), T(0));
    return grad;
  }
};

// Dense row-major tensor, shared-ownership handle onto a graph node.
// Values are immutable once a node has been consumed by another op; leaves
// may be rewritten between graphs (that is how the optimizer updates
// parameters and how finite-difference probes perturb inputs).
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    return filled(std::move(shape), T(0), requires_grad);
  }

  static Tensor filled(Shape shape, T fill, bool requires_grad = false) {
    auto n = std::make_shared<Node<T>>();
    n->value.assign(shape_numel(shape), fill);
    n->shape = std::move(shape);
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
  }

  static Tensor from_data(Shape shape, std::vector<T> data,
                          bool requires_grad = false) {
    if (data.size() != shape_numel(shape)) {
      throw DimensionError("tensor data length " + std::to_string(data.size()) +
                           " does not match shape " + shape_str(shape));
    }
    auto n = std::make_shared<Node<T>>();
    n->shape = std::move(shape);
    n->value = std::move(data);
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
  }

  static Tensor scalar(T v, bool requires_grad = false) {
    return from_data({1}, {v}, requires_grad);
  }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t size() const { return node_->value.size(); }
  std::size_t extent(std::size_t axis) const { return node_->shape[axis]; }

  const std::vector<T>& values() const { return node_->value; }
  std::vector<T>& values() { return node_->value; }
  T operator[](std::size_t i) const { return node_->value[i]; }

  T item() const {
    if (size() != 1) {
      throw ContractError("item() requires a scalar tensor, got shape " +
                          shape_str(shape()));
    }
    return node_->value[0];
  }

  bool requires_grad() const { return node_->requires_grad; }
  Tensor& set_requires_grad(bool b) {
    node_->requires_grad = b;
    return *this;
  }

  bool has_grad() const { return !node_->grad.empty(); }
  const std::vector<T>& grad() const {
    if (node_->grad.empty()) {
      throw ContractError("gradient not computed for this tensor");
    }
    return node_->grad;
  }
  void zero_grad() { node_->grad.clear(); }

  // Detached value copy (no graph, no grad participation).
  Tensor detached_copy() const {
    return from_data(node_->shape, node_->value, false);
  }

  std::shared_ptr<Node<T>>& node() { return node_; }
  const std::shared_ptr<Node<T>>& node() const { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

template <typename T>
bool all_finite(const Tensor<T>& t) {
  for (T v : t.values()) {
    if (!std::isfinite(double(v))) return false;
  }
  return true;
}

// Reverse pass over the recorded graph. Entries are visited exactly once, in
// reverse topological order; leaf gradients accumulate additively, so fan-out
// sums contributions and repeated backward() calls add into existing grads.
template <typename T>
void backward(const Tensor<T>& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ContractError("backward requires a scalar loss tensor");
  }
  Node<T>* root = loss.node().get();
  if (!root->requires_grad) return;  // nothing upstream participates

  std::vector<Node<T>*> order;
  std::unordered_set<const Node<T>*> visited;
  std::vector<std::pair<Node<T>*, std::size_t>> stack;
  stack.push_back({root, 0});
  visited.insert(root);
  while (!stack.empty()) {
    auto [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      stack.back().second = idx + 1;
      Node<T>* p = node->parents[idx].get();
      if (p->requires_grad && visited.insert(p).second) {
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  // Non-leaf grads are scratch space for this replay; leaf grads accumulate
  // across calls (fan-out within a graph and repeated passes both sum).
  for (Node<T>* n : order) {
    if (n->backward_fn) n->grad.assign(n->value.size(), T(0));
  }
  root->grad_buffer()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward_fn) (*it)->backward_fn(**it);
  }
}

}  // namespace acit
