#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "vqel/error.hpp"

namespace vqel::num {

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

struct Node;
using NodePtr = std::shared_ptr<Node>;

// One value in the computation graph. Values are fixed once the forward op has
// run; only `grad` (and parameter values, via optimizers) change afterwards.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until something is accumulated
  bool requires_grad = false;
  std::vector<NodePtr> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void(Node&)> backward_fn;
  std::uint64_t id = 0;

  std::vector<double>& grad_buffer() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

inline std::uint64_t next_node_id() {
  static thread_local std::uint64_t counter = 0;
  return ++counter;
}

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(NodePtr node) : node_(std::move(node)) {}

  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false) {
    if (numel(shape) != values.size()) {
      throw DimensionError("tensor shape " + shape_str(shape) + " does not match " +
                           std::to_string(values.size()) + " values");
    }
    node_ = std::make_shared<Node>();
    node_->shape = std::move(shape);
    node_->value = std::move(values);
    node_->requires_grad = requires_grad;
    node_->id = next_node_id();
  }

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    const auto n = numel(shape);
    return Tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
  }
  static Tensor scalar(double v, bool requires_grad = false) {
    return Tensor(Shape{1}, {v}, requires_grad);
  }
  static Tensor vector(std::vector<double> v, bool requires_grad = false) {
    const auto n = v.size();
    return Tensor(Shape{n}, std::move(v), requires_grad);
  }
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> v,
                       bool requires_grad = false) {
    return Tensor(Shape{rows, cols}, std::move(v), requires_grad);
  }

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  std::size_t size() const { return node_->value.size(); }
  std::size_t dim() const { return node_->shape.size(); }
  // Rows/cols view a tensor as a matrix over its last dimension.
  std::size_t cols() const { return node_->shape.empty() ? 1 : node_->shape.back(); }
  std::size_t rows() const { return size() / cols(); }
  bool is_scalar() const { return size() == 1; }

  std::span<const double> values() const { return node_->value; }
  // Parameter storage access for optimizers and EMA updates.
  std::span<double> mutable_values() { return node_->value; }
  double item() const {
    if (!is_scalar()) throw UsageError("item() on non-scalar tensor " + shape_str(shape()));
    return node_->value[0];
  }
  double operator[](std::size_t i) const { return node_->value[i]; }
  double at(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  // Gradient, zero-filled if nothing was accumulated.
  std::vector<double> grad() const {
    return node_->grad.empty() ? std::vector<double>(size(), 0.0) : node_->grad;
  }
  void zero_grad() { node_->grad.clear(); }

  std::uint64_t id() const { return node_->id; }
  const NodePtr& node() const { return node_; }

  // A fresh leaf holding a copy of the values, cut from any graph.
  Tensor detach_copy(bool requires_grad = false) const {
    return Tensor(shape(), node_->value, requires_grad);
  }

 private:
  NodePtr node_;
};

inline bool& grad_mode_flag() {
  static thread_local bool enabled = true;
  return enabled;
}

// While alive, ops on this thread build constants only (no graph recording).
class NoGradGuard {
 public:
  NoGradGuard() : previous_(grad_mode_flag()) { grad_mode_flag() = false; }
  ~NoGradGuard() { grad_mode_flag() = previous_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Creates the output node of an op. Parents are recorded only when some parent
// needs gradients; otherwise the result is a constant.
inline Tensor make_result(Shape shape, std::vector<double> value, std::vector<Tensor> inputs,
                          std::function<void(Node&)> backward_fn) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->id = next_node_id();
  bool any = false;
  if (grad_mode_flag())
    for (const auto& t : inputs) any = any || t.requires_grad();
  if (any) {
    node->requires_grad = true;
    node->parents.reserve(inputs.size());
    for (auto& t : inputs) node->parents.push_back(t.node());
    node->backward_fn = std::move(backward_fn);
  }
  return Tensor(std::move(node));
}

// Topologically ordered list of the gradient-carrying nodes that the loss
// depends on. Built per backward pass (define-by-run).
class Tape {
 public:
  static Tape record(const Tensor& loss) {
    Tape tape;
    if (!loss.requires_grad()) return tape;
    std::unordered_set<const Node*> seen;
    // Iterative post-order DFS; each node is emitted once, after its parents.
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(loss.node().get(), 0);
    seen.insert(loss.node().get());
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < node->parents.size()) {
        Node* parent = node->parents[next++].get();
        if (parent->requires_grad && seen.insert(parent).second) stack.emplace_back(parent, 0);
      } else {
        tape.order_.push_back(node);
        stack.pop_back();
      }
    }
    return tape;
  }

  std::span<Node* const> order() const { return order_; }
  std::size_t size() const { return order_.size(); }

 private:
  std::vector<Node*> order_;
};

// Reverse-mode sweep from a scalar loss. Gradients accumulate into leaves, so
// callers zero parameter grads between steps.
inline void backward(const Tensor& loss) {
  if (!loss.defined() || !loss.is_scalar()) {
    throw UsageError("backward() requires a scalar loss, got " +
                     (loss.defined() ? shape_str(loss.shape()) : std::string("undefined")));
  }
  if (!loss.requires_grad()) return;
  const Tape tape = Tape::record(loss);
  loss.node()->grad_buffer()[0] += 1.0;
  const auto order = tape.order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward_fn && !node->grad.empty()) node->backward_fn(*node);
  }
  // Interior grads are released; leaves keep theirs.
  for (Node* node : order) {
    if (!node->parents.empty()) std::vector<double>().swap(node->grad);
  }
}

// Debug pass: throws NumericalError naming the first non-finite entry.
inline void check_finite(const Tensor& t, const std::string& what = "tensor") {
  const auto v = t.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      throw NumericalError(what + " has non-finite value at index " + std::to_string(i));
    }
  }
}

}  // namespace vqel::num
