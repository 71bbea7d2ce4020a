#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace rforge::nn {

// A tape node: one dense row-major matrix plus the closure that pushes its
// gradient into its parents. Scalars are 1x1, vectors 1xd or nx1.
struct Node {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> value;
  std::vector<double> grad;  // empty until backward reaches the node
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  std::vector<double>& ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

using NodePtr = std::shared_ptr<Node>;

// Handle to a tape node. Copying a Tensor aliases the node.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(NodePtr node) : node_(std::move(node)) {}

  static Tensor constant(std::size_t rows, std::size_t cols, std::vector<double> values);
  static Tensor zeros(std::size_t rows, std::size_t cols);
  static Tensor scalar(double x);
  // A leaf that accumulates gradient across backward calls (a parameter).
  static Tensor leaf(std::size_t rows, std::size_t cols, std::vector<double> values);

  bool defined() const { return node_ != nullptr; }
  std::size_t rows() const { return node_->rows; }
  std::size_t cols() const { return node_->cols; }
  std::size_t size() const { return node_->value.size(); }
  std::array<std::size_t, 2> shape() const { return {node_->rows, node_->cols}; }
  bool requires_grad() const { return node_->requires_grad; }

  double operator()(std::size_t r, std::size_t c) const { return node_->value[r * node_->cols + c]; }
  double item() const;
  std::span<const double> values() const { return node_->value; }
  std::span<double> mutable_values() { return node_->value; }
  // Empty span when no gradient has reached this tensor.
  std::span<const double> grad() const { return node_->grad; }
  void zero_grad();

  const NodePtr& node() const { return node_; }

 private:
  NodePtr node_;
};

// Whether newly created op nodes record backward closures on this thread.
bool grad_enabled();

// Disables tape recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Reverse sweep from a 1x1 loss. Every node reachable through requires_grad
// edges is visited once, in reverse topological order; gradients accumulate
// into leaves.
void backward(const Tensor& loss);

// Builds an op node. `backward` is only kept when some parent needs grad and
// recording is on.
Tensor make_result(std::size_t rows, std::size_t cols, std::vector<double> values,
                   std::vector<NodePtr> parents, std::function<void(Node&)> backward);

}  // namespace rforge::nn
