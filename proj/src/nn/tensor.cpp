#include "rforge/nn/tensor.hpp"

#include <algorithm>
#include <string>
#include <unordered_set>

#include "rforge/error.hpp"

namespace rforge::nn {

namespace {
thread_local bool g_grad_enabled = true;

std::string shape_string(std::size_t r, std::size_t c) {
  return "[" + std::to_string(r) + "x" + std::to_string(c) + "]";
}
}  // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Tensor Tensor::constant(std::size_t rows, std::size_t cols, std::vector<double> values) {
  if (values.size() != rows * cols) {
    throw ShapeError("constant of shape " + shape_string(rows, cols) + " given " +
                     std::to_string(values.size()) + " values");
  }
  auto node = std::make_shared<Node>();
  node->rows = rows;
  node->cols = cols;
  node->value = std::move(values);
  return Tensor(std::move(node));
}

Tensor Tensor::zeros(std::size_t rows, std::size_t cols) {
  return constant(rows, cols, std::vector<double>(rows * cols, 0.0));
}

Tensor Tensor::scalar(double x) { return constant(1, 1, {x}); }

Tensor Tensor::leaf(std::size_t rows, std::size_t cols, std::vector<double> values) {
  Tensor t = constant(rows, cols, std::move(values));
  t.node_->requires_grad = true;
  return t;
}

double Tensor::item() const {
  if (node_->value.size() != 1) {
    throw ShapeError("item() on tensor of shape " + shape_string(rows(), cols()));
  }
  return node_->value[0];
}

void Tensor::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor make_result(std::size_t rows, std::size_t cols, std::vector<double> values,
                   std::vector<NodePtr> parents, std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->rows = rows;
  node->cols = cols;
  node->value = std::move(values);
  if (g_grad_enabled) {
    const bool needs = std::any_of(parents.begin(), parents.end(),
                                   [](const NodePtr& p) { return p->requires_grad; });
    if (needs) {
      node->requires_grad = true;
      node->parents = std::move(parents);
      node->backward_fn = std::move(backward);
    }
  }
  return Tensor(std::move(node));
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ContractError("backward() needs a scalar loss");
  }
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss.node()->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward_fn && !node->grad.empty()) node->backward_fn(*node);
  }
}

}  // namespace rforge::nn
