#pragma once

#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "gpro/matrix.hpp"

namespace gpro {

// A Value is a handle to one node of a recorded computation. The tape is
// implicit: each node keeps its parents plus a closure that pushes adjoints
// into them. Graphs are confined to a single thread per training run.
class Value {
 public:
  struct Node {
    Matrix data;
    Matrix grad;  // allocated lazily, same shape as data
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    // Reads this node's grad and accumulates into the parents' grads.
    std::function<void(Node&)> backfn;
  };

  Value() = default;
  explicit Value(Matrix data, bool requires_grad = false)
      : node_(std::make_shared<Node>()) {
    node_->data = std::move(data);
    node_->requires_grad = requires_grad;
  }

  static Value constant(Matrix data) { return Value(std::move(data), false); }
  static Value scalar(double v) { return Value(Matrix(1, 1, v), false); }

  bool defined() const { return node_ != nullptr; }
  int rows() const { return node_->data.rows; }
  int cols() const { return node_->data.cols; }

  const Matrix& data() const { return node_->data; }
  Matrix& data() { return node_->data; }
  const Matrix& grad() const { return node_->grad; }
  bool requires_grad() const { return node_ && node_->requires_grad; }

  double item() const {
    if (node_->data.size() != 1) throw std::invalid_argument("item(): not a scalar Value");
    return node_->data.a[0];
  }

  void zero_grad() {
    if (node_ && !node_->grad.empty()) node_->grad.fill(0.0);
  }

  // Same data, no recorded parents, no gradient.
  Value detach() const {
    Value v(node_->data, false);
    return v;
  }

  // Reverse pass from a scalar root. Accumulates (never overwrites) into
  // every reachable grad-requiring node.
  void backward() const {
    if (!node_) throw std::invalid_argument("backward(): undefined Value");
    if (node_->data.size() != 1) throw std::invalid_argument("backward(): root must be 1x1");
    std::vector<Node*> order;
    topo_sort(order);
    ensure_grad(*node_);
    node_->grad.a[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      if ((*it)->backfn) (*it)->backfn(**it);
    }
  }

  static void ensure_grad(Node& n) {
    if (n.grad.empty()) n.grad = Matrix(n.data.rows, n.data.cols);
  }

  // Accumulate g into n's gradient if it participates in differentiation.
  static void accum(Node& n, const Matrix& g) {
    if (!n.requires_grad) return;
    ensure_grad(n);
    n.grad += g;
  }

  std::shared_ptr<Node> node_;

 private:
  void topo_sort(std::vector<Node*>& order) const {
    std::unordered_set<Node*> seen;
    // Iterative postorder: (node, next-child-index) stack.
    std::vector<std::pair<Node*, size_t>> stack;
    if (!node_->requires_grad) return;
    stack.emplace_back(node_.get(), 0);
    seen.insert(node_.get());
    while (!stack.empty()) {
      auto& [n, idx] = stack.back();
      if (idx < n->parents.size()) {
        Node* p = n->parents[idx++].get();
        if (p->requires_grad && !seen.count(p)) {
          seen.insert(p);
          stack.emplace_back(p, 0);
        }
      } else {
        order.push_back(n);
        stack.pop_back();
      }
    }
  }
};

// Builds a recorded op result: parents and backfn are attached only when
// some input actually requires gradients, so constant subgraphs cost nothing.
inline Value make_op(Matrix out, std::vector<Value> inputs,
                     std::function<void(Value::Node&)> backfn) {
  bool needs = false;
  for (const Value& v : inputs) needs = needs || v.requires_grad();
  Value r(std::move(out), needs);
  if (needs) {
    for (Value& v : inputs) r.node_->parents.push_back(v.node_);
    r.node_->backfn = std::move(backfn);
  }
  return r;
}

}  // namespace gpro
