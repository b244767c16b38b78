// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
//
// Reverse-mode tape over Tensor values. A Var owns its value and, after
// backward(), the gradient of the seeded scalar w.r.t. that value. Graphs are
// rebuilt per evaluation and freed when the last Var handle drops.
#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "mmsf/ad/tensor.hpp"

namespace mmsf::ad {

class Node;
using Var = std::shared_ptr<Node>;

class Node {
 public:
  Tensor value;
  bool requires_grad = false;
  std::vector<Var> parents;
  // Pulls this->grad into the parents' grads. Null for leaves/constants.
  std::function<void(Node&)> backward_fn;

  Tensor& ensure_grad() {
    if (!grad_ready_) {
      grad_ = Tensor(value.shape());
      grad_ready_ = true;
    }
    return grad_;
  }
  const Tensor& grad() const { return grad_; }
  bool has_grad() const { return grad_ready_; }
  void clear_grad() { grad_ = Tensor(); grad_ready_ = false; }

 private:
  Tensor grad_;
  bool grad_ready_ = false;
};

inline Var constant(Tensor v) {
  auto n = std::make_shared<Node>();
  n->value = std::move(v);
  return n;
}

inline Var scalar(double v) { return constant(Tensor::scalar(v)); }

// Leaf with requires_grad set; the unit the optimizer owns.
inline Var leaf(Tensor v) {
  auto n = std::make_shared<Node>();
  n->value = std::move(v);
  n->requires_grad = true;
  return n;
}

inline Var make_node(Tensor v, std::vector<Var> parents,
                     std::function<void(Node&)> backward_fn) {
  auto n = std::make_shared<Node>();
  n->value = std::move(v);
  n->parents = std::move(parents);
  for (const auto& p : n->parents) {
    if (p->requires_grad) { n->requires_grad = true; break; }
  }
  if (n->requires_grad) n->backward_fn = std::move(backward_fn);
  return n;
}

// Same value, no history. Gradient stops here.
inline Var detach(const Var& x) { return constant(x->value); }

// Seeds d(root)/d(root) = 1 and accumulates gradients into every
// requires_grad node reachable from root. Root must be scalar.
void backward(const Var& root);

}  // namespace mmsf::ad
