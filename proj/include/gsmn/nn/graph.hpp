#pragma once

#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "gsmn/nn/tensor.hpp"

namespace gsmn::nn {

template <typename T>
class Graph;

// A named, trainable array plus its accumulated gradient and optimizer state.
template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  Tensor<T> adam_m;
  Tensor<T> adam_v;

  Parameter() = default;
  Parameter(std::string n, std::vector<int> shape) : name(std::move(n)), value(shape), grad(shape) {}

  void zero_grad() { grad.fill(T(0)); }
  void ensure_adam_state() {
    if (adam_m.numel() != value.numel()) {
      adam_m = Tensor<T>(value.shape());
      adam_v = Tensor<T>(value.shape());
    }
  }
};

template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;  // allocated on first accumulation
  bool requires_grad = false;
  std::function<void(Graph<T>&, Node<T>&)> backward;
  const char* tag = "";
};

// Define-by-run tape. Node creation order is a valid topological order, so
// backward() is a single reverse sweep. One Graph spans one differentiable
// unit of work (a whole episode during training, a single step in inference).
template <typename T>
class Graph {
 public:
  using Var = Node<T>*;

  explicit Graph(bool inference = false) : inference_(inference) {}

  bool inference() const { return inference_; }
  size_t size() const { return nodes_.size(); }

  Var leaf(Tensor<T> value, bool requires_grad = false, const char* tag = "leaf") {
    Var n = new_node(tag);
    n->value = std::move(value);
    n->requires_grad = requires_grad && !inference_;
    return n;
  }

  Var scalar(T v) { return leaf(Tensor<T>::scalar(v)); }

  // Injects a parameter once per graph; repeated calls return the same node.
  Var param(Parameter<T>& p) {
    auto it = param_nodes_.find(&p);
    if (it != param_nodes_.end()) return it->second;
    Var n = leaf(p.value, /*requires_grad=*/true, p.name.c_str());
    param_nodes_.emplace(&p, n);
    return n;
  }

  Var make(Tensor<T> value, std::vector<Var> parents, std::function<void(Graph<T>&, Node<T>&)> bw,
           const char* tag = "op") {
    Var n = new_node(tag);
    n->value = std::move(value);
    if (!inference_) {
      for (Var p : parents)
        if (p->requires_grad) {
          n->requires_grad = true;
          break;
        }
      if (n->requires_grad) n->backward = std::move(bw);
    }
    return n;
  }

  Tensor<T>& grad_of(Var n) {
    if (n->grad.numel() != n->value.numel()) n->grad = Tensor<T>(n->value.shape());
    return n->grad;
  }

  // Accumulate g into p's gradient if p participates in differentiation.
  void accum(Var p, const Tensor<T>& g) {
    if (!p->requires_grad) return;
    Tensor<T>& dst = grad_of(p);
    const size_t n = dst.numel();
    T* d = dst.data();
    const T* s = g.data();
    for (size_t i = 0; i < n; ++i) d[i] += s[i];
  }

  // Reverse sweep from a scalar loss node.
  void backward(Var loss) {
    require(loss->value.numel() == 1, "backward: loss must be scalar");
    grad_of(loss)[0] = T(1);
    for (size_t i = nodes_.size(); i-- > 0;) {
      Node<T>& n = *nodes_[i];
      if (!n.requires_grad || !n.backward) continue;
      if (n.grad.numel() != n.value.numel()) continue;  // no gradient arrived
      n.backward(*this, n);
    }
    // Fold parameter-node gradients into the owning parameters.
    for (auto& [p, node] : param_nodes_) {
      if (node->grad.numel() != p->value.numel()) continue;
      T* d = p->grad.data();
      const T* s = node->grad.data();
      for (size_t i = 0; i < p->grad.numel(); ++i) d[i] += s[i];
    }
  }

 private:
  Var new_node(const char* tag) {
    nodes_.push_back(std::make_unique<Node<T>>());
    nodes_.back()->tag = tag;
    return nodes_.back().get();
  }

  bool inference_;
  std::vector<std::unique_ptr<Node<T>>> nodes_;
  std::unordered_map<Parameter<T>*, Var> param_nodes_;
};

}  // namespace gsmn::nn
