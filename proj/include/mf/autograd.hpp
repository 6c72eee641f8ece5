#pragma once

#include <deque>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mf/params.hpp"
#include "mf/tensor.hpp"

namespace mf {

// One recorded computation. Nodes live on the tape; Var is a stable handle.
struct Node {
  Tensor value;
  Tensor grad;                 // allocated only when the tape records gradients
  std::function<void()> back;  // propagates this->grad to the inputs
  std::string param_name;      // non-empty for parameter leaves
  Tensor aux;                  // op-specific extras (e.g. softmax_xent probs)
};

using Var = Node*;

// Reverse-mode tape. Creation order is a valid topological order, so backward
// is a single reverse sweep. Construct with grad_enabled=false for scoring and
// generation paths that only need values.
class Tape {
 public:
  explicit Tape(bool grad_enabled = true) : grad_(grad_enabled) {}

  bool grad_enabled() const { return grad_; }

  Var leaf(Tensor value);
  Var zeros(std::vector<std::size_t> shape);
  // Parameter leaf; repeated calls with the same name return the same node.
  Var param(ParameterSet& ps, const std::string& name);

  Var row(Var matrix, std::size_t r);
  Var matvec(Var w, Var x);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);  // elementwise
  Var sigmoid(Var x);
  Var tanh(Var x);
  Var concat(Var a, Var b);
  Var affine_const(Var x, double scale, double shift);
  Var dot(Var a, Var b);
  Var pick(Var v, std::size_t i);
  Var softmax(Var v);
  Var stack(const std::vector<Var>& scalars);
  Var log(Var x);
  Var mul_scalar(Var v, Var s);  // v * s[0], s shape (1)
  Var sum(const std::vector<Var>& scalars);
  // Fused stable cross-entropy: returns -log softmax(logits)[target].
  // The full probability vector is kept in the node's aux tensor.
  Var softmax_xent(Var logits, std::size_t target);

  // Gradients of `loss` (must be scalar) w.r.t. every parameter of `ps`.
  // Parameters not reachable from the loss get zero tensors.
  GradientMap backward(Var loss, const ParameterSet& ps);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  Var make(Tensor value);
  bool grad_;
  std::deque<Node> nodes_;
  std::unordered_map<std::string, Var> param_cache_;
};

}  // namespace mf
