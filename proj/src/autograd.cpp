#include "mf/autograd.hpp"

#include <algorithm>
#include <cmath>

#include "mf/kernels.hpp"

namespace mf {

namespace {
void require(bool cond, const std::string& msg) {
  if (!cond) throw ContractViolation(msg);
}
}  // namespace

Var Tape::make(Tensor value) {
  nodes_.emplace_back();
  Node& n = nodes_.back();
  if (grad_) n.grad = Tensor(value.shape);
  n.value = std::move(value);
  return &n;
}

Var Tape::leaf(Tensor value) { return make(std::move(value)); }

Var Tape::zeros(std::vector<std::size_t> shape) {
  return make(Tensor(std::move(shape)));
}

Var Tape::param(ParameterSet& ps, const std::string& name) {
  auto it = param_cache_.find(name);
  if (it != param_cache_.end()) return it->second;
  Var v = make(ps.get(name));
  v->param_name = name;
  param_cache_[name] = v;
  return v;
}

Var Tape::row(Var matrix, std::size_t r) {
  require(matrix->value.shape.size() == 2, "row: input must be rank 2, got " +
                                               shape_str(matrix->value));
  const std::size_t cols = matrix->value.cols();
  require(r < matrix->value.rows(), "row: index out of range");
  Tensor out({cols});
  const double* src = matrix->value.data() + r * cols;
  std::copy(src, src + cols, out.data());
  Var o = make(std::move(out));
  if (grad_)
    o->back = [matrix, o, r, cols] {
      kernels::axpy(1.0, o->grad.data(), matrix->grad.data() + r * cols, cols);
    };
  return o;
}

Var Tape::matvec(Var w, Var x) {
  require(w->value.shape.size() == 2, "matvec: matrix must be rank 2");
  const std::size_t rows = w->value.rows(), cols = w->value.cols();
  require(x->value.size() == cols,
          "matvec: shape mismatch " + shape_str(w->value) + " x " +
              shape_str(x->value));
  Tensor out({rows});
  kernels::matvec_acc(w->value.data(), x->value.data(), out.data(), rows, cols);
  Var o = make(std::move(out));
  if (grad_)
    o->back = [w, x, o, rows, cols] {
      kernels::outer_acc(w->grad.data(), o->grad.data(), x->value.data(), rows, cols);
      kernels::matvec_t_acc(w->value.data(), o->grad.data(), x->grad.data(), rows, cols);
    };
  return o;
}

Var Tape::add(Var a, Var b) {
  require(a->value.same_shape(b->value), "add: shape mismatch");
  Tensor out = a->value;
  kernels::axpy(1.0, b->value.data(), out.data(), out.size());
  Var o = make(std::move(out));
  if (grad_)
    o->back = [a, b, o] {
      kernels::axpy(1.0, o->grad.data(), a->grad.data(), o->grad.size());
      kernels::axpy(1.0, o->grad.data(), b->grad.data(), o->grad.size());
    };
  return o;
}

Var Tape::sub(Var a, Var b) {
  require(a->value.same_shape(b->value), "sub: shape mismatch");
  Tensor out = a->value;
  kernels::axpy(-1.0, b->value.data(), out.data(), out.size());
  Var o = make(std::move(out));
  if (grad_)
    o->back = [a, b, o] {
      kernels::axpy(1.0, o->grad.data(), a->grad.data(), o->grad.size());
      kernels::axpy(-1.0, o->grad.data(), b->grad.data(), o->grad.size());
    };
  return o;
}

Var Tape::mul(Var a, Var b) {
  require(a->value.same_shape(b->value), "mul: shape mismatch");
  Tensor out(a->value.shape);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->value[i] * b->value[i];
  Var o = make(std::move(out));
  if (grad_)
    o->back = [a, b, o] {
      for (std::size_t i = 0; i < o->grad.size(); ++i) {
        a->grad[i] += o->grad[i] * b->value[i];
        b->grad[i] += o->grad[i] * a->value[i];
      }
    };
  return o;
}

Var Tape::sigmoid(Var x) {
  Tensor out(x->value.shape);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = 1.0 / (1.0 + std::exp(-x->value[i]));
  Var o = make(std::move(out));
  if (grad_)
    o->back = [x, o] {
      for (std::size_t i = 0; i < o->grad.size(); ++i)
        x->grad[i] += o->grad[i] * o->value[i] * (1.0 - o->value[i]);
    };
  return o;
}

Var Tape::tanh(Var x) {
  Tensor out(x->value.shape);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(x->value[i]);
  Var o = make(std::move(out));
  if (grad_)
    o->back = [x, o] {
      for (std::size_t i = 0; i < o->grad.size(); ++i)
        x->grad[i] += o->grad[i] * (1.0 - o->value[i] * o->value[i]);
    };
  return o;
}

Var Tape::concat(Var a, Var b) {
  const std::size_t na = a->value.size(), nb = b->value.size();
  Tensor out({na + nb});
  std::copy(a->value.values.begin(), a->value.values.end(), out.values.begin());
  std::copy(b->value.values.begin(), b->value.values.end(),
            out.values.begin() + static_cast<std::ptrdiff_t>(na));
  Var o = make(std::move(out));
  if (grad_)
    o->back = [a, b, o, na, nb] {
      kernels::axpy(1.0, o->grad.data(), a->grad.data(), na);
      kernels::axpy(1.0, o->grad.data() + na, b->grad.data(), nb);
    };
  return o;
}

Var Tape::affine_const(Var x, double scale, double shift) {
  Tensor out(x->value.shape);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = scale * x->value[i] + shift;
  Var o = make(std::move(out));
  if (grad_)
    o->back = [x, o, scale] {
      kernels::axpy(scale, o->grad.data(), x->grad.data(), o->grad.size());
    };
  return o;
}

Var Tape::dot(Var a, Var b) {
  require(a->value.same_shape(b->value), "dot: shape mismatch");
  Var o = make(Tensor::scalar(
      kernels::dot(a->value.data(), b->value.data(), a->value.size())));
  if (grad_)
    o->back = [a, b, o] {
      const double g = o->grad[0];
      kernels::axpy(g, b->value.data(), a->grad.data(), a->value.size());
      kernels::axpy(g, a->value.data(), b->grad.data(), a->value.size());
    };
  return o;
}

Var Tape::pick(Var v, std::size_t i) {
  require(i < v->value.size(), "pick: index out of range");
  Var o = make(Tensor::scalar(v->value[i]));
  if (grad_)
    o->back = [v, o, i] { v->grad[i] += o->grad[0]; };
  return o;
}

Var Tape::softmax(Var v) {
  const std::size_t n = v->value.size();
  require(n >= 1, "softmax: empty input");
  Tensor out({n});
  double mx = v->value[0];
  for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, v->value[i]);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) z += out[i] = std::exp(v->value[i] - mx);
  for (std::size_t i = 0; i < n; ++i) out[i] /= z;
  Var o = make(std::move(out));
  if (grad_)
    o->back = [v, o, n] {
      const double s = kernels::dot(o->value.data(), o->grad.data(), n);
      for (std::size_t i = 0; i < n; ++i)
        v->grad[i] += o->value[i] * (o->grad[i] - s);
    };
  return o;
}

Var Tape::stack(const std::vector<Var>& scalars) {
  require(!scalars.empty(), "stack: empty input");
  Tensor out({scalars.size()});
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    require(scalars[i]->value.size() == 1, "stack: inputs must be scalars");
    out[i] = scalars[i]->value[0];
  }
  Var o = make(std::move(out));
  if (grad_) {
    auto inputs = scalars;
    o->back = [inputs, o] {
      for (std::size_t i = 0; i < inputs.size(); ++i)
        inputs[i]->grad[0] += o->grad[i];
    };
  }
  return o;
}

Var Tape::log(Var x) {
  Tensor out(x->value.shape);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(x->value[i]);
  Var o = make(std::move(out));
  if (grad_)
    o->back = [x, o] {
      for (std::size_t i = 0; i < o->grad.size(); ++i)
        x->grad[i] += o->grad[i] / x->value[i];
    };
  return o;
}

Var Tape::mul_scalar(Var v, Var s) {
  require(s->value.size() == 1, "mul_scalar: scale must be scalar");
  Tensor out(v->value.shape);
  const double sv = s->value[0];
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = v->value[i] * sv;
  Var o = make(std::move(out));
  if (grad_)
    o->back = [v, s, o] {
      kernels::axpy(s->value[0], o->grad.data(), v->grad.data(), o->grad.size());
      s->grad[0] += kernels::dot(v->value.data(), o->grad.data(), o->grad.size());
    };
  return o;
}

Var Tape::sum(const std::vector<Var>& scalars) {
  require(!scalars.empty(), "sum: empty input");
  double acc = 0.0;
  for (Var s : scalars) {
    require(s->value.size() == 1, "sum: inputs must be scalars");
    acc += s->value[0];
  }
  Var o = make(Tensor::scalar(acc));
  if (grad_) {
    auto inputs = scalars;
    o->back = [inputs, o] {
      for (Var s : inputs) s->grad[0] += o->grad[0];
    };
  }
  return o;
}

Var Tape::softmax_xent(Var logits, std::size_t target) {
  const std::size_t n = logits->value.size();
  require(n >= 1, "softmax_xent: empty logits");
  require(target < n, "softmax_xent: target " + std::to_string(target) +
                          " out of range for V=" + std::to_string(n));
  Tensor probs({n});
  double mx = logits->value[0];
  for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, logits->value[i]);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    z += probs[i] = std::exp(logits->value[i] - mx);
  for (std::size_t i = 0; i < n; ++i) probs[i] /= z;
  const double loss = -(logits->value[target] - mx - std::log(z));
  Var o = make(Tensor::scalar(loss));
  o->aux = std::move(probs);
  if (grad_)
    o->back = [logits, o, target, n] {
      const double g = o->grad[0];
      for (std::size_t i = 0; i < n; ++i) logits->grad[i] += g * o->aux[i];
      logits->grad[target] -= g;
    };
  return o;
}

GradientMap Tape::backward(Var loss, const ParameterSet& ps) {
  require(grad_, "backward: tape recorded without gradients");
  require(loss->value.size() == 1, "backward: loss must be scalar, got " +
                                       shape_str(loss->value));
  loss->grad[0] = 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it)
    if (it->back) it->back();
  GradientMap grads;
  for (const auto& [name, p] : ps.params) grads[name] = Tensor(p.shape);
  for (const auto& [name, var] : param_cache_) {
    auto it = grads.find(name);
    if (it != grads.end()) it->second = var->grad;
  }
  return grads;
}

}  // namespace mf
