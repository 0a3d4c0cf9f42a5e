#pragma once

// Reverse-mode differentiation over a linear tape. Each op appends a node
// holding its output and a closure that pushes the node's gradient back to its
// inputs. A tape is single-use: backward() consumes it.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "fpp/error.hpp"
#include "fpp/kernels.hpp"
#include "fpp/rng.hpp"
#include "fpp/tensor.hpp"

namespace fpp {

enum class Mode { Train, Eval };

template <class T>
class Tape;

template <class T>
struct Var {
  Tape<T>* tape = nullptr;
  std::size_t id = 0;

  const Tensor<T>& value() const { return tape->value(id); }
  const Shape& shape() const { return value().shape(); }
};

template <class T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that does not receive gradient.
  Var<T> constant(Tensor<T> value) {
    Node n;
    n.owned = std::move(value);
    return push(std::move(n));
  }

  /// Leaf borrowing `value` (which must outlive the tape); its gradient is
  /// added into `*grad_sink` by backward().
  Var<T> leaf(const Tensor<T>& value, Tensor<T>* grad_sink) {
    if (grad_sink && grad_sink->shape() != value.shape()) {
      throw ShapeError("Tape::leaf", -1, "gradient sink shape " + shape_string(grad_sink->shape()) +
                                             " != value shape " + shape_string(value.shape()));
    }
    Node n;
    n.borrowed = &value;
    n.sink = grad_sink;
    n.needs_grad = grad_sink != nullptr;
    return push(std::move(n));
  }

  Var<T> parameter(Parameter<T>& p) { return leaf(p.value, &p.grad); }

  /// Records an op output. `inputs` decide whether the node needs gradient.
  Var<T> record(Tensor<T> value, std::initializer_list<Var<T>> inputs, BackwardFn fn) {
    ensure_live();
    Node n;
    n.owned = std::move(value);
    for (const auto& v : inputs) n.needs_grad = n.needs_grad || nodes_.at(v.id).needs_grad;
    if (n.needs_grad) n.backward = std::move(fn);
    return push(std::move(n));
  }

  const Tensor<T>& value(std::size_t id) const {
    const Node& n = nodes_.at(id);
    return n.borrowed ? *n.borrowed : n.owned;
  }

  bool needs_grad(std::size_t id) const { return nodes_.at(id).needs_grad; }

  /// Gradient buffer of node `id`, allocated as zeros on first use.
  Tensor<T>& grad(std::size_t id) {
    Node& n = nodes_.at(id);
    if (n.grad.empty()) n.grad = Tensor<T>(value(id).shape());
    return n.grad;
  }

  void backward(Var<T> loss) {
    ensure_live();
    if (loss.tape != this) throw Error(ErrorKind::State, "backward: loss belongs to a different tape");
    if (value(loss.id).size() != 1) {
      throw ShapeError("backward", -1, "loss must be a scalar, got " + shape_string(value(loss.id).shape()));
    }
    grad(loss.id)[0] = T{1};
    visited_ = 0;
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.needs_grad || n.grad.empty()) continue;
      ++visited_;
      if (n.backward) n.backward(*this, i);
      if (n.sink) {
        auto dst = n.sink->data();
        auto src = n.grad.data();
        for (std::size_t k = 0; k < src.size(); ++k) dst[k] += src[k];
      }
    }
    consumed_ = true;
    nodes_.clear();
    nodes_.shrink_to_fit();
  }

  bool consumed() const noexcept { return consumed_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  /// Nodes whose gradient was propagated during the last backward().
  std::size_t visited() const noexcept { return visited_; }

 private:
  struct Node {
    Tensor<T> owned;
    const Tensor<T>* borrowed = nullptr;
    Tensor<T> grad;
    Tensor<T>* sink = nullptr;
    bool needs_grad = false;
    BackwardFn backward;
  };

  void ensure_live() const {
    if (consumed_) throw Error(ErrorKind::State, "tape already consumed by backward()");
  }

  Var<T> push(Node n) {
    ensure_live();
    nodes_.push_back(std::move(n));
    return Var<T>{this, nodes_.size() - 1};
  }

  std::vector<Node> nodes_;
  bool consumed_ = false;
  std::size_t visited_ = 0;
};

namespace detail {
template <class T>
void same_tape(const Var<T>& a, const Var<T>& b, const char* op) {
  if (a.tape != b.tape) throw Error(ErrorKind::State, std::string(op) + ": operands on different tapes");
}
}  // namespace detail

template <class T>
Var<T> conv3d(Var<T> x, Var<T> kernels, Var<T> bias, Padding3 pad) {
  detail::same_tape(x, kernels, "conv3d");
  detail::same_tape(x, bias, "conv3d");
  const auto g = conv3d_geometry(x.value(), kernels.value(), bias.value(), pad);
  Tensor<T> out(Shape{g.cout, g.od, g.oh, g.ow});
  conv3d_forward(g, x.value().data().data(), kernels.value().data().data(), bias.value().data().data(),
                 out.data().data());
  return x.tape->record(std::move(out), {x, kernels, bias}, [=](Tape<T>& t, std::size_t self) {
    const T* go = t.grad(self).data().data();
    T* gin = t.needs_grad(x.id) ? t.grad(x.id).data().data() : nullptr;
    T* gk = t.needs_grad(kernels.id) ? t.grad(kernels.id).data().data() : nullptr;
    T* gb = t.needs_grad(bias.id) ? t.grad(bias.id).data().data() : nullptr;
    conv3d_backward(g, t.value(x.id).data().data(), t.value(kernels.id).data().data(), go, gin, gk, gb);
  });
}

template <class T>
Var<T> maxpool3d(Var<T> x, Window3 window = {2, 2, 2}) {
  std::vector<std::uint32_t> argmax;
  Tensor<T> out = maxpool3d_forward(x.value(), window, argmax);
  return x.tape->record(std::move(out), {x}, [x, argmax = std::move(argmax)](Tape<T>& t, std::size_t self) {
    maxpool3d_backward<T>(argmax, t.grad(self).data().data(), t.grad(x.id).data().data());
  });
}

template <class T>
Var<T> relu(Var<T> x) {
  Tensor<T> out = x.value();
  out.set_requires_grad(false);
  for (auto& v : out.data()) v = v > T{0} ? v : T{0};
  return x.tape->record(std::move(out), {x}, [x](Tape<T>& t, std::size_t self) {
    const auto y = t.value(self).data();
    const auto go = t.grad(self).data();
    auto gi = t.grad(x.id).data();
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] > T{0}) gi[i] += go[i];
    }
  });
}

/// Inverted dropout: train mode zeroes each element with probability p and
/// scales survivors by 1/(1-p); eval mode is the identity (same node).
template <class T>
Var<T> dropout(Var<T> x, double p, Mode mode, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw Error(ErrorKind::Domain, "dropout: p must lie in [0, 1), got " + std::to_string(p));
  if (mode == Mode::Eval || p == 0.0) return x;
  const T scale = static_cast<T>(1.0 / (1.0 - p));
  std::vector<T> mask(x.value().size());
  for (auto& m : mask) m = rng.uniform() < p ? T{0} : scale;
  Tensor<T> out = x.value();
  out.set_requires_grad(false);
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= mask[i];
  return x.tape->record(std::move(out), {x}, [x, mask = std::move(mask)](Tape<T>& t, std::size_t self) {
    const auto go = t.grad(self).data();
    auto gi = t.grad(x.id).data();
    for (std::size_t i = 0; i < go.size(); ++i) gi[i] += go[i] * mask[i];
  });
}

template <class T>
Var<T> reshape(Var<T> x, Shape shape) {
  Tensor<T> out = x.value().reshaped(std::move(shape));
  out.set_requires_grad(false);
  return x.tape->record(std::move(out), {x}, [x](Tape<T>& t, std::size_t self) {
    const auto go = t.grad(self).data();
    auto gi = t.grad(x.id).data();
    for (std::size_t i = 0; i < go.size(); ++i) gi[i] += go[i];
  });
}

template <class T>
Var<T> flatten(Var<T> x) {
  return reshape(x, Shape{x.value().size()});
}

/// weight[m,n] * x[n] + bias[m].
template <class T>
Var<T> linear(Var<T> x, Var<T> weight, Var<T> bias) {
  detail::same_tape(x, weight, "linear");
  detail::same_tape(x, bias, "linear");
  const auto& xv = x.value();
  const auto& wv = weight.value();
  const auto& bv = bias.value();
  if (xv.rank() != 1) throw ShapeError("linear", 0, "input must be a vector, got " + shape_string(xv.shape()));
  if (wv.rank() != 2) throw ShapeError("linear", -1, "weight must be [m,n], got " + shape_string(wv.shape()));
  if (wv.dim(1) != xv.dim(0)) {
    throw ShapeError("linear", 1, "weight columns " + std::to_string(wv.dim(1)) + " != input length " +
                                      std::to_string(xv.dim(0)));
  }
  if (bv.rank() != 1 || bv.dim(0) != wv.dim(0)) {
    throw ShapeError("linear", 0, "bias " + shape_string(bv.shape()) + " != weight rows " + std::to_string(wv.dim(0)));
  }
  const std::size_t m = wv.dim(0), n = wv.dim(1);
  Tensor<T> out(Shape{m});
  const T* W = wv.data().data();
  const T* xs = xv.data().data();
  for (std::size_t r = 0; r < m; ++r) {
    T acc{0};
    const T* row = W + r * n;
    for (std::size_t c = 0; c < n; ++c) acc += row[c] * xs[c];
    out[r] = acc + bv[r];
  }
  return x.tape->record(std::move(out), {x, weight, bias}, [=](Tape<T>& t, std::size_t self) {
    const T* go = t.grad(self).data().data();
    const T* Wd = t.value(weight.id).data().data();
    const T* xd = t.value(x.id).data().data();
    if (t.needs_grad(bias.id)) {
      T* gb = t.grad(bias.id).data().data();
      for (std::size_t r = 0; r < m; ++r) gb[r] += go[r];
    }
    if (t.needs_grad(weight.id)) {
      T* gw = t.grad(weight.id).data().data();
      for (std::size_t r = 0; r < m; ++r) {
        const T g = go[r];
        if (g == T{0}) continue;
        T* row = gw + r * n;
        for (std::size_t c = 0; c < n; ++c) row[c] += g * xd[c];
      }
    }
    if (t.needs_grad(x.id)) {
      T* gx = t.grad(x.id).data().data();
      for (std::size_t r = 0; r < m; ++r) {
        const T g = go[r];
        if (g == T{0}) continue;
        const T* row = Wd + r * n;
        for (std::size_t c = 0; c < n; ++c) gx[c] += g * row[c];
      }
    }
  });
}

/// Mean over all elements of (pred - target)^2, as a 1-element tensor.
template <class T>
Var<T> mse_loss(Var<T> pred, Var<T> target) {
  detail::same_tape(pred, target, "mse_loss");
  const auto& p = pred.value();
  const auto& q = target.value();
  if (p.shape() != q.shape()) {
    throw ShapeError("mse_loss", -1, "pred " + shape_string(p.shape()) + " != target " + shape_string(q.shape()));
  }
  T acc{0};
  for (std::size_t i = 0; i < p.size(); ++i) {
    const T d = p[i] - q[i];
    acc += d * d;
  }
  const T count = static_cast<T>(p.size());
  return pred.tape->record(Tensor<T>::scalar(acc / count), {pred, target}, [=](Tape<T>& t, std::size_t self) {
    const T g = t.grad(self)[0] * T{2} / count;
    const auto pv = t.value(pred.id).data();
    const auto qv = t.value(target.id).data();
    if (t.needs_grad(pred.id)) {
      auto gp = t.grad(pred.id).data();
      for (std::size_t i = 0; i < pv.size(); ++i) gp[i] += g * (pv[i] - qv[i]);
    }
    if (t.needs_grad(target.id)) {
      auto gq = t.grad(target.id).data();
      for (std::size_t i = 0; i < pv.size(); ++i) gq[i] -= g * (pv[i] - qv[i]);
    }
  });
}

}  // namespace fpp
