#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <stdexcept>
#include <string>

#include "oppi/num/tensor.hpp"

namespace oppi::num {

template <typename T>
class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the Tape lives.
template <typename T>
class Var {
 public:
  Var() = default;
  Var(Tape<T>* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Tensor<T>& value() const { return tape_->value(*this); }
  const Shape& shape() const { return value().shape(); }
  std::size_t id() const noexcept { return id_; }
  Tape<T>* tape() const noexcept { return tape_; }

 private:
  Tape<T>* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Records operations in creation order, which is a topological order, so backward is a
/// single reverse sweep. Gradients accumulate additively where a value fans out.
template <typename T>
class Tape {
 public:
  /// Receives d(loss)/d(output) and accumulates into the parents via grad_ref().
  using BackwardFn = std::function<void(Tape&, const Tensor<T>& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// With gradients disabled nothing is retained for backward (inference).
  explicit Tape(bool grad_enabled) : grad_enabled_(grad_enabled) {}
  bool grad_enabled() const noexcept { return grad_enabled_; }

  Var<T> constant(Tensor<T> value) {
    Node n;
    n.owned = std::move(value);
    return push(std::move(n));
  }

  /// Leaf whose gradient is readable through grad() after backward.
  Var<T> input(Tensor<T> value) {
    Node n;
    n.owned = std::move(value);
    n.requires_grad = grad_enabled_;
    return push(std::move(n));
  }

  /// Leaf bound to a Parameter; backward adds into param.grad. The parameter must outlive
  /// the tape and must not be modified while the tape is in use.
  Var<T> parameter(Parameter<T>& param) {
    Node n;
    n.external = &param.value;
    n.param = &param;
    n.requires_grad = grad_enabled_;
    return push(std::move(n));
  }

  /// Non-differentiable leaf referencing an external tensor without copying it.
  Var<T> view(const Tensor<T>& value) {
    Node n;
    n.external = &value;
    return push(std::move(n));
  }

  /// Adds an operation result. `fn` is kept only if some parent requires a gradient.
  Var<T> record(Tensor<T> value, std::initializer_list<Var<T>> parents, BackwardFn fn) {
    Node n;
    n.owned = std::move(value);
    if (grad_enabled_) {
      for (const auto& p : parents) {
        if (nodes_.at(p.id()).requires_grad) n.requires_grad = true;
      }
    }
    if (n.requires_grad) n.backward = std::move(fn);
    return push(std::move(n));
  }

  /// Variant for operations with a runtime number of parents.
  template <typename Range>
  Var<T> record_n(Tensor<T> value, const Range& parents, BackwardFn fn) {
    Node n;
    n.owned = std::move(value);
    if (grad_enabled_) {
      for (const auto& p : parents) {
        if (nodes_.at(p.id()).requires_grad) n.requires_grad = true;
      }
    }
    if (n.requires_grad) n.backward = std::move(fn);
    return push(std::move(n));
  }

  const Tensor<T>& value(Var<T> v) const {
    const Node& n = nodes_.at(v.id());
    return n.external ? *n.external : n.owned;
  }

  bool requires_grad(Var<T> v) const { return nodes_.at(v.id()).requires_grad; }

  /// Gradient buffer for v, zero-initialised on first access.
  Tensor<T>& grad_ref(Var<T> v) {
    Node& n = nodes_.at(v.id());
    if (n.grad.empty()) n.grad = Tensor<T>(value(v).shape());
    return n.grad;
  }

  /// Gradient of the last backward() w.r.t. v (zeros if v did not participate).
  Tensor<T> grad(Var<T> v) const {
    const Node& n = nodes_.at(v.id());
    if (n.grad.empty()) return Tensor<T>(value(v).shape());
    return n.grad;
  }

  /// Reverse sweep from a scalar loss. Parameter gradients are added into Parameter::grad;
  /// callers zero them beforehand when a fresh gradient is wanted.
  void backward(Var<T> loss) {
    if (value(loss).size() != 1) {
      throw std::invalid_argument("backward needs a scalar loss, got shape " +
                                  shape_str(value(loss).shape()));
    }
    if (!grad_enabled_) throw std::logic_error("backward called on a tape with gradients disabled");
    for (auto& n : nodes_) n.grad = Tensor<T>();
    grad_ref(loss).fill(T{1});
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.requires_grad || n.grad.empty()) continue;
      if (n.backward) {
        n.backward(*this, n.grad);
      } else if (n.param) {
        auto dst = n.param->grad.data();
        auto src = n.grad.data();
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
      }
    }
  }

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> owned;
    const Tensor<T>* external = nullptr;
    Parameter<T>* param = nullptr;
    Tensor<T> grad;
    BackwardFn backward;
    bool requires_grad = false;
  };

  Var<T> push(Node n) {
    nodes_.push_back(std::move(n));
    return Var<T>(this, nodes_.size() - 1);
  }

  std::deque<Node> nodes_;
  bool grad_enabled_ = true;
};

}  // namespace oppi::num
