#pragma once

// Tape-based reverse-mode differentiation over jrt::Tensor.
//
// A Tape owns the ordered record of executed operations. Leaves are created
// through Tape::leaf; constants (no tape, no gradient) through constant().
// Every op whose inputs include a tracked variable appends one node to that
// variable's tape; backward() walks the record in exact reverse order and
// then marks the tape consumed.
//
// Broadcasting follows the trailing-axis rule: shapes are right-aligned,
// missing leading axes count as extent 1, and an extent-1 axis stretches to
// match the other operand. Anything else is a ShapeError.

#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "jrt/tensor.hpp"

namespace jrt {

template <std::floating_point T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;  // empty until something flows into it
  bool requires_grad = false;
  std::function<void(const Tensor<T>& out_grad)> backward;

  void accumulate(const Tensor<T>& g);
  // Grad buffer for in-place accumulation, allocated zeroed on first use.
  Tensor<T>& grad_buffer();
};

template <std::floating_point T>
class Tape;

template <std::floating_point T>
class Var {
 public:
  Var() = default;
  Var(std::shared_ptr<Node<T>> node, Tape<T>* tape) : node_(std::move(node)), tape_(tape) {}

  const Tensor<T>& value() const { return node_->value; }
  const Tensor<T>& grad() const { return node_->grad; }
  const Shape& shape() const { return node_->value.shape(); }
  std::size_t dim(std::size_t axis) const { return node_->value.dim(axis); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool valid() const { return static_cast<bool>(node_); }

  Tape<T>* tape() const { return tape_; }
  const std::shared_ptr<Node<T>>& node() const { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
  Tape<T>* tape_ = nullptr;
};

template <std::floating_point T>
Var<T> constant(Tensor<T> value) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(value);
  return Var<T>(std::move(n), nullptr);
}

template <std::floating_point T>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> leaf(Tensor<T> value, bool requires_grad = true);

  void record(const std::shared_ptr<Node<T>>& node) { nodes_.push_back(node); }

  // Seeds d(loss)/d(loss) = 1 and propagates. Loss must hold one element.
  void backward(const Var<T>& loss);

  std::size_t size() const noexcept { return nodes_.size(); }
  bool consumed() const noexcept { return consumed_; }

  // Smallest |input| seen at a non-differentiable point (ReLU, abs, norm at
  // zero) while recording. Finite-difference checks re-sample when this is
  // too close to a kink.
  T min_kink_distance() const noexcept { return min_kink_; }
  void note_kink_distance(T d) noexcept {
    if (d < min_kink_) min_kink_ = d;
  }

 private:
  std::vector<std::shared_ptr<Node<T>>> nodes_;
  bool consumed_ = false;
  T min_kink_ = std::numeric_limits<T>::infinity();
};

// When enabled, every op checks its inputs for NaN/Inf and throws
// NonFiniteError naming the op. Off by default.
void set_debug_checks(bool enabled);
bool debug_checks();

Shape broadcast_shape(const Shape& a, const Shape& b, const char* op);

namespace ops {

template <std::floating_point T> Var<T> add(const Var<T>& a, const Var<T>& b);
template <std::floating_point T> Var<T> sub(const Var<T>& a, const Var<T>& b);
template <std::floating_point T> Var<T> mul(const Var<T>& a, const Var<T>& b);
template <std::floating_point T> Var<T> scale(const Var<T>& a, T c);
template <std::floating_point T> Var<T> neg(const Var<T>& a);
template <std::floating_point T> Var<T> exp(const Var<T>& a);
template <std::floating_point T> Var<T> abs(const Var<T>& a);
template <std::floating_point T> Var<T> relu(const Var<T>& a);

// [m,k] x [k,n]
template <std::floating_point T> Var<T> matmul(const Var<T>& a, const Var<T>& b);
// [B,m,k] x [B,k,n], or x [B,n,k] transposed when transpose_b.
template <std::floating_point T> Var<T> bmm(const Var<T>& a, const Var<T>& b, bool transpose_b = false);
// x[..., k] * w[k, n] (+ bias[n] when bias is valid).
template <std::floating_point T> Var<T> linear(const Var<T>& x, const Var<T>& w, const Var<T>& bias);

template <std::floating_point T> Var<T> softmax(const Var<T>& a, std::size_t axis);
// Normalizes over the last axis: (x - mean) / sqrt(var + eps) * gamma + beta.
template <std::floating_point T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, T eps = T(1e-5));

template <std::floating_point T> Var<T> concat(const std::vector<Var<T>>& parts, std::size_t axis);
template <std::floating_point T> Var<T> slice(const Var<T>& a, std::size_t axis, std::size_t begin, std::size_t end);
template <std::floating_point T> Var<T> permute(const Var<T>& a, const std::vector<std::size_t>& axes);
// Swaps the first two axes.
template <std::floating_point T> Var<T> transpose01(const Var<T>& a);
template <std::floating_point T> Var<T> reshape(const Var<T>& a, Shape shape);
template <std::floating_point T> Var<T> broadcast_to(const Var<T>& a, const Shape& shape);

template <std::floating_point T> Var<T> sum(const Var<T>& a, std::size_t axis);
template <std::floating_point T> Var<T> sum_all(const Var<T>& a);
template <std::floating_point T> Var<T> mean_all(const Var<T>& a);
// Euclidean norm over the last axis (drops it). Subgradient 0 at the origin.
template <std::floating_point T> Var<T> norm_l2(const Var<T>& a);
// Sum of |x| over the last axis (drops it).
template <std::floating_point T> Var<T> norm_l1(const Var<T>& a);

}  // namespace ops
}  // namespace jrt
