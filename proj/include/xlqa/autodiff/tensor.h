#ifndef XLQA_AUTODIFF_TENSOR_H_
#define XLQA_AUTODIFF_TENSOR_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace xlqa::ad {

#ifdef XLQA_FLOAT32
using Real = float;
#else
using Real = double;
#endif

using Shape = std::vector<std::size_t>;

// One byte per position; nonzero marks a real (non-padding) position.
using Mask = std::vector<std::uint8_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<Real> value;
  // Empty until a backward pass reaches this node.
  std::vector<Real> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void(Node&)> backward;

  std::vector<Real>& grad_storage();
};

}  // namespace detail

// Handle to a node of the computation graph. Copies share the node.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<Real> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor filled(Shape shape, Real value, bool requires_grad = false);
  static Tensor scalar(Real value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t size() const { return node_->value.size(); }
  // Matrix views: rank-1 tensors read as a single row.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const Real> values() const { return node_->value; }
  std::span<Real> mutable_values() { return node_->value; }
  Real item() const;
  Real at(std::size_t i) const { return node_->value.at(i); }
  Real at(std::size_t r, std::size_t c) const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const Real> grad() const { return node_->grad; }
  std::span<Real> mutable_grad() { return node_->grad_storage(); }
  void zero_grad();
  void drop_grad() { node_->grad.clear(); node_->grad.shrink_to_fit(); }
  bool is_leaf() const { return !node_->backward; }

  // Identity of the underlying node, for sharing assertions.
  const void* id() const { return node_.get(); }

  // Detached copy of the values: same shape, no history.
  Tensor detach() const;

  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  friend Tensor make_op_result(Shape, std::vector<Real>,
                               std::vector<Tensor>,
                               std::function<void(detail::Node&)>);
  std::shared_ptr<detail::Node> node_;
};

// Accumulates d(loss)/dx into every ancestor x that requires grad. Interior
// nodes are reset per call; leaves accumulate across calls.
void backward(const Tensor& loss);

bool grad_enabled();

// Disables graph recording for its lifetime (evaluation, frozen forwards).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Builds an op output. When no parent requires grad (or recording is off)
// the result is a plain constant and `backward_fn` is discarded.
Tensor make_op_result(Shape shape, std::vector<Real> values,
                      std::vector<Tensor> parents,
                      std::function<void(detail::Node&)> backward_fn);

}  // namespace xlqa::ad

#endif  // XLQA_AUTODIFF_TENSOR_H_
