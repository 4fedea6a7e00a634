#include "xlqa/autodiff/tensor.h"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include "xlqa/common/error.h"

namespace xlqa::ad {

namespace {
thread_local bool g_grad_enabled = true;
}  // namespace

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::vector<Real>& detail::Node::grad_storage() {
  if (grad.empty()) grad.assign(value.size(), Real(0));
  return grad;
}

Tensor::Tensor(Shape shape, std::vector<Real> values, bool requires_grad) {
  for (std::size_t d : shape) {
    if (d == 0) throw ContractError("tensor dimension must be positive");
  }
  if (shape_size(shape) != values.size()) {
    throw ContractError("tensor shape " + shape_string(shape) +
                        " does not match " + std::to_string(values.size()) +
                        " values");
  }
  node_ = std::make_shared<detail::Node>();
  node_->shape = std::move(shape);
  node_->value = std::move(values);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return filled(std::move(shape), Real(0), requires_grad);
}

Tensor Tensor::filled(Shape shape, Real value, bool requires_grad) {
  const std::size_t n = shape_size(shape);
  return Tensor(std::move(shape), std::vector<Real>(n, value), requires_grad);
}

Tensor Tensor::scalar(Real value, bool requires_grad) {
  return Tensor({1}, {value}, requires_grad);
}

std::size_t Tensor::rows() const {
  const auto& s = node_->shape;
  if (s.size() == 1) return 1;
  if (s.size() == 2) return s[0];
  throw ContractError("rows() needs a rank-1 or rank-2 tensor, got " +
                      shape_string(s));
}

std::size_t Tensor::cols() const {
  const auto& s = node_->shape;
  if (s.size() == 1) return s[0];
  if (s.size() == 2) return s[1];
  throw ContractError("cols() needs a rank-1 or rank-2 tensor, got " +
                      shape_string(s));
}

Real Tensor::item() const {
  if (size() != 1) {
    throw ContractError("item() on non-scalar tensor " +
                        shape_string(shape()));
  }
  return node_->value[0];
}

Real Tensor::at(std::size_t r, std::size_t c) const {
  return node_->value.at(r * cols() + c);
}

void Tensor::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), Real(0));
}

Tensor Tensor::detach() const {
  return Tensor(node_->shape, node_->value, false);
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Tensor make_op_result(Shape shape, std::vector<Real> values,
                      std::vector<Tensor> parents,
                      std::function<void(detail::Node&)> backward_fn) {
  Tensor out(std::move(shape), std::move(values), false);
  if (!g_grad_enabled) return out;
  bool any = false;
  for (const Tensor& p : parents) any = any || p.requires_grad();
  if (!any) return out;
  out.node_->requires_grad = true;
  out.node_->parents.reserve(parents.size());
  for (Tensor& p : parents) out.node_->parents.push_back(p.node());
  out.node_->backward = std::move(backward_fn);
  return out;
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ContractError("backward() needs a scalar loss");
  }
  detail::Node* root = loss.node().get();
  if (!root->requires_grad) return;

  // Iterative post-order DFS; the graph is acyclic by construction since a
  // node can only reference nodes that existed before it.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  seen.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::Node* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (detail::Node* n : order) {
    if (n->backward) n->grad.assign(n->value.size(), Real(0));
  }
  root->grad_storage()[0] += Real(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = *it;
    if (n->backward) n->backward(*n);
  }
}

}  // namespace xlqa::ad
