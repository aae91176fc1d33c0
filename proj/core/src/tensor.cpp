#include "pixtok/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "pixtok/error.hpp"

namespace pixtok {

namespace {

std::atomic<std::uint64_t> g_next_seq{1};
thread_local bool t_grad_enabled = true;

std::shared_ptr<detail::Node> new_node(Shape shape, std::vector<float> value,
                                       bool requires_grad) {
  if (static_cast<std::int64_t>(value.size()) != shape_numel(shape)) {
    throw ShapeError("tensor data length " + std::to_string(value.size()) +
                     " does not match shape " + shape_str(shape));
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  node->seq = g_next_seq.fetch_add(1, std::memory_order_relaxed);
  return node;
}

}  // namespace

std::int64_t shape_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) {
    if (d < 0) throw ShapeError("negative dimension in shape " + shape_str(shape));
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::vector<float>& detail::Node::ensure_grad() {
  if (grad.empty() && !value.empty()) grad.assign(value.size(), 0.0f);
  return grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0f, requires_grad);
}

Tensor Tensor::full(Shape shape, float value, bool requires_grad) {
  auto n = shape_numel(shape);
  return Tensor(new_node(std::move(shape), std::vector<float>(n, value), requires_grad));
}

Tensor Tensor::from(Shape shape, std::vector<float> values, bool requires_grad) {
  return Tensor(new_node(std::move(shape), std::move(values), requires_grad));
}

Tensor Tensor::scalar(float value) { return from({}, {value}); }

const Shape& Tensor::shape() const {
  if (!node_) throw ShapeError("use of undefined tensor");
  return node_->shape;
}

std::int64_t Tensor::dim(int i) const {
  const auto& s = shape();
  int r = static_cast<int>(s.size());
  int idx = i < 0 ? r + i : i;
  if (idx < 0 || idx >= r) {
    throw ShapeError("dim " + std::to_string(i) + " out of range for shape " + shape_str(s));
  }
  return s[idx];
}

std::int64_t Tensor::numel() const { return static_cast<std::int64_t>(node_ ? node_->value.size() : 0); }

std::span<float> Tensor::data() {
  if (!node_) throw ShapeError("use of undefined tensor");
  return node_->value;
}

std::span<const float> Tensor::data() const {
  if (!node_) throw ShapeError("use of undefined tensor");
  return node_->value;
}

float Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape()));
  return node_->value[0];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

void Tensor::set_requires_grad(bool flag) {
  if (!node_) throw ShapeError("use of undefined tensor");
  node_->requires_grad = flag;
}

bool Tensor::has_grad() const { return node_ && !node_->grad.empty(); }

std::span<float> Tensor::grad() {
  if (!node_) throw ShapeError("use of undefined tensor");
  return node_->ensure_grad();
}

std::span<const float> Tensor::grad() const {
  if (!node_) throw ShapeError("use of undefined tensor");
  return node_->ensure_grad();
}

void Tensor::zero_grad() {
  if (node_ && !node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0f);
}

Tensor Tensor::detach() const {
  return Tensor(new_node(shape(), node_->value, false));
}

bool grad_enabled() { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ShapeError("backward() requires a scalar loss");
  }
  auto* root = loss.node();
  if (!root->requires_grad) return;

  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<detail::Node*> stack{root};
  while (!stack.empty()) {
    auto* n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second) continue;
    order.push_back(n);
    for (auto& p : n->parents) {
      if (p->requires_grad) stack.push_back(p.get());
    }
  }
  std::sort(order.begin(), order.end(),
            [](const detail::Node* a, const detail::Node* b) { return a->seq > b->seq; });

  for (auto* n : order) {
    if (!n->is_leaf) n->grad.assign(n->value.size(), 0.0f);
  }
  root->ensure_grad()[0] += 1.0f;
  for (auto* n : order) {
    if (n->backward_fn) n->backward_fn(*n);
  }
}

namespace detail {

Tensor make_result(const char* op, Shape shape, std::vector<float> value,
                   std::vector<Tensor> parents, std::function<void(Node&)> backward_fn) {
  check_finite(op, value);
  bool needs = false;
  if (t_grad_enabled) {
    for (const auto& p : parents) needs = needs || (p.defined() && p.requires_grad());
  }
  auto node = new_node(std::move(shape), std::move(value), needs);
  node->op = op;
  if (needs) {
    node->is_leaf = false;
    node->parents.reserve(parents.size());
    for (auto& p : parents) {
      // Undefined optional inputs keep their slot so indices stay stable.
      node->parents.push_back(p.defined() ? p.node_ptr() : std::make_shared<Node>());
    }
    node->backward_fn = std::move(backward_fn);
  }
  return Tensor(std::move(node));
}

void check_finite(const char* op, std::span<const float> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw NumericError(op, std::string("non-finite value in output of ") + op +
                                 " at element " + std::to_string(i));
    }
  }
}

}  // namespace detail

}  // namespace pixtok
