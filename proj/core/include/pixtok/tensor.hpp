#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace pixtok {

using Shape = std::vector<std::int64_t>;

std::int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<float> value;
  std::vector<float> grad;  // empty until first accumulation
  bool requires_grad = false;
  bool is_leaf = true;
  std::uint64_t seq = 0;  // recording order
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this->grad, accumulates into parents' grads.
  std::function<void(Node&)> backward_fn;

  std::vector<float>& ensure_grad();
};

}  // namespace detail

// Reference-counted handle to a value in the compute graph. Copies share the
// underlying storage; use clone() for a deep copy.
//
// Storage is 32-bit float, row-major. Gradients are accumulated by
// backward(); call zero_grad() between steps.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, float value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<float> values, bool requires_grad = false);
  static Tensor scalar(float value);

  bool defined() const noexcept { return node_ != nullptr; }
  const Shape& shape() const;
  int rank() const { return static_cast<int>(shape().size()); }
  // Negative indices count from the back.
  std::int64_t dim(int i) const;
  std::int64_t numel() const;

  std::span<float> data();
  std::span<const float> data() const;
  float item() const;
  float at(std::int64_t flat_index) const { return data()[flat_index]; }

  bool requires_grad() const;
  void set_requires_grad(bool flag);
  bool has_grad() const;
  std::span<float> grad();
  std::span<const float> grad() const;
  void zero_grad();

  // New leaf holding a copy of the value, disconnected from the graph.
  Tensor detach() const;
  Tensor clone() const { return detach(); }

  detail::Node* node() const { return node_.get(); }
  const std::shared_ptr<detail::Node>& node_ptr() const { return node_; }

  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

// Reverse-mode differentiation from a scalar. Every requires_grad leaf
// reachable from `loss` receives d(loss)/d(leaf) added to its grad, so calling
// backward twice without zero_grad() accumulates. Intermediate grads are reset
// on each call. Nodes are visited in exact reverse recording order.
void backward(const Tensor& loss);

// Graph recording is on by default; a NoGradGuard disables it for the current
// thread (ops then produce plain leaves).
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

namespace detail {

// Creates an op output node. Parents are recorded only when grad mode is on and
// at least one parent requires grad.
Tensor make_result(const char* op, Shape shape, std::vector<float> value,
                   std::vector<Tensor> parents,
                   std::function<void(Node&)> backward_fn);

// Throws NumericError when any value is NaN/Inf.
void check_finite(const char* op, std::span<const float> values);

}  // namespace detail

}  // namespace pixtok
