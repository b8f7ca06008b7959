#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "adapitch/error.hpp"

namespace adapitch {

using Shape = std::vector<int>;

int64_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class Tensor;

// One node of the implicit computation graph. Holds the float32 payload, an
// optional gradient buffer, and the closure that pushes gradients into the
// node's inputs during the backward pass.
struct TensorNode {
  Shape shape;
  std::vector<float> value;
  std::vector<float> grad;  // sized lazily by backward()
  bool needs_grad = false;
  bool parameter = false;  // leaf created through a ParameterSet
  std::vector<Tensor> inputs;
  std::function<void(TensorNode&)> backprop;  // empty for leaves
};

// Value-semantics handle to a graph node. Copies share the node.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool needs_grad = false);
  static Tensor full(Shape shape, float v, bool needs_grad = false);
  static Tensor from(Shape shape, std::vector<float> values, bool needs_grad = false);
  static Tensor scalar(float v);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  int dim(int i) const { return node_->shape[static_cast<size_t>(i)]; }
  int64_t size() const { return static_cast<int64_t>(node_->value.size()); }

  std::span<const float> values() const { return node_->value; }
  /// Mutable access to a leaf's payload (initialization, optimizer updates,
  /// checkpoint loads). Must not be used on a tensor already consumed by an op.
  std::span<float> values_mut() { return node_->value; }

  /// Scalar payload; requires size() == 1.
  float item() const;

  bool needs_grad() const { return node_->needs_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const float> grad() const { return node_->grad; }
  std::span<float> grad_mut() { return node_->grad; }

  std::shared_ptr<TensorNode>& node() { return node_; }
  const std::shared_ptr<TensorNode>& node() const { return node_; }

 private:
  std::shared_ptr<TensorNode> node_;
};

// Reverse-mode sweep from a scalar loss. Gradients of every node reachable
// from `loss` are reset to zero first, then accumulated; nodes with
// needs_grad == false are skipped entirely.
void backward(const Tensor& loss);

}  // namespace adapitch
