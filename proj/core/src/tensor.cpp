#include "adapitch/tensor.hpp"

#include <sstream>
#include <unordered_set>

namespace adapitch {

int64_t numel(const Shape& shape) {
  int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << ")";
  return os.str();
}

static std::shared_ptr<TensorNode> make_node(Shape shape, bool needs_grad) {
  for (int d : shape) check(d > 0, "tensor extents must be positive, got " + shape_str(shape));
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->needs_grad = needs_grad;
  return n;
}

Tensor Tensor::zeros(Shape shape, bool needs_grad) {
  auto n = make_node(std::move(shape), needs_grad);
  n->value.assign(static_cast<size_t>(numel(n->shape)), 0.0f);
  Tensor t;
  t.node() = std::move(n);
  return t;
}

Tensor Tensor::full(Shape shape, float v, bool needs_grad) {
  Tensor t = zeros(std::move(shape), needs_grad);
  for (auto& x : t.node()->value) x = v;
  return t;
}

Tensor Tensor::from(Shape shape, std::vector<float> values, bool needs_grad) {
  auto n = make_node(std::move(shape), needs_grad);
  check(static_cast<int64_t>(values.size()) == numel(n->shape),
        "value count does not match shape " + shape_str(n->shape));
  n->value = std::move(values);
  Tensor t;
  t.node() = std::move(n);
  return t;
}

Tensor Tensor::scalar(float v) { return from({1}, {v}); }

float Tensor::item() const {
  check(size() == 1, "item() requires a scalar tensor, shape is " + shape_str(shape()));
  return node_->value[0];
}

void backward(const Tensor& loss) {
  check(loss.defined() && loss.size() == 1, "backward requires a scalar loss");

  // Iterative post-order DFS; visiting inputs in recorded order keeps the
  // traversal (and therefore float accumulation order) deterministic.
  std::vector<TensorNode*> topo;
  std::unordered_set<TensorNode*> seen;
  struct Frame {
    TensorNode* node;
    size_t next_input;
  };
  std::vector<Frame> stack;
  if (loss.node()->needs_grad) stack.push_back({loss.node().get(), 0});
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_input == 0) {
      if (seen.count(f.node)) {
        stack.pop_back();
        continue;
      }
      seen.insert(f.node);
    }
    if (f.next_input < f.node->inputs.size()) {
      TensorNode* in = f.node->inputs[f.next_input++].node().get();
      if (in->needs_grad && !seen.count(in)) stack.push_back({in, 0});
    } else {
      topo.push_back(f.node);
      stack.pop_back();
    }
  }

  // Reset-then-accumulate policy: each backward() call starts from zero.
  for (TensorNode* n : topo) n->grad.assign(n->value.size(), 0.0f);
  if (topo.empty()) return;
  topo.back()->grad[0] = 1.0f;  // d loss / d loss

  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    TensorNode* n = *it;
    if (n->backprop) n->backprop(*n);
  }
}

}  // namespace adapitch
