#include "pref/tensor.hpp"

#include <unordered_set>

namespace pref::ad {

namespace {
bool g_strict = false;
}

bool strict_numerics() { return g_strict; }
void set_strict_numerics(bool on) { g_strict = on; }

std::string format_shape(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

std::int64_t shape_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

template <typename T>
void backward(const Tensor<T>& loss) {
  if (loss.numel() != 1)
    throw ShapeError("backward: loss must be a scalar, got shape " + format_shape(loss.shape()));
  auto root = loss.impl();
  if (!root->requires_grad) return;

  // Iterative post-order DFS; reversing it gives the propagation order.
  std::vector<TensorImpl<T>*> order;
  std::unordered_set<TensorImpl<T>*> visited;
  struct Frame {
    TensorImpl<T>* node;
    std::size_t next_input;
  };
  std::vector<Frame> stack{{root.get(), 0}};
  visited.insert(root.get());
  while (!stack.empty()) {
    Frame& top = stack.back();
    if (top.next_input < top.node->inputs.size()) {
      TensorImpl<T>* in = top.node->inputs[top.next_input++].get();
      if (in->requires_grad && visited.insert(in).second) stack.push_back({in, 0});
    } else {
      order.push_back(top.node);
      stack.pop_back();
    }
  }

  for (auto* node : order)
    if (node->grad.size() != node->data.size()) node->grad.assign(node->data.size(), T(0));
  root->grad[0] = T(1);

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorImpl<T>* node = *it;
    if (node->backward_fn) node->backward_fn(*node);
  }
}

template void backward<float>(const Tensor<float>&);
template void backward<double>(const Tensor<double>&);

}  // namespace pref::ad
