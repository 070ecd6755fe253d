#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace pref::ad {

using Shape = std::vector<std::int64_t>;

std::string format_shape(const Shape& shape);
std::int64_t shape_numel(const Shape& shape);

// Thrown when operand shapes are incompatible with a primitive.
class ShapeError : public std::runtime_error {
 public:
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown on non-finite values when strict numerics are enabled.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Strict mode rejects non-finite primitive inputs and loss values; the
// default mode only warns on non-finite losses.
bool strict_numerics();
void set_strict_numerics(bool on);

namespace detail {
inline thread_local bool g_grad_enabled = true;
}

inline bool grad_enabled() { return detail::g_grad_enabled; }

// Disables graph recording in a scope. Forward values are unchanged.
class NoGradGuard {
 public:
  NoGradGuard() : prev_(detail::g_grad_enabled) { detail::g_grad_enabled = false; }
  ~NoGradGuard() { detail::g_grad_enabled = prev_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

template <typename T>
struct TensorImpl {
  static_assert(std::is_floating_point_v<T>, "Tensor supports float and double");

  Shape shape;
  std::vector<T> data;
  bool requires_grad = false;
  std::vector<T> grad;  // sized lazily during backward

  // Graph record for non-leaf tensors. The closure pulls the output
  // gradient from `self.grad` and accumulates into the inputs.
  const char* op = nullptr;
  std::vector<std::shared_ptr<TensorImpl>> inputs;
  std::function<void(TensorImpl& self)> backward_fn;

  std::string name;

  bool is_leaf() const { return op == nullptr; }
};

template <typename T>
class Tensor {
 public:
  using Scalar = T;

  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorImpl<T>> impl) : impl_(std::move(impl)) {}

  static Tensor from(std::vector<T> values, Shape shape, bool requires_grad = false) {
    if (shape_numel(shape) != static_cast<std::int64_t>(values.size()))
      throw ShapeError("tensor: " + std::to_string(values.size()) +
                       " values do not fill shape " + format_shape(shape));
    auto impl = std::make_shared<TensorImpl<T>>();
    impl->shape = std::move(shape);
    impl->data = std::move(values);
    impl->requires_grad = requires_grad;
    return Tensor(std::move(impl));
  }

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    return full(std::move(shape), T(0), requires_grad);
  }

  static Tensor full(Shape shape, T value, bool requires_grad = false) {
    auto impl = std::make_shared<TensorImpl<T>>();
    impl->data.assign(static_cast<std::size_t>(shape_numel(shape)), value);
    impl->shape = std::move(shape);
    impl->requires_grad = requires_grad;
    return Tensor(std::move(impl));
  }

  static Tensor scalar(T value, bool requires_grad = false) {
    return full({1}, value, requires_grad);
  }

  bool defined() const { return impl_ != nullptr; }

  const Shape& shape() const { return impl_->shape; }
  std::int64_t rank() const { return static_cast<std::int64_t>(impl_->shape.size()); }
  std::int64_t dim(std::size_t i) const { return impl_->shape[i]; }
  std::int64_t numel() const { return static_cast<std::int64_t>(impl_->data.size()); }

  std::vector<T>& data() { return impl_->data; }
  const std::vector<T>& data() const { return impl_->data; }

  bool requires_grad() const { return impl_->requires_grad; }

  bool has_grad() const { return !impl_->grad.empty(); }
  std::vector<T>& grad() { return impl_->grad; }
  const std::vector<T>& grad() const { return impl_->grad; }

  void zero_grad() {
    if (!impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), T(0));
  }

  T item() const {
    if (numel() != 1)
      throw ShapeError("item: tensor of shape " + format_shape(shape()) + " is not a scalar");
    return impl_->data[0];
  }

  const std::string& name() const { return impl_->name; }
  Tensor& set_name(std::string n) {
    impl_->name = std::move(n);
    return *this;
  }

  // Leaf copy of the current values, cut off from the graph.
  Tensor detach() const { return from(impl_->data, impl_->shape, false); }

  std::shared_ptr<TensorImpl<T>> impl() const { return impl_; }

 private:
  std::shared_ptr<TensorImpl<T>> impl_;
};

// Reverse pass from a scalar loss. Every reachable tensor with
// requires_grad receives d(loss)/d(tensor), accumulated additively across
// fan-out. Each graph node is visited exactly once in reverse topological
// order.
template <typename T>
void backward(const Tensor<T>& loss);

template <typename U, typename T>
Tensor<U> cast(const Tensor<T>& x) {
  std::vector<U> out(x.data().begin(), x.data().end());
  return Tensor<U>::from(std::move(out), x.shape(), false);
}

extern template void backward<float>(const Tensor<float>&);
extern template void backward<double>(const Tensor<double>&);

}  // namespace pref::ad
