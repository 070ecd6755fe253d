#pragma once

#include <string>

#include "pref/ops.hpp"
#include "pref/rng.hpp"

namespace pref::nets {

struct MlpSpec {
  std::int64_t in_dim = 0;
  std::int64_t width = 128;
  int hidden_layers = 6;
  // Hidden layer whose input is concatenated with the network input;
  // -1 disables the skip. Must lie strictly inside the stack.
  int skip_layer = -1;
  std::int64_t out_dim = 1;

  void validate() const;
};

// Fully connected ReLU stack with a linear output layer. Output heads
// (sigmoid color, rectified density, raw displacement) are applied by the
// caller, which keeps one Mlp type for all three networks.
template <typename T>
struct Mlp {
  MlpSpec spec;
  std::vector<ad::Tensor<T>> weights;
  std::vector<ad::Tensor<T>> biases;

  bool initialized() const { return !weights.empty(); }
  ad::Tensor<T> forward(const ad::Tensor<T>& x) const;
  std::vector<ad::Tensor<T>> parameters() const;
  std::int64_t parameter_count() const;
};

// Uniform fan-in init, U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and
// biases. Parameter tensors are named `prefix.w{i}` / `prefix.b{i}`.
template <typename T>
Mlp<T> make_mlp(const MlpSpec& spec, const std::string& prefix, Rng& rng);

extern template struct Mlp<float>;
extern template struct Mlp<double>;
extern template Mlp<float> make_mlp<float>(const MlpSpec&, const std::string&, Rng&);
extern template Mlp<double> make_mlp<double>(const MlpSpec&, const std::string&, Rng&);

}  // namespace pref::nets
