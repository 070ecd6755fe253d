#include "pref/mlp.hpp"

#include <cmath>

namespace pref::nets {

void MlpSpec::validate() const {
  if (in_dim < 1 || out_dim < 1 || width < 1)
    throw ad::ShapeError("MlpSpec: dimensions must be positive");
  if (hidden_layers < 1) throw ad::ShapeError("MlpSpec: needs at least one hidden layer");
  if (skip_layer != -1 && (skip_layer < 1 || skip_layer >= hidden_layers))
    throw ad::ShapeError("MlpSpec: skip layer " + std::to_string(skip_layer) +
                         " not strictly inside a " + std::to_string(hidden_layers) +
                         "-layer stack");
}

template <typename T>
ad::Tensor<T> Mlp<T>::forward(const ad::Tensor<T>& x) const {
  if (!initialized()) throw ad::ShapeError("Mlp: forward on uninitialized network");
  if (x.rank() != 2 || x.dim(1) != spec.in_dim)
    throw ad::ShapeError("Mlp: expects [N," + std::to_string(spec.in_dim) + "], got " +
                         ad::format_shape(x.shape()));
  ad::Tensor<T> h = x;
  for (int i = 0; i < spec.hidden_layers; ++i) {
    if (i == spec.skip_layer) h = ad::concat_cols<T>({h, x});
    h = ad::relu(ad::add(ad::matmul(h, weights[i]), biases[i]));
  }
  return ad::add(ad::matmul(h, weights.back()), biases.back());
}

template <typename T>
std::vector<ad::Tensor<T>> Mlp<T>::parameters() const {
  std::vector<ad::Tensor<T>> out;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    out.push_back(weights[i]);
    out.push_back(biases[i]);
  }
  return out;
}

template <typename T>
std::int64_t Mlp<T>::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& w : weights) n += w.numel();
  for (const auto& b : biases) n += b.numel();
  return n;
}

template <typename T>
Mlp<T> make_mlp(const MlpSpec& spec, const std::string& prefix, Rng& rng) {
  spec.validate();
  Mlp<T> net;
  net.spec = spec;
  for (int i = 0; i <= spec.hidden_layers; ++i) {
    std::int64_t fan_in = i == 0 ? spec.in_dim : spec.width;
    if (i == spec.skip_layer) fan_in += spec.in_dim;
    const std::int64_t fan_out = i == spec.hidden_layers ? spec.out_dim : spec.width;
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::vector<T> w(static_cast<std::size_t>(fan_in * fan_out));
    for (auto& v : w) v = static_cast<T>(rng.uniform(-bound, bound));
    std::vector<T> b(static_cast<std::size_t>(fan_out));
    for (auto& v : b) v = static_cast<T>(rng.uniform(-bound, bound));
    auto wt = ad::Tensor<T>::from(std::move(w), {fan_in, fan_out}, true);
    wt.set_name(prefix + ".w" + std::to_string(i));
    auto bt = ad::Tensor<T>::from(std::move(b), {1, fan_out}, true);
    bt.set_name(prefix + ".b" + std::to_string(i));
    net.weights.push_back(std::move(wt));
    net.biases.push_back(std::move(bt));
  }
  return net;
}

template struct Mlp<float>;
template struct Mlp<double>;
template Mlp<float> make_mlp<float>(const MlpSpec&, const std::string&, Rng&);
template Mlp<double> make_mlp<double>(const MlpSpec&, const std::string&, Rng&);

}  // namespace pref::nets
