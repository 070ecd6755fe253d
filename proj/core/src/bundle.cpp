#include "pref/bundle.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>

namespace pref::nets {

void BundleSpec::validate() const {
  if (n < 1 || m < 1) throw ad::ShapeError("BundleSpec: basis dims must be positive");
  if (tau < 1) throw ad::ShapeError("BundleSpec: tau must be >= 1");
  if (transition_count <= tau)
    throw ad::ShapeError("BundleSpec: interval too short, needs more than tau+1 frames");
  for (int a = 0; a < 3; ++a)
    if (!(bounds_min[a] < bounds_max[a]))
      throw ad::ShapeError("BundleSpec: bounds_min must be strictly below bounds_max");
}

namespace {

template <typename T>
ad::Tensor<T> const_row(const std::vector<double>& values) {
  std::vector<T> data(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) data[i] = static_cast<T>(values[i]);
  return ad::Tensor<T>::from(std::move(data), {1, static_cast<std::int64_t>(values.size())});
}

void warn_out_of_bounds_once() {
  static std::atomic<bool> warned{false};
  if (!warned.exchange(true))
    std::fprintf(stderr,
                 "warning: query points outside scene bounds were clamped "
                 "(further warnings suppressed)\n");
}

// Normalizes world points to [-1,1] over the bundle bounds, clamping
// saturated coordinates, and warns once if anything actually clamped.
template <typename T>
ad::Tensor<T> normalize_points(const BundleSpec& spec, const ad::Tensor<T>& points) {
  if (points.rank() != 2 || points.dim(1) != 3)
    throw ad::ShapeError("field query: points must be [N,3], got " +
                         ad::format_shape(points.shape()));
  std::vector<double> srow(3), orow(3);
  for (int a = 0; a < 3; ++a) {
    const double span = spec.bounds_max[a] - spec.bounds_min[a];
    srow[a] = 2.0 / span;
    orow[a] = -2.0 * spec.bounds_min[a] / span - 1.0;
  }
  const auto& data = points.data();
  const T pad = static_cast<T>(1.0 + 1e-6);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int a = static_cast<int>(i % 3);
    const T q = static_cast<T>(static_cast<double>(data[i]) * srow[a] + orow[a]);
    if (q < -pad || q > pad) {
      warn_out_of_bounds_once();
      break;
    }
  }
  auto q = ad::add(ad::mul(points, const_row<T>(srow)), const_row<T>(orow));
  return ad::clamp(q, T(-1), T(1));
}

}  // namespace

template <typename T>
std::vector<ad::Tensor<T>> FieldBundle<T>::parameters(bool include_predictor) const {
  std::vector<ad::Tensor<T>> out = field.parameters();
  for (auto& p : motion.parameters()) out.push_back(p);
  if (spec.embedding_mode == EmbeddingMode::kBasis) out.push_back(basis);
  for (auto& w : weights) out.push_back(w);
  if (include_predictor)
    for (auto& p : predictor.parameters()) out.push_back(p);
  return out;
}

template <typename T>
std::int64_t FieldBundle<T>::parameter_count(bool include_predictor) const {
  std::int64_t n = 0;
  for (const auto& p : parameters(include_predictor)) n += p.numel();
  return n;
}

template <typename T>
ad::Tensor<T> FieldBundle<T>::embed_weights(const ad::Tensor<T>& w) const {
  const std::int64_t wd = spec.weight_dim();
  if (w.rank() != 2 || w.dim(0) != 1 || w.dim(1) != wd)
    throw ad::ShapeError("embed_weights: expects [1," + std::to_string(wd) + "], got " +
                         ad::format_shape(w.shape()));
  if (spec.embedding_mode == EmbeddingMode::kPerFrame) return w;
  return ad::matmul(w, basis);
}

template <typename T>
ad::Tensor<T> FieldBundle<T>::transition_embedding(int k) const {
  if (k < 0 || k >= static_cast<int>(weights.size()))
    throw ad::ShapeError("transition_embedding: transition " + std::to_string(k) +
                         " outside stored range of " + std::to_string(weights.size()));
  return embed_weights(weights[static_cast<std::size_t>(k)]);
}

template <typename T>
ad::Tensor<T> FieldBundle<T>::spacetime_query(const ad::Tensor<T>& points, double t) const {
  if (!initialized()) throw ad::ShapeError("spacetime_query: uninitialized bundle");
  if (t < -1e-9 || t > 1.0 + 1e-9)
    throw ad::ShapeError("spacetime_query: t=" + std::to_string(t) + " outside [0,1]");
  auto q = normalize_points(spec, points);
  auto enc_p = positional_encode(q, spec.enc_position);
  auto enc_t = const_row<T>(encode_values({t}, spec.enc_time));
  auto raw = field.forward(ad::concat_cols<T>({enc_p, ad::repeat_rows(enc_t, points.dim(0))}));
  auto rgb = ad::sigmoid(ad::slice_cols(raw, 0, 3));
  auto sigma = ad::relu(ad::slice_cols(raw, 3, 1));
  return ad::concat_cols<T>({rgb, sigma});
}

template <typename T>
ad::Tensor<T> FieldBundle<T>::motion_query(const ad::Tensor<T>& points,
                                           const ad::Tensor<T>& omega) const {
  if (!initialized()) throw ad::ShapeError("motion_query: uninitialized bundle");
  if (omega.rank() != 2 || omega.dim(1) != spec.m)
    throw ad::ShapeError("motion_query: embedding must have length " + std::to_string(spec.m) +
                         ", got " + ad::format_shape(omega.shape()));
  auto q = normalize_points(spec, points);
  auto enc_p = positional_encode(q, spec.enc_position);
  const std::int64_t n = points.dim(0);
  auto om = omega.dim(0) == n ? omega : ad::repeat_rows(omega, n);
  return motion.forward(ad::concat_cols<T>({enc_p, om}));
}

template <typename T>
ad::Tensor<T> FieldBundle<T>::predict_weights(const std::vector<ad::Tensor<T>>& w_prev) const {
  if (static_cast<int>(w_prev.size()) != spec.tau)
    throw ad::ShapeError("predict_weights: expects " + std::to_string(spec.tau) +
                         " history vectors, got " + std::to_string(w_prev.size()));
  const std::int64_t wd = spec.weight_dim();
  for (const auto& w : w_prev)
    if (w.rank() != 2 || w.dim(0) != 1 || w.dim(1) != wd)
      throw ad::ShapeError("predict_weights: history entry has shape " +
                           ad::format_shape(w.shape()) + ", expected [1," + std::to_string(wd) +
                           "]");
  return predictor.forward(ad::concat_cols(w_prev));
}

template <typename T>
std::array<double, 4> FieldBundle<T>::query_point(const std::array<double, 3>& p,
                                                  double t) const {
  ad::NoGradGuard guard;
  auto pt = ad::Tensor<T>::from(
      {static_cast<T>(p[0]), static_cast<T>(p[1]), static_cast<T>(p[2])}, {1, 3});
  auto out = spacetime_query(pt, t);
  return {static_cast<double>(out.data()[0]), static_cast<double>(out.data()[1]),
          static_cast<double>(out.data()[2]), static_cast<double>(out.data()[3])};
}

template <typename T>
std::array<double, 3> FieldBundle<T>::displace_point(const std::array<double, 3>& p,
                                                     int transition) const {
  ad::NoGradGuard guard;
  auto pt = ad::Tensor<T>::from(
      {static_cast<T>(p[0]), static_cast<T>(p[1]), static_cast<T>(p[2])}, {1, 3});
  auto dp = motion_query(pt, transition_embedding(transition));
  return {static_cast<double>(dp.data()[0]), static_cast<double>(dp.data()[1]),
          static_cast<double>(dp.data()[2])};
}

template <typename T>
FieldBundle<T> init_bundle(const BundleSpec& spec, std::uint64_t seed) {
  spec.validate();
  FieldBundle<T> bundle;
  bundle.spec = spec;
  Rng root(seed);
  // Independent streams per component, so e.g. removing the predictor or
  // switching embedding mode leaves every other component's init intact.
  Rng rng_field = root.fork(1);
  Rng rng_motion = root.fork(2);
  Rng rng_predictor = root.fork(3);
  Rng rng_basis = root.fork(4);
  Rng rng_weights = root.fork(5);

  MlpSpec f;
  f.in_dim = encoded_dim(3, spec.enc_position) + encoded_dim(1, spec.enc_time);
  f.width = spec.field_width;
  f.hidden_layers = spec.field_layers;
  f.skip_layer = spec.field_skip;
  f.out_dim = 4;
  bundle.field = make_mlp<T>(f, "field", rng_field);

  MlpSpec m;
  m.in_dim = encoded_dim(3, spec.enc_position) + spec.m;
  m.width = spec.motion_width;
  m.hidden_layers = spec.motion_layers;
  m.skip_layer = spec.motion_skip;
  m.out_dim = 3;
  bundle.motion = make_mlp<T>(m, "motion", rng_motion);

  MlpSpec p;
  p.in_dim = spec.tau * spec.weight_dim();
  p.width = spec.predictor_width;
  p.hidden_layers = spec.predictor_layers;
  p.skip_layer = -1;
  p.out_dim = spec.weight_dim();
  bundle.predictor = make_mlp<T>(p, "predictor", rng_predictor);

  const double sigma = 0.1 / std::sqrt(static_cast<double>(spec.m));
  if (spec.embedding_mode == EmbeddingMode::kBasis) {
    std::vector<T> b(static_cast<std::size_t>(spec.n) * spec.m);
    for (auto& v : b) v = static_cast<T>(sigma * rng_basis.normal());
    bundle.basis = ad::Tensor<T>::from(std::move(b), {spec.n, spec.m}, true);
    bundle.basis.set_name("basis");
  }
  for (int k = 0; k < spec.transition_count; ++k) {
    std::vector<T> w(static_cast<std::size_t>(spec.weight_dim()));
    for (auto& v : w) v = static_cast<T>(sigma * rng_weights.normal());
    auto wt = ad::Tensor<T>::from(std::move(w), {1, spec.weight_dim()}, true);
    char name[16];
    std::snprintf(name, sizeof(name), "w.%03d", k);
    wt.set_name(name);
    bundle.weights.push_back(std::move(wt));
  }
  return bundle;
}

template struct FieldBundle<float>;
template struct FieldBundle<double>;
template FieldBundle<float> init_bundle<float>(const BundleSpec&, std::uint64_t);
template FieldBundle<double> init_bundle<double>(const BundleSpec&, std::uint64_t);

}  // namespace pref::nets
