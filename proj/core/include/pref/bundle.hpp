#pragma once

#include <array>

#include "pref/encoding.hpp"
#include "pref/mlp.hpp"

namespace pref::nets {

// kBasis factors each transition embedding as w·B with w in R^n; kPerFrame
// stores an independent embedding per transition (the ablation arm) and the
// predictor then runs on R^m directly.
enum class EmbeddingMode { kBasis, kPerFrame };

struct BundleSpec {
  int n = 5;
  int m = 32;
  int tau = 3;
  EmbeddingMode embedding_mode = EmbeddingMode::kBasis;
  // One weight vector per adjacent-frame transition; frame times are
  // normalized to [0,1] so the frame step is 1/transition_count.
  int transition_count = 24;

  EncoderSpec enc_position{10, true};
  EncoderSpec enc_time{6, true};

  std::int64_t field_width = 128;
  int field_layers = 6;
  int field_skip = 3;
  std::int64_t motion_width = 128;
  int motion_layers = 6;
  int motion_skip = 3;
  std::int64_t predictor_width = 128;
  int predictor_layers = 5;

  std::array<double, 3> bounds_min{-1.0, -1.0, -1.0};
  std::array<double, 3> bounds_max{1.0, 1.0, 1.0};

  void validate() const;
  std::int64_t weight_dim() const { return embedding_mode == EmbeddingMode::kBasis ? n : m; }
  double frame_step() const { return 1.0 / static_cast<double>(transition_count); }
};

template <typename T>
struct FieldBundle {
  BundleSpec spec;
  Mlp<T> field;      // [enc(p), enc(t)] -> rgb logits + density logit
  Mlp<T> motion;     // [enc(p), omega]  -> displacement, world units
  Mlp<T> predictor;  // concat of tau previous weights -> next weight
  ad::Tensor<T> basis;                 // [n,m], kBasis mode only
  std::vector<ad::Tensor<T>> weights;  // per transition, [1, weight_dim]

  bool initialized() const { return field.initialized(); }

  // All trainable tensors in a fixed order. The predictor can be excluded
  // so a gamma=0 run never touches it.
  std::vector<ad::Tensor<T>> parameters(bool include_predictor = true) const;
  std::int64_t parameter_count(bool include_predictor = true) const;

  // omega = w·B ([1,n] -> [1,m]); in kPerFrame mode w already is the
  // embedding and passes through.
  ad::Tensor<T> embed_weights(const ad::Tensor<T>& w) const;
  ad::Tensor<T> transition_embedding(int k) const;

  // Batched field query at world points [N,3]; returns [N,4] as rgb in
  // [0,1] and density >= 0 (heads applied). Points are normalized to the
  // bundle bounds and clamped; out-of-bounds inputs warn once per process.
  ad::Tensor<T> spacetime_query(const ad::Tensor<T>& points, double t) const;
  // Displacement of points under embedding omega ([1,m] or [N,m]).
  ad::Tensor<T> motion_query(const ad::Tensor<T>& points, const ad::Tensor<T>& omega) const;
  // Next weight vector from exactly tau previous ones (each [1, weight_dim]).
  ad::Tensor<T> predict_weights(const std::vector<ad::Tensor<T>>& w_prev) const;

  // Single-point convenience wrappers used by tracking and tests.
  std::array<double, 4> query_point(const std::array<double, 3>& p, double t) const;
  std::array<double, 3> displace_point(const std::array<double, 3>& p, int transition) const;
};

template <typename T>
FieldBundle<T> init_bundle(const BundleSpec& spec, std::uint64_t seed);

extern template struct FieldBundle<float>;
extern template struct FieldBundle<double>;
extern template FieldBundle<float> init_bundle<float>(const BundleSpec&, std::uint64_t);
extern template FieldBundle<double> init_bundle<double>(const BundleSpec&, std::uint64_t);

}  // namespace pref::nets
