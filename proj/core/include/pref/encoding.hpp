#pragma once

#include "pref/ops.hpp"

namespace pref::nets {

struct EncoderSpec {
  int num_frequencies = 10;
  bool include_input = true;
};

inline std::int64_t encoded_dim(std::int64_t in_dim, const EncoderSpec& spec) {
  return in_dim * ((spec.include_input ? 1 : 0) + 2 * spec.num_frequencies);
}

// Frequency features [x?, sin(2^0 pi x), cos(2^0 pi x), ..., sin(2^{L-1} pi x),
// cos(2^{L-1} pi x)] per column of a [N,D] input. Inputs are expected
// pre-normalized ([-1,1] for space, [0,1] for time).
template <typename T>
ad::Tensor<T> positional_encode(const ad::Tensor<T>& x, const EncoderSpec& spec) {
  if (x.rank() != 2)
    throw ad::ShapeError("positional_encode: expects [N,D], got " + ad::format_shape(x.shape()));
  if (spec.num_frequencies < 0)
    throw ad::ShapeError("positional_encode: negative frequency count");
  std::vector<ad::Tensor<T>> parts;
  if (spec.include_input) parts.push_back(x);
  constexpr double kPi = 3.14159265358979323846;
  for (int l = 0; l < spec.num_frequencies; ++l) {
    auto scaled = ad::scale(x, static_cast<T>(kPi * static_cast<double>(std::int64_t(1) << l)));
    parts.push_back(ad::sin(scaled));
    parts.push_back(ad::cos(scaled));
  }
  if (parts.empty())
    throw ad::ShapeError("positional_encode: zero frequencies without include_input");
  return parts.size() == 1 ? parts[0] : ad::concat_cols(parts);
}

// Plain-arithmetic version for constant inputs (e.g. the frame time), so no
// graph node is built for values that are never differentiated.
std::vector<double> encode_values(const std::vector<double>& x, const EncoderSpec& spec);

}  // namespace pref::nets
