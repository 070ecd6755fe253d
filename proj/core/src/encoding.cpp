#include "pref/encoding.hpp"

#include <cmath>

namespace pref::nets {

std::vector<double> encode_values(const std::vector<double>& x, const EncoderSpec& spec) {
  constexpr double kPi = 3.14159265358979323846;
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(encoded_dim(static_cast<std::int64_t>(x.size()), spec)));
  if (spec.include_input) out.insert(out.end(), x.begin(), x.end());
  for (int l = 0; l < spec.num_frequencies; ++l) {
    const double f = kPi * static_cast<double>(std::int64_t(1) << l);
    for (double v : x) out.push_back(std::sin(f * v));
    for (double v : x) out.push_back(std::cos(f * v));
  }
  return out;
}

}  // namespace pref::nets
