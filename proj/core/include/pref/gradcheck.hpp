#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pref/tensor.hpp"

namespace pref::ad {

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
  std::int64_t worst_index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> params;
  double max_rel_err = 0.0;
  bool pass = false;
  std::string to_string() const;
};

// Compares reverse-mode gradients of a scalar-valued f against central
// finite differences, elementwise over every parameter. Runs in 64-bit
// only; f must be deterministic and is re-evaluated 2*numel times.
GradCheckReport grad_check(
    const std::function<Tensor<double>(const std::vector<Tensor<double>>&)>& f,
    std::vector<Tensor<double>> params, double step = 1e-4, double tol = 1e-3);

}  // namespace pref::ad
