#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pref/tensor.hpp"

namespace pref::opt {

// lr(it) = lr_start * (lr_end / lr_start)^(it / span), evaluated without
// clamping so warm restarts past `span` keep decaying smoothly.
struct LrSchedule {
  double lr_start = 5e-4;
  double lr_end = 5e-6;
  std::int64_t span = 50000;
};

double scheduled_lr(const LrSchedule& schedule, std::int64_t iteration);

template <typename T>
struct AdamState {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step_count = 0;

  struct Moments {
    std::vector<T> m;
    std::vector<T> v;
    // Per-parameter update count: transition weights only join the step
    // when their window was sampled, so bias correction tracks each
    // parameter's own history rather than the global call count.
    std::int64_t steps = 0;
  };
  // Keyed by parameter name; a std::map keeps checkpoint order stable.
  std::map<std::string, Moments> moments;
};

// One update over all listed parameters. Every parameter must be named,
// carry a gradient, and keep its shape across calls; gradients are zeroed
// after the update so the next step starts clean. Parameters absent from
// the list keep their moments untouched.
template <typename T>
void adam_step(std::vector<ad::Tensor<T>>& params, AdamState<T>& state);

template <typename T>
void set_learning_rate(AdamState<T>& state, const LrSchedule& schedule, std::int64_t iteration) {
  state.lr = scheduled_lr(schedule, iteration);
}

extern template struct AdamState<float>;
extern template struct AdamState<double>;
extern template void adam_step<float>(std::vector<ad::Tensor<float>>&, AdamState<float>&);
extern template void adam_step<double>(std::vector<ad::Tensor<double>>&, AdamState<double>&);

}  // namespace pref::opt
