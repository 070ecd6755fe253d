#include "pref/adam.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace pref::opt {

double scheduled_lr(const LrSchedule& schedule, std::int64_t iteration) {
  if (schedule.lr_start <= 0.0 || schedule.lr_end <= 0.0)
    throw std::invalid_argument("scheduled_lr: learning rates must be positive");
  if (schedule.span <= 0) throw std::invalid_argument("scheduled_lr: span must be positive");
  if (iteration < 0) throw std::invalid_argument("scheduled_lr: iteration must be >= 0");
  const double t = static_cast<double>(iteration) / static_cast<double>(schedule.span);
  return schedule.lr_start * std::pow(schedule.lr_end / schedule.lr_start, t);
}

template <typename T>
void adam_step(std::vector<ad::Tensor<T>>& params, AdamState<T>& state) {
  state.step_count += 1;
  std::set<std::string> seen;
  for (auto& p : params) {
    if (p.name().empty())
      throw std::runtime_error("adam_step: parameter without a name cannot track moments");
    if (!seen.insert(p.name()).second)
      throw std::runtime_error("adam_step: duplicate parameter name '" + p.name() + "'");
    if (!p.has_grad())
      throw std::runtime_error("adam_step: parameter '" + p.name() + "' has no gradient");
    auto& mom = state.moments[p.name()];
    const std::size_t n = p.data().size();
    if (mom.m.empty()) {
      mom.m.assign(n, T(0));
      mom.v.assign(n, T(0));
    } else if (mom.m.size() != n) {
      throw std::runtime_error("adam_step: parameter '" + p.name() + "' changed size");
    }
    mom.steps += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(mom.steps));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(mom.steps));
    T* value = p.impl()->data.data();
    T* grad = p.impl()->grad.data();
    for (std::size_t i = 0; i < n; ++i) {
      const double g = static_cast<double>(grad[i]);
      const double m = state.beta1 * static_cast<double>(mom.m[i]) + (1.0 - state.beta1) * g;
      const double v = state.beta2 * static_cast<double>(mom.v[i]) + (1.0 - state.beta2) * g * g;
      mom.m[i] = static_cast<T>(m);
      mom.v[i] = static_cast<T>(v);
      const double step = state.lr * (m / bc1) / (std::sqrt(v / bc2) + state.eps);
      value[i] = static_cast<T>(static_cast<double>(value[i]) - step);
      grad[i] = T(0);
    }
  }
}

template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step<float>(std::vector<ad::Tensor<float>>&, AdamState<float>&);
template void adam_step<double>(std::vector<ad::Tensor<double>>&, AdamState<double>&);

}  // namespace pref::opt
