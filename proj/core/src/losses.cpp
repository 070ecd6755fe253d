#include "pref/losses.hpp"

#include <stdexcept>

#include "pref/ops.hpp"

namespace pref::train {

template <typename T>
ad::Tensor<T> reconstruction_loss(const nets::FieldBundle<T>& bundle, const render::RayBatch& rays,
                                  const std::vector<double>& depths, int num_samples,
                                  int transition) {
  const std::int64_t n = rays.size();
  if (rays.targets.size() != static_cast<std::size_t>(3 * n))
    throw std::invalid_argument("reconstruction_loss: rays carry no target colors");

  ad::Tensor<T> rendered = transition < 0
      ? render::render_rays(bundle, rays, depths, num_samples)
      : render::render_rays_with_motion(bundle, rays, depths, num_samples, transition);
  ad::Tensor<T> rgb = ad::slice_cols(rendered, 0, 3);

  std::vector<T> target(rays.targets.size());
  for (std::size_t i = 0; i < target.size(); ++i) target[i] = static_cast<T>(rays.targets[i]);
  auto target_t = ad::Tensor<T>::from(std::move(target), {n, 3});
  return ad::mean(ad::sqdiff(rgb, target_t));
}

template <typename T>
ad::Tensor<T> prediction_loss(const nets::FieldBundle<T>& bundle, int transition,
                              PredGradMode mode) {
  const int tau = bundle.spec.tau;
  if (transition < tau)
    throw std::invalid_argument("prediction_loss: transition " + std::to_string(transition) +
                                " has fewer than tau predecessors");
  if (transition >= bundle.spec.transition_count)
    throw std::invalid_argument("prediction_loss: transition " + std::to_string(transition) +
                                " is outside the interval");

  const bool predictor_only = mode == PredGradMode::kPredictorOnly;
  std::vector<ad::Tensor<T>> history;
  history.reserve(tau);
  for (int i = transition - tau; i < transition; ++i)
    history.push_back(predictor_only ? bundle.weights[i].detach() : bundle.weights[i]);

  ad::Tensor<T> predicted = bundle.predict_weights(history);
  ad::Tensor<T> target =
      predictor_only ? bundle.weights[transition].detach() : bundle.weights[transition];
  return ad::sum(ad::sqdiff(predicted, target));
}

template ad::Tensor<float> reconstruction_loss<float>(const nets::FieldBundle<float>&,
                                                      const render::RayBatch&,
                                                      const std::vector<double>&, int, int);
template ad::Tensor<double> reconstruction_loss<double>(const nets::FieldBundle<double>&,
                                                        const render::RayBatch&,
                                                        const std::vector<double>&, int, int);
template ad::Tensor<float> prediction_loss<float>(const nets::FieldBundle<float>&, int,
                                                  PredGradMode);
template ad::Tensor<double> prediction_loss<double>(const nets::FieldBundle<double>&, int,
                                                    PredGradMode);

}  // namespace pref::train
