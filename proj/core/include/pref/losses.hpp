#pragma once

#include "pref/config.hpp"
#include "pref/render.hpp"

namespace pref::train {

// Mean squared color error of the rendered batch against the ray targets,
// averaged over every ray and channel. transition < 0 renders the field
// directly at rays.t; otherwise each sample point is advected through
// transition k's motion before the field is read at the next frame's
// time, so the gradient also reaches M, the basis, and w_k.
template <typename T>
ad::Tensor<T> reconstruction_loss(const nets::FieldBundle<T>& bundle, const render::RayBatch& rays,
                                  const std::vector<double>& depths, int num_samples,
                                  int transition = -1);

// Squared norm of (predicted - stored) weights for the given transition,
// predicted from its tau predecessors. kPredictorOnly detaches both the
// history and the target so only the predictor feels this term; kJoint
// lets it also pull the stored weights toward predictability. Throws when
// the transition lacks tau predecessors or does not exist.
template <typename T>
ad::Tensor<T> prediction_loss(const nets::FieldBundle<T>& bundle, int transition,
                              PredGradMode mode);

extern template ad::Tensor<float> reconstruction_loss<float>(const nets::FieldBundle<float>&,
                                                             const render::RayBatch&,
                                                             const std::vector<double>&, int, int);
extern template ad::Tensor<double> reconstruction_loss<double>(const nets::FieldBundle<double>&,
                                                               const render::RayBatch&,
                                                               const std::vector<double>&, int,
                                                               int);
extern template ad::Tensor<float> prediction_loss<float>(const nets::FieldBundle<float>&, int,
                                                         PredGradMode);
extern template ad::Tensor<double> prediction_loss<double>(const nets::FieldBundle<double>&, int,
                                                           PredGradMode);

}  // namespace pref::train
