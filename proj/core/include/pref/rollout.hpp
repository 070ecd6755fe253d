#pragma once

#include "pref/scenes.hpp"
#include "pref/tracking.hpp"

namespace pref::eval {

// Autoregressive weight prediction: the predictor maps the last tau
// weight vectors to the next one and each output joins the history.
// `history` must hold exactly tau vectors of the bundle's weight
// dimension, oldest first; returns `steps` predicted vectors.
std::vector<std::vector<float>> rollout_predict(const nets::FieldBundle<float>& bundle,
                                                const std::vector<std::vector<float>>& history,
                                                int steps);

// Advects seed points one frame per supplied weight vector (stored or
// predicted), returning trajectories rooted at `origin_frame`.
std::vector<Trajectory> track_with_weights(const nets::FieldBundle<float>& bundle,
                                           const std::vector<std::array<double, 3>>& seeds,
                                           int origin_frame,
                                           const std::vector<std::vector<float>>& weight_seq);

// Stored weight values for transitions [first, first+count), the usual
// rollout history source.
std::vector<std::vector<float>> stored_weights(const nets::FieldBundle<float>& bundle, int first,
                                               int count);

// Mean joint error per step when the sequence's keypoints at
// `origin_frame` are advected with `weight_seq`: element i compares the
// positions after i+1 steps against the keypoints of frame
// origin_frame+i+1. Works for stored and predicted weights alike, which
// makes rollout curves directly comparable to tracked ones.
std::vector<double> stepwise_tracking_error(const nets::FieldBundle<float>& bundle,
                                            const scenes::SceneSequence& seq, int origin_frame,
                                            const std::vector<std::vector<float>>& weight_seq);

// CSV block (step,weight_index,value) for predicted weight sequences,
// 6 significant digits.
std::string rollout_csv(const std::vector<std::vector<float>>& weights);

}  // namespace pref::eval
