#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "pref/checkpoint.hpp"
#include "pref/mlp.hpp"
#include "pref/toy2d.hpp"
#include "pref/trainer.hpp"

namespace pref::train {

// 2D counterpart of the full pipeline: the frames are given, so only the
// motion network, its embeddings, and the predictor are learned. Each
// transition t is supervised photometrically, frame_t(p) against
// frame_{t+1} resampled at p plus the predicted displacement.
class ToyTrainer {
 public:
  // Reuses TrainConfig; field_* and samples_per_ray are ignored,
  // rays_per_batch counts sampled pixels per step, and interval_length
  // must not exceed the toy's frame count.
  ToyTrainer(const TrainConfig& config, const scenes::ToySequence2D& toy);

  using CheckpointSink = std::function<void(const ToyTrainer&, std::int64_t)>;

  StepReport step();
  void run(const MetricsSink& on_metrics, const CheckpointSink& on_checkpoint = nullptr);

  // Displacements at every pixel center for one transition, [H*W*2]
  // interleaved (dx, dy); comparable directly against the toy's stored
  // ground-truth motion.
  std::vector<float> estimate_motion(int transition) const;

  // Mean prediction loss over every transition with a full history,
  // evaluated without touching training state; the convergence metric
  // for comparing embedding schemes.
  double eval_pred_loss() const;

  // Photometric PSNR of all transitions on a fixed pixel subset.
  double eval_psnr() const;

  const TrainConfig& config() const { return config_; }
  std::int64_t iteration() const { return iteration_; }
  std::string rng_text() const { return rng_.serialize(); }
  const opt::AdamState<float>& adam() const { return adam_; }
  std::vector<ad::Tensor<float>> parameters(bool include_predictor = true) const;
  int transition_count() const { return transition_count_; }

  void restore(const Checkpoint& ck);

 private:
  ad::Tensor<float> embedding(int transition) const;
  ad::Tensor<float> displacement(const ad::Tensor<float>& coords_px,
                                 const ad::Tensor<float>& omega) const;
  ad::Tensor<float> photometric_loss(int transition,
                                     const std::vector<std::array<int, 2>>& pixels) const;
  ad::Tensor<float> prediction_term(int transition, PredGradMode mode) const;
  StepReport step_at(std::int64_t iteration);

  TrainConfig config_;
  const scenes::ToySequence2D& toy_;
  int width_ = 0, height_ = 0;
  int transition_count_ = 0;
  nets::Mlp<float> motion_;
  nets::Mlp<float> predictor_;
  ad::Tensor<float> basis_;
  std::vector<ad::Tensor<float>> weights_;
  std::vector<ad::Tensor<float>> frame_tensors_;  // constants, [H,W,3]
  opt::AdamState<float> adam_;
  Rng rng_;
  std::int64_t iteration_ = 0;
  std::vector<std::array<int, 2>> eval_pixels_;
};

}  // namespace pref::train
