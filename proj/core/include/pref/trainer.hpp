#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pref/adam.hpp"
#include "pref/checkpoint.hpp"
#include "pref/config.hpp"
#include "pref/scenes.hpp"

namespace pref::train {

// Non-finite loss; the CLI maps this to exit code 3 after dumping a
// checkpoint of the aborted state.
struct NumericalError : std::runtime_error {
  std::int64_t iteration;
  NumericalError(const std::string& what, std::int64_t it)
      : std::runtime_error(what), iteration(it) {}
};

struct StepReport {
  double lr = 0.0;
  double loss_rec = 0.0;
  double loss_pred = 0.0;  // raw term, before the gamma weighting
  double loss_total = 0.0;
  bool pred_active = false;
};

struct MetricsRow {
  std::int64_t iteration = 0;
  double lr = 0.0;
  double loss_rec = 0.0;   // mean over the steps since the previous row
  double loss_pred = 0.0;  // mean over the pred-active steps, 0 if none
  double psnr = 0.0;       // held-out rays at this iteration
};

std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsRow& row);

using MetricsSink = std::function<void(const MetricsRow&)>;

// Owns the bundle, optimizer, and sampling stream for one training run
// over the first interval_length frames of a sequence. The sequence must
// outlive the trainer. One step samples a window of tau+1 consecutive
// frames and one camera, reconstructs every window frame directly and
// through the motion of its outgoing transition, and regularizes the
// transition after the window toward its predicted weights.
class Trainer {
 public:
  Trainer(const TrainConfig& config, const scenes::SceneSequence& seq);

  StepReport step();

  using CheckpointSink = std::function<void(const Trainer&, std::int64_t iteration)>;
  // Runs until config.iterations, emitting a metrics row every log_every
  // steps and a checkpoint signal every checkpoint_every steps; the
  // caller writes its own final checkpoint. Either sink may be empty.
  void run(const MetricsSink& on_metrics, const CheckpointSink& on_checkpoint);

  // PSNR over a fixed set of rays from the held-out camera (or camera 0
  // when the rig is too small to spare one), at three fixed frames.
  double eval_psnr() const;

  const TrainConfig& config() const { return config_; }
  const nets::FieldBundle<float>& bundle() const { return bundle_; }
  nets::FieldBundle<float>& bundle() { return bundle_; }
  std::vector<ad::Tensor<float>> parameters(bool include_predictor = true) const {
    return bundle_.parameters(include_predictor);
  }
  const opt::AdamState<float>& adam() const { return adam_; }
  std::int64_t iteration() const { return iteration_; }
  std::string rng_text() const;
  int held_out_camera() const { return held_out_camera_; }

  // Full resume: parameters, optimizer moments, iteration, and sampling
  // stream, so continuing reproduces an uninterrupted run bit-exactly.
  void restore(const Checkpoint& ck);
  // Warm start for transfer runs: parameters only, everything else fresh.
  void load_parameters(const Checkpoint& ck);

  double frame_time(int frame) const;

 private:
  StepReport step_at(std::int64_t iteration);

  TrainConfig config_;
  const scenes::SceneSequence& seq_;
  nets::FieldBundle<float> bundle_;
  opt::AdamState<float> adam_;
  Rng rng_;  // drives window, camera, pixel, and depth-jitter draws
  std::int64_t iteration_ = 0;
  std::vector<int> train_cameras_;
  int held_out_camera_ = -1;
  // Fixed evaluation rays, chosen once from the seed so logging cadence
  // cannot perturb training or its resumability.
  std::vector<int> eval_frames_;
  std::vector<std::vector<std::array<int, 2>>> eval_pixels_;
};

}  // namespace pref::train
