#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "pref/bundle.hpp"

namespace pref::train {

// Bad or inconsistent configuration; the CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// How L_pred routes gradients: kJoint lets the prediction error pull on
// the stored transition weights themselves (they become regularized
// toward predictability), kPredictorOnly treats them as constants and
// trains only the predictor.
enum class PredGradMode { kJoint, kPredictorOnly };

struct TrainConfig {
  double gamma = 0.01;  // weight of the predictability term
  int rays_per_batch = 1024;
  int tau = 3;  // predictor history length; the training window spans tau+1 frames
  int n = 5;    // motion basis rows
  int m = 32;   // motion embedding width

  double lr_start = 5e-4;
  double lr_end = 5e-6;
  std::int64_t decay_span = 50000;
  std::int64_t iterations = 50000;

  int samples_per_ray = 64;
  int interval_length = 25;  // frames trained jointly; transitions = interval_length - 1
  bool stratified = true;

  int field_width = 128;
  int field_layers = 6;
  int field_skip = 3;
  int motion_width = 128;
  int motion_layers = 6;
  int motion_skip = 3;
  int predictor_width = 128;
  int predictor_layers = 5;

  int freq_position = 10;
  int freq_time = 6;

  std::uint64_t seed = 0;
  bool deterministic = true;
  PredGradMode pred_grad_mode = PredGradMode::kJoint;
  bool freeze_predictor = false;
  nets::EmbeddingMode embedding_mode = nets::EmbeddingMode::kBasis;

  std::int64_t log_every = 100;
  std::int64_t checkpoint_every = 5000;

  // Throws ConfigError on any violated invariant.
  void validate() const;
};

// Parse/serialize as flat JSON. Unknown keys and type mismatches are
// rejected (silent hyperparameter typos are the failure mode to avoid);
// missing keys keep their defaults. The emitted text parses back to an
// equal config.
TrainConfig config_from_json_text(const std::string& text);
TrainConfig config_from_json_file(const std::string& path);
std::string config_to_json_text(const TrainConfig& config);

const char* pred_grad_mode_name(PredGradMode mode);
const char* embedding_mode_name(nets::EmbeddingMode mode);

// Network/bundle geometry implied by the config. Scene bounds are not
// known here; the caller fills them in from the dataset.
nets::BundleSpec bundle_spec_from(const TrainConfig& config);

}  // namespace pref::train
