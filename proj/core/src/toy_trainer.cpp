#include "pref/toy_trainer.hpp"

#include <cmath>

#include "pref/encoding.hpp"
#include "pref/image.hpp"
#include "pref/ops.hpp"

namespace pref::train {

namespace {

constexpr int kEvalPixels = 512;

}  // namespace

ToyTrainer::ToyTrainer(const TrainConfig& config, const scenes::ToySequence2D& toy)
    : config_(config), toy_(toy) {
  config_.validate();
  if (toy.frames.empty()) throw ConfigError("toy sequence has no frames");
  if (toy.frames.size() < static_cast<std::size_t>(config_.interval_length))
    throw ConfigError("interval_length " + std::to_string(config_.interval_length) +
                      " exceeds the toy's " + std::to_string(toy.frames.size()) + " frames");
  width_ = toy.frames[0].width;
  height_ = toy.frames[0].height;
  transition_count_ = config_.interval_length - 1;

  const int weight_dim = config_.embedding_mode == nets::EmbeddingMode::kBasis ? config_.n
                                                                               : config_.m;
  const nets::EncoderSpec enc{config_.freq_position, true};
  nets::MlpSpec motion_spec;
  motion_spec.in_dim = nets::encoded_dim(2, enc) + config_.m;
  motion_spec.width = config_.motion_width;
  motion_spec.hidden_layers = config_.motion_layers;
  motion_spec.skip_layer = config_.motion_skip;
  motion_spec.out_dim = 2;
  nets::MlpSpec predictor_spec;
  predictor_spec.in_dim = config_.tau * weight_dim;
  predictor_spec.width = config_.predictor_width;
  predictor_spec.hidden_layers = config_.predictor_layers;
  predictor_spec.skip_layer = -1;
  predictor_spec.out_dim = weight_dim;

  // Same component stream tags as the 3D bundle so seeds mean the same
  // thing in both trainers.
  Rng root(config_.seed);
  Rng motion_rng = root.fork(2);
  Rng predictor_rng = root.fork(3);
  Rng basis_rng = root.fork(4);
  Rng weight_rng = root.fork(5);
  motion_ = nets::make_mlp<float>(motion_spec, "motion", motion_rng);
  predictor_ = nets::make_mlp<float>(predictor_spec, "predictor", predictor_rng);

  const double sigma = 0.1 / std::sqrt(static_cast<double>(config_.m));
  if (config_.embedding_mode == nets::EmbeddingMode::kBasis) {
    std::vector<float> b(static_cast<std::size_t>(config_.n) * config_.m);
    for (auto& v : b) v = static_cast<float>(sigma * basis_rng.normal());
    basis_ = ad::Tensor<float>::from(std::move(b), {config_.n, config_.m}, true);
    basis_.set_name("basis");
  }
  for (int k = 0; k < transition_count_; ++k) {
    std::vector<float> w(static_cast<std::size_t>(weight_dim));
    for (auto& v : w) v = static_cast<float>(sigma * weight_rng.normal());
    auto t = ad::Tensor<float>::from(std::move(w), {1, weight_dim}, true);
    char name[16];
    std::snprintf(name, sizeof(name), "w.%03d", k);
    t.set_name(name);
    weights_.push_back(std::move(t));
  }

  for (const auto& frame : toy.frames) {
    std::vector<float> data(frame.rgb.begin(), frame.rgb.end());
    frame_tensors_.push_back(
        ad::Tensor<float>::from(std::move(data), {height_, width_, 3}));
  }

  rng_ = Rng(config_.seed).fork(20);
  Rng eval_rng = Rng(config_.seed).fork(22);
  eval_pixels_.resize(kEvalPixels);
  for (auto& px : eval_pixels_) {
    px[0] = static_cast<int>(eval_rng.uniform_index(width_));
    px[1] = static_cast<int>(eval_rng.uniform_index(height_));
  }
}

std::vector<ad::Tensor<float>> ToyTrainer::parameters(bool include_predictor) const {
  std::vector<ad::Tensor<float>> params = motion_.parameters();
  if (config_.embedding_mode == nets::EmbeddingMode::kBasis) params.push_back(basis_);
  for (const auto& w : weights_) params.push_back(w);
  if (include_predictor)
    for (const auto& p : predictor_.parameters()) params.push_back(p);
  return params;
}

ad::Tensor<float> ToyTrainer::embedding(int transition) const {
  if (transition < 0 || transition >= transition_count_)
    throw std::out_of_range("toy transition " + std::to_string(transition) +
                            " outside the interval");
  if (config_.embedding_mode == nets::EmbeddingMode::kBasis)
    return ad::matmul(weights_[transition], basis_);
  return weights_[transition];
}

ad::Tensor<float> ToyTrainer::displacement(const ad::Tensor<float>& coords_px,
                                           const ad::Tensor<float>& omega) const {
  const std::int64_t n = coords_px.dim(0);
  // Pixel centers normalized to [-1, 1]; positions are constants here, so
  // this happens outside the graph.
  std::vector<float> norm(static_cast<std::size_t>(n) * 2);
  const auto& px = coords_px.data();
  for (std::int64_t i = 0; i < n; ++i) {
    norm[2 * i + 0] = static_cast<float>(2.0 * (px[2 * i + 0] + 0.5) / width_ - 1.0);
    norm[2 * i + 1] = static_cast<float>(2.0 * (px[2 * i + 1] + 0.5) / height_ - 1.0);
  }
  auto encoded = nets::positional_encode(
      ad::Tensor<float>::from(std::move(norm), {n, 2}), {config_.freq_position, true});
  auto input = ad::concat_cols<float>({encoded, ad::repeat_rows(omega, n)});
  return motion_.forward(input);
}

ad::Tensor<float> ToyTrainer::photometric_loss(
    int transition, const std::vector<std::array<int, 2>>& pixels) const {
  const std::int64_t n = static_cast<std::int64_t>(pixels.size());
  std::vector<float> coords(static_cast<std::size_t>(n) * 2);
  std::vector<float> target(static_cast<std::size_t>(n) * 3);
  const render::Image& frame = toy_.frames[transition];
  for (std::int64_t i = 0; i < n; ++i) {
    coords[2 * i + 0] = static_cast<float>(pixels[i][0]);
    coords[2 * i + 1] = static_cast<float>(pixels[i][1]);
    const float* px = frame.pixel(pixels[i][0], pixels[i][1]);
    for (int k = 0; k < 3; ++k) target[3 * i + k] = px[k];
  }
  auto coords_t = ad::Tensor<float>::from(std::move(coords), {n, 2});
  auto target_t = ad::Tensor<float>::from(std::move(target), {n, 3});
  auto moved = ad::add(coords_t, displacement(coords_t, embedding(transition)));
  auto sampled = ad::bilinear_sample(frame_tensors_[transition + 1], moved);
  return ad::mean(ad::sqdiff(sampled, target_t));
}

ad::Tensor<float> ToyTrainer::prediction_term(int transition, PredGradMode mode) const {
  const int tau = config_.tau;
  if (transition < tau || transition >= transition_count_)
    throw std::invalid_argument("prediction target " + std::to_string(transition) +
                                " lacks history or is outside the interval");
  const bool predictor_only = mode == PredGradMode::kPredictorOnly;
  std::vector<ad::Tensor<float>> history;
  for (int i = transition - tau; i < transition; ++i)
    history.push_back(predictor_only ? weights_[i].detach() : weights_[i]);
  auto stacked = ad::concat_cols(history);
  auto predicted = predictor_.forward(stacked);
  auto target = predictor_only ? weights_[transition].detach() : weights_[transition];
  return ad::sum(ad::sqdiff(predicted, target));
}

StepReport ToyTrainer::step() {
  StepReport report;
  try {
    report = step_at(iteration_);
  } catch (const ad::NumericError& e) {
    throw NumericalError(std::string(e.what()) + " at iteration " + std::to_string(iteration_),
                         iteration_);
  }
  iteration_ += 1;
  return report;
}

StepReport ToyTrainer::step_at(std::int64_t iteration) {
  const int tau = config_.tau;
  const int pixels_per_transition = std::max(1, config_.rays_per_batch / tau);

  opt::set_learning_rate(adam_, {config_.lr_start, config_.lr_end, config_.decay_span},
                         iteration);
  for (auto& p : parameters(true)) p.zero_grad();

  const int start = static_cast<int>(rng_.uniform_index(transition_count_ - tau + 1));

  double rec_sum = 0.0;
  const float term_scale = 1.0f / static_cast<float>(tau);
  for (int j = 0; j < tau; ++j) {
    std::vector<std::array<int, 2>> pixels(pixels_per_transition);
    for (auto& px : pixels) {
      px[0] = static_cast<int>(rng_.uniform_index(width_));
      px[1] = static_cast<int>(rng_.uniform_index(height_));
    }
    auto loss = photometric_loss(start + j, pixels);
    rec_sum += static_cast<double>(loss.data()[0]);
    ad::backward(ad::scale(loss, term_scale));
  }

  const int target_transition = start + tau;
  const bool pred_active = config_.gamma > 0.0 && target_transition < transition_count_;
  double pred_value = 0.0;
  if (pred_active) {
    auto loss = prediction_term(target_transition, config_.pred_grad_mode);
    pred_value = static_cast<double>(loss.data()[0]);
    ad::backward(ad::scale(loss, static_cast<float>(config_.gamma)));
  }

  StepReport report;
  report.lr = adam_.lr;
  report.loss_rec = rec_sum / tau;
  report.loss_pred = pred_value;
  report.loss_total = report.loss_rec + config_.gamma * report.loss_pred;
  report.pred_active = pred_active;
  if (!std::isfinite(report.loss_total))
    throw NumericalError("non-finite loss at iteration " + std::to_string(iteration), iteration);

  std::vector<ad::Tensor<float>> params = motion_.parameters();
  if (config_.embedding_mode == nets::EmbeddingMode::kBasis) params.push_back(basis_);
  for (int j = 0; j < tau; ++j) params.push_back(weights_[start + j]);
  if (pred_active && config_.pred_grad_mode == PredGradMode::kJoint)
    params.push_back(weights_[target_transition]);
  if (pred_active && !config_.freeze_predictor)
    for (auto& p : predictor_.parameters()) params.push_back(p);
  opt::adam_step(params, adam_);

  return report;
}

void ToyTrainer::run(const MetricsSink& on_metrics, const CheckpointSink& on_checkpoint) {
  double rec_acc = 0.0, pred_acc = 0.0;
  std::int64_t rec_n = 0, pred_n = 0;
  while (iteration_ < config_.iterations) {
    const StepReport report = step();
    rec_acc += report.loss_rec;
    rec_n += 1;
    if (report.pred_active) {
      pred_acc += report.loss_pred;
      pred_n += 1;
    }
    if (iteration_ % config_.log_every == 0) {
      MetricsRow row;
      row.iteration = iteration_;
      row.lr = report.lr;
      row.loss_rec = rec_acc / static_cast<double>(rec_n);
      row.loss_pred = pred_n > 0 ? pred_acc / static_cast<double>(pred_n) : 0.0;
      row.psnr = eval_psnr();
      if (on_metrics) on_metrics(row);
      rec_acc = pred_acc = 0.0;
      rec_n = pred_n = 0;
    }
    if (iteration_ % config_.checkpoint_every == 0 && on_checkpoint)
      on_checkpoint(*this, iteration_);
  }
}

double ToyTrainer::eval_psnr() const {
  ad::NoGradGuard guard;
  double sq_sum = 0.0;
  std::int64_t count = 0;
  for (int k = 0; k < transition_count_; ++k) {
    auto loss = photometric_loss(k, eval_pixels_);
    sq_sum += static_cast<double>(loss.data()[0]) * static_cast<double>(eval_pixels_.size()) * 3;
    count += static_cast<std::int64_t>(eval_pixels_.size()) * 3;
  }
  return render::mse_to_psnr(sq_sum / static_cast<double>(count));
}

double ToyTrainer::eval_pred_loss() const {
  ad::NoGradGuard guard;
  double sum = 0.0;
  int count = 0;
  for (int k = config_.tau; k < transition_count_; ++k) {
    auto term = prediction_term(k, PredGradMode::kPredictorOnly);
    sum += static_cast<double>(term.data()[0]);
    count += 1;
  }
  return count > 0 ? sum / count : 0.0;
}

std::vector<float> ToyTrainer::estimate_motion(int transition) const {
  ad::NoGradGuard guard;
  std::vector<std::array<int, 2>> pixels;
  pixels.reserve(static_cast<std::size_t>(width_) * height_);
  for (int y = 0; y < height_; ++y)
    for (int x = 0; x < width_; ++x) pixels.push_back({x, y});

  const std::int64_t n = static_cast<std::int64_t>(pixels.size());
  std::vector<float> coords(static_cast<std::size_t>(n) * 2);
  for (std::int64_t i = 0; i < n; ++i) {
    coords[2 * i + 0] = static_cast<float>(pixels[i][0]);
    coords[2 * i + 1] = static_cast<float>(pixels[i][1]);
  }
  auto coords_t = ad::Tensor<float>::from(std::move(coords), {n, 2});
  auto d = displacement(coords_t, embedding(transition));
  return d.data();
}

void ToyTrainer::restore(const Checkpoint& ck) {
  auto live = parameters(true);
  apply_checkpoint_params(ck, live);
  validate_checkpoint_moments(ck, live);
  adam_.moments = ck.adam.moments;
  adam_.step_count = ck.adam_step_count;
  iteration_ = ck.iteration;
  rng_ = Rng::deserialize(ck.rng_text);
}

}  // namespace pref::train
