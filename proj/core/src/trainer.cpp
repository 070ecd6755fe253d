#include "pref/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "pref/image.hpp"
#include "pref/losses.hpp"
#include "pref/ops.hpp"

namespace pref::train {

namespace {

constexpr int kEvalRaysPerFrame = 256;

// Fixed formatting so two deterministic runs produce byte-identical
// traces. %.9g round-trips the float-valued losses.
std::string format_row(const MetricsRow& row) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%lld,%.9g,%.9g,%.9g,%.9g",
                static_cast<long long>(row.iteration), row.lr, row.loss_rec, row.loss_pred,
                row.psnr);
  return buf;
}

}  // namespace

std::string metrics_csv_header() { return "iteration,lr,loss_rec,loss_pred,psnr"; }

std::string metrics_csv_row(const MetricsRow& row) { return format_row(row); }

Trainer::Trainer(const TrainConfig& config, const scenes::SceneSequence& seq)
    : config_(config), seq_(seq) {
  config_.validate();

  if (seq.cameras.empty()) throw ConfigError("dataset has no cameras");
  if (seq.frames.size() != seq.cameras.size())
    throw ConfigError("dataset frame table does not match its camera count");
  for (std::size_t c = 0; c < seq.cameras.size(); ++c) {
    if (seq.frames[c].size() < static_cast<std::size_t>(config_.interval_length))
      throw ConfigError("interval_length " + std::to_string(config_.interval_length) +
                        " exceeds the dataset's " + std::to_string(seq.frames[c].size()) +
                        " frames");
    for (const auto& img : seq.frames[c])
      if (img.width != seq.cameras[c].width || img.height != seq.cameras[c].height)
        throw ConfigError("frame size does not match camera " + std::to_string(c));
  }

  auto spec = bundle_spec_from(config_);
  spec.bounds_min = seq.spec.bounds_min;
  spec.bounds_max = seq.spec.bounds_max;
  spec.validate();
  bundle_ = nets::init_bundle<float>(spec, config_.seed);

  rng_ = Rng(config_.seed).fork(20);

  // With enough cameras, the last one is held out of training and feeds
  // the PSNR trace; tiny rigs train on everything and log camera 0.
  const int cam_count = static_cast<int>(seq.cameras.size());
  if (cam_count >= 4) held_out_camera_ = cam_count - 1;
  for (int c = 0; c < cam_count; ++c)
    if (c != held_out_camera_) train_cameras_.push_back(c);

  const int last = config_.interval_length - 1;
  eval_frames_ = {0, last / 2, last};
  eval_frames_.erase(std::unique(eval_frames_.begin(), eval_frames_.end()), eval_frames_.end());
  Rng eval_rng = Rng(config_.seed).fork(22);
  const render::Camera& eval_cam = seq.cameras[held_out_camera_ >= 0 ? held_out_camera_ : 0];
  for (std::size_t i = 0; i < eval_frames_.size(); ++i) {
    std::vector<std::array<int, 2>> pixels(kEvalRaysPerFrame);
    for (auto& px : pixels) {
      px[0] = static_cast<int>(eval_rng.uniform_index(eval_cam.width));
      px[1] = static_cast<int>(eval_rng.uniform_index(eval_cam.height));
    }
    eval_pixels_.push_back(std::move(pixels));
  }
}

double Trainer::frame_time(int frame) const {
  return static_cast<double>(frame) * bundle_.spec.frame_step();
}

std::string Trainer::rng_text() const { return rng_.serialize(); }

StepReport Trainer::step() {
  StepReport report;
  try {
    report = step_at(iteration_);
  } catch (const ad::NumericError& e) {
    // Strict-mode NaN inside a kernel; rethrow with the iteration so the
    // CLI can dump the aborted state.
    throw NumericalError(std::string(e.what()) + " at iteration " + std::to_string(iteration_),
                         iteration_);
  }
  iteration_ += 1;
  return report;
}

StepReport Trainer::step_at(std::int64_t iteration) {
  const int tau = config_.tau;
  const int window = tau + 1;
  const int rays_per_frame = config_.rays_per_batch / window;
  const int samples = config_.samples_per_ray;

  opt::set_learning_rate(adam_, {config_.lr_start, config_.lr_end, config_.decay_span},
                         iteration);
  for (auto& p : bundle_.parameters(true)) p.zero_grad();

  // Draw order is part of the resume contract: window start, camera,
  // then per frame the pixel coordinates and depth jitter.
  const int start = static_cast<int>(rng_.uniform_index(config_.interval_length - tau));
  const int cam_index = train_cameras_[rng_.uniform_index(train_cameras_.size())];
  const render::Camera& cam = seq_.cameras[cam_index];

  std::vector<render::RayBatch> rays(window);
  std::vector<std::vector<double>> depths(window);
  for (int j = 0; j < window; ++j) {
    const int frame = start + j;
    std::vector<std::array<int, 2>> pixels(rays_per_frame);
    for (auto& px : pixels) {
      px[0] = static_cast<int>(rng_.uniform_index(cam.width));
      px[1] = static_cast<int>(rng_.uniform_index(cam.height));
    }
    rays[j] = render::generate_rays(cam, pixels, frame_time(frame), seq_.spec.bounds_min,
                                    seq_.spec.bounds_max);
    const render::Image& gt = seq_.frames[cam_index][frame];
    rays[j].targets.resize(3 * pixels.size());
    for (std::size_t r = 0; r < pixels.size(); ++r) {
      const float* px = gt.pixel(pixels[r][0], pixels[r][1]);
      for (int k = 0; k < 3; ++k) rays[j].targets[3 * r + k] = px[k];
    }
    depths[j] = render::sample_points(rays[j], samples, config_.stratified, rng_);
  }

  // Each term is backpropagated as soon as its value is read so only one
  // tape is alive at a time; the accumulated gradient equals that of
  // mean(direct terms + motion terms) + gamma * prediction term.
  const int term_count = 2 * tau + 1;
  const float term_scale = 1.0f / static_cast<float>(term_count);
  double rec_sum = 0.0;
  for (int j = 0; j < window; ++j) {
    auto loss = reconstruction_loss(bundle_, rays[j], depths[j], samples, -1);
    rec_sum += static_cast<double>(loss.data()[0]);
    ad::backward(ad::scale(loss, term_scale));
  }
  for (int j = 0; j < tau; ++j) {
    auto loss = reconstruction_loss(bundle_, rays[j], depths[j], samples, start + j);
    rec_sum += static_cast<double>(loss.data()[0]);
    ad::backward(ad::scale(loss, term_scale));
  }

  const int target_transition = start + tau;
  const bool pred_active =
      config_.gamma > 0.0 && target_transition < bundle_.spec.transition_count;
  double pred_value = 0.0;
  if (pred_active) {
    auto loss = prediction_loss(bundle_, target_transition, config_.pred_grad_mode);
    pred_value = static_cast<double>(loss.data()[0]);
    ad::backward(ad::scale(loss, static_cast<float>(config_.gamma)));
  }

  StepReport report;
  report.lr = adam_.lr;
  report.loss_rec = rec_sum / term_count;
  report.loss_pred = pred_value;
  report.loss_total = report.loss_rec + config_.gamma * report.loss_pred;
  report.pred_active = pred_active;
  if (!std::isfinite(report.loss_total))
    throw NumericalError("non-finite loss at iteration " + std::to_string(iteration), iteration);

  std::vector<ad::Tensor<float>> params = bundle_.field.parameters();
  for (auto& p : bundle_.motion.parameters()) params.push_back(p);
  if (bundle_.spec.embedding_mode == nets::EmbeddingMode::kBasis) params.push_back(bundle_.basis);
  for (int j = 0; j < tau; ++j) params.push_back(bundle_.weights[start + j]);
  if (pred_active && config_.pred_grad_mode == PredGradMode::kJoint)
    params.push_back(bundle_.weights[target_transition]);
  if (pred_active && !config_.freeze_predictor)
    for (auto& p : bundle_.predictor.parameters()) params.push_back(p);
  opt::adam_step(params, adam_);

  return report;
}

double Trainer::eval_psnr() const {
  ad::NoGradGuard guard;
  const int cam_index = held_out_camera_ >= 0 ? held_out_camera_ : 0;
  const render::Camera& cam = seq_.cameras[cam_index];
  Rng scratch(0);  // midpoint sampling draws nothing
  double sq_sum = 0.0;
  std::int64_t count = 0;
  for (std::size_t i = 0; i < eval_frames_.size(); ++i) {
    const int frame = eval_frames_[i];
    auto rays = render::generate_rays(cam, eval_pixels_[i], frame_time(frame),
                                      seq_.spec.bounds_min, seq_.spec.bounds_max);
    auto depths = render::sample_points(rays, config_.samples_per_ray, false, scratch);
    auto out = render::render_rays(bundle_, rays, depths, config_.samples_per_ray);
    const render::Image& gt = seq_.frames[cam_index][frame];
    const auto& data = out.data();
    for (std::size_t r = 0; r < eval_pixels_[i].size(); ++r) {
      const float* px = gt.pixel(eval_pixels_[i][r][0], eval_pixels_[i][r][1]);
      for (int k = 0; k < 3; ++k) {
        const double d = static_cast<double>(data[4 * r + k]) - static_cast<double>(px[k]);
        sq_sum += d * d;
        count += 1;
      }
    }
  }
  return render::mse_to_psnr(sq_sum / static_cast<double>(count));
}

void Trainer::run(const MetricsSink& on_metrics, const CheckpointSink& on_checkpoint) {
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

void Trainer::restore(const Checkpoint& ck) {
  auto live = bundle_.parameters(true);
  apply_checkpoint_params(ck, live);
  validate_checkpoint_moments(ck, live);
  adam_.moments = ck.adam.moments;
  adam_.step_count = ck.adam_step_count;
  iteration_ = ck.iteration;
  rng_ = Rng::deserialize(ck.rng_text);
}

void Trainer::load_parameters(const Checkpoint& ck) {
  auto live = bundle_.parameters(true);
  apply_checkpoint_params(ck, live);
}

}  // namespace pref::train
