#include "pref/rollout.hpp"

#include <cmath>
#include <cstdio>
#include <deque>
#include <stdexcept>

#include "pref/ops.hpp"

namespace pref::eval {

namespace {

ad::Tensor<float> weight_tensor(const nets::FieldBundle<float>& bundle,
                                const std::vector<float>& values) {
  const std::int64_t dim = bundle.spec.weight_dim();
  if (values.size() != static_cast<std::size_t>(dim))
    throw std::invalid_argument("weight vector has size " + std::to_string(values.size()) +
                                ", expected " + std::to_string(dim));
  return ad::Tensor<float>::from(values, {1, dim});
}

}  // namespace

std::vector<std::vector<float>> rollout_predict(const nets::FieldBundle<float>& bundle,
                                                const std::vector<std::vector<float>>& history,
                                                int steps) {
  if (steps < 1) throw std::invalid_argument("rollout_predict: steps must be >= 1");
  if (history.size() != static_cast<std::size_t>(bundle.spec.tau))
    throw std::invalid_argument("rollout_predict: history must hold exactly tau vectors");

  ad::NoGradGuard guard;
  std::deque<ad::Tensor<float>> window;
  for (const auto& w : history) window.push_back(weight_tensor(bundle, w));

  std::vector<std::vector<float>> predicted;
  for (int s = 0; s < steps; ++s) {
    std::vector<ad::Tensor<float>> w_prev(window.begin(), window.end());
    auto next = bundle.predict_weights(w_prev);
    predicted.push_back(next.data());
    window.pop_front();
    window.push_back(std::move(next));
  }
  return predicted;
}

std::vector<Trajectory> track_with_weights(const nets::FieldBundle<float>& bundle,
                                           const std::vector<std::array<double, 3>>& seeds,
                                           int origin_frame,
                                           const std::vector<std::vector<float>>& weight_seq) {
  std::vector<Trajectory> trajectories(seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    trajectories[i].point_id = static_cast<int>(i);
    trajectories[i].origin_frame = origin_frame;
    trajectories[i].positions.push_back(seeds[i]);
  }
  if (seeds.empty()) return trajectories;

  ad::NoGradGuard guard;
  const std::int64_t n = static_cast<std::int64_t>(seeds.size());
  std::vector<float> current(static_cast<std::size_t>(n) * 3);
  for (std::int64_t i = 0; i < n; ++i)
    for (int k = 0; k < 3; ++k) current[3 * i + k] = static_cast<float>(seeds[i][k]);

  for (const auto& w : weight_seq) {
    auto points = ad::Tensor<float>::from(current, {n, 3});
    auto omega = bundle.embed_weights(weight_tensor(bundle, w));
    auto moved = ad::add(points, bundle.motion_query(points, omega));
    current = moved.data();
    for (std::int64_t i = 0; i < n; ++i)
      trajectories[i].positions.push_back({static_cast<double>(current[3 * i + 0]),
                                           static_cast<double>(current[3 * i + 1]),
                                           static_cast<double>(current[3 * i + 2])});
  }
  return trajectories;
}

std::vector<std::vector<float>> stored_weights(const nets::FieldBundle<float>& bundle, int first,
                                               int count) {
  if (first < 0 || count < 0 || first + count > bundle.spec.transition_count)
    throw std::invalid_argument("stored_weights: transitions " + std::to_string(first) + ".." +
                                std::to_string(first + count - 1) + " outside the interval");
  std::vector<std::vector<float>> out;
  for (int k = first; k < first + count; ++k) out.push_back(bundle.weights[k].data());
  return out;
}

std::vector<double> stepwise_tracking_error(const nets::FieldBundle<float>& bundle,
                                            const scenes::SceneSequence& seq, int origin_frame,
                                            const std::vector<std::vector<float>>& weight_seq) {
  const int last_gt = static_cast<int>(seq.keypoints.size()) - 1;
  const int steps = static_cast<int>(weight_seq.size());
  if (origin_frame < 0 || origin_frame + steps > last_gt)
    throw std::invalid_argument("stepwise_tracking_error: no ground truth at frame " +
                                std::to_string(origin_frame + steps));

  const auto trajectories =
      track_with_weights(bundle, seq.keypoints[origin_frame], origin_frame, weight_seq);
  std::vector<double> errors(steps, 0.0);
  for (int s = 1; s <= steps; ++s) {
    const auto& gt = seq.keypoints[origin_frame + s];
    if (gt.size() != trajectories.size())
      throw std::invalid_argument("stepwise_tracking_error: joint count mismatch");
    double err = 0.0;
    for (std::size_t j = 0; j < trajectories.size(); ++j) {
      const auto& p = trajectories[j].positions[s];
      const double dx = p[0] - gt[j][0], dy = p[1] - gt[j][1], dz = p[2] - gt[j][2];
      err += std::sqrt(dx * dx + dy * dy + dz * dz);
    }
    errors[s - 1] = err / static_cast<double>(trajectories.size());
  }
  return errors;
}

std::string rollout_csv(const std::vector<std::vector<float>>& weights) {
  std::string out = "step,weight_index,value\n";
  char line[64];
  for (std::size_t s = 0; s < weights.size(); ++s)
    for (std::size_t i = 0; i < weights[s].size(); ++i) {
      std::snprintf(line, sizeof(line), "%zu,%zu,%.6g\n", s + 1, i,
                    static_cast<double>(weights[s][i]));
      out += line;
    }
  return out;
}

}  // namespace pref::eval
