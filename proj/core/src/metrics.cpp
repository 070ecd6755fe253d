#include "pref/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace pref::eval {

namespace {

double joint_distance(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

}  // namespace

double mmpjpe(const std::vector<std::vector<Trajectory>>& per_start,
              const std::vector<std::vector<std::array<double, 3>>>& gt, int k) {
  if (k < 1) throw std::invalid_argument("mmpjpe: K must be >= 1");
  if (gt.empty()) throw std::invalid_argument("mmpjpe: no ground-truth frames");
  const int last_frame = static_cast<int>(gt.size()) - 1;

  double total = 0.0;
  int starts = 0;
  for (const auto& set : per_start) {
    if (set.empty()) throw std::invalid_argument("mmpjpe: empty trajectory set");
    const int u = set[0].origin_frame;
    if (u + k > last_frame) continue;  // dropped, not truncated

    double inner = 0.0;
    for (int v = u + 1; v <= u + k; ++v) {
      const auto& joints_gt = gt[v];
      if (joints_gt.size() != set.size())
        throw std::invalid_argument("mmpjpe: joint count mismatch at frame " + std::to_string(v));
      double frame_err = 0.0;
      for (std::size_t j = 0; j < set.size(); ++j) {
        if (set[j].origin_frame != u)
          throw std::invalid_argument("mmpjpe: trajectory set mixes start frames");
        if (set[j].positions.size() <= static_cast<std::size_t>(v - u))
          throw std::invalid_argument("mmpjpe: trajectory from frame " + std::to_string(u) +
                                      " does not reach frame " + std::to_string(v));
        frame_err += joint_distance(set[j].positions[v - u], joints_gt[j]);
      }
      inner += frame_err / static_cast<double>(set.size());
    }
    total += inner / static_cast<double>(k);
    starts += 1;
  }
  if (starts == 0) throw std::invalid_argument("mmpjpe: no start frame fits a full window");
  return total / static_cast<double>(starts);
}

double scene_mmpjpe(const nets::FieldBundle<float>& bundle, const scenes::SceneSequence& seq,
                    int k) {
  if (seq.keypoints.empty()) throw std::invalid_argument("scene_mmpjpe: sequence has no keypoints");
  const int last_gt = static_cast<int>(seq.keypoints.size()) - 1;
  const int last_tracked = std::min(last_gt, bundle.spec.transition_count);

  std::vector<std::vector<Trajectory>> per_start;
  for (int u = 0; u + k <= last_tracked; ++u)
    per_start.push_back(track_points(bundle, seq.keypoints[u], u, u + k));
  return mmpjpe(per_start, seq.keypoints, k);
}

double toy_abs_err(const std::vector<std::vector<float>>& estimated,
                   const scenes::ToySequence2D& toy) {
  if (estimated.size() != toy.motion.size())
    throw std::invalid_argument("toy_abs_err: expected " + std::to_string(toy.motion.size()) +
                                " transitions, got " + std::to_string(estimated.size()));
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < estimated.size(); ++t) {
    if (estimated[t].size() != toy.motion[t].size())
      throw std::invalid_argument("toy_abs_err: resolution mismatch at transition " +
                                  std::to_string(t));
    for (std::size_t i = 0; i < estimated[t].size(); ++i)
      sum += std::fabs(static_cast<double>(estimated[t][i]) -
                       static_cast<double>(toy.motion[t][i]));
    count += estimated[t].size();
  }
  if (count == 0) throw std::invalid_argument("toy_abs_err: empty motion fields");
  return sum / static_cast<double>(count);
}

}  // namespace pref::eval
