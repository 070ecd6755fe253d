#include "pref/tracking.hpp"

#include <cstdio>
#include <stdexcept>

#include "pref/ops.hpp"

namespace pref::eval {

std::vector<Trajectory> track_points(const nets::FieldBundle<float>& bundle,
                                     const std::vector<std::array<double, 3>>& seeds, int from,
                                     int to) {
  if (from < 0 || to < from || to > bundle.spec.transition_count)
    throw std::invalid_argument("track_points: frames " + std::to_string(from) + ".." +
                                std::to_string(to) + " outside the trained interval");

  std::vector<Trajectory> trajectories(seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    trajectories[i].point_id = static_cast<int>(i);
    trajectories[i].origin_frame = from;
    trajectories[i].positions.push_back(seeds[i]);
  }
  if (seeds.empty() || to == from) return trajectories;

  ad::NoGradGuard guard;
  const std::int64_t n = static_cast<std::int64_t>(seeds.size());
  std::vector<float> current(static_cast<std::size_t>(n) * 3);
  for (std::int64_t i = 0; i < n; ++i)
    for (int k = 0; k < 3; ++k) current[3 * i + k] = static_cast<float>(seeds[i][k]);

  for (int frame = from; frame < to; ++frame) {
    auto points = ad::Tensor<float>::from(current, {n, 3});
    auto moved = ad::add(points, bundle.motion_query(points, bundle.transition_embedding(frame)));
    current = moved.data();
    for (std::int64_t i = 0; i < n; ++i)
      trajectories[i].positions.push_back({static_cast<double>(current[3 * i + 0]),
                                           static_cast<double>(current[3 * i + 1]),
                                           static_cast<double>(current[3 * i + 2])});
  }
  return trajectories;
}

std::string trajectory_csv(const std::vector<Trajectory>& trajectories) {
  std::string out = "frame,point_id,x,y,z\n";
  char line[128];
  for (const auto& traj : trajectories) {
    for (std::size_t i = 0; i < traj.positions.size(); ++i) {
      const auto& p = traj.positions[i];
      std::snprintf(line, sizeof(line), "%d,%d,%.6g,%.6g,%.6g\n",
                    traj.origin_frame + static_cast<int>(i), traj.point_id, p[0], p[1], p[2]);
      out += line;
    }
  }
  return out;
}

}  // namespace pref::eval
