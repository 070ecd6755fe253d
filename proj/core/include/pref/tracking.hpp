#pragma once

#include <array>
#include <string>
#include <vector>

#include "pref/bundle.hpp"

namespace pref::eval {

struct Trajectory {
  int point_id = 0;
  int origin_frame = 0;
  // positions[i] is the point at frame origin_frame + i; positions[0] is
  // the seed exactly.
  std::vector<std::array<double, 3>> positions;
};

// Forward composition of adjacent-frame displacements under the trained
// transition weights: p_{t+1} = p_t + M(p_t, omega_t). Seeds are given at
// frame `from`; point ids follow seed order.
std::vector<Trajectory> track_points(const nets::FieldBundle<float>& bundle,
                                     const std::vector<std::array<double, 3>>& seeds, int from,
                                     int to);

// CSV block (frame,point_id,x,y,z), 6 significant digits.
std::string trajectory_csv(const std::vector<Trajectory>& trajectories);

}  // namespace pref::eval
