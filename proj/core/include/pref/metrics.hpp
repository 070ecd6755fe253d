#pragma once

#include "pref/scenes.hpp"
#include "pref/toy2d.hpp"
#include "pref/tracking.hpp"

namespace pref::eval {

// Mean MPJPE over every start frame u and horizon v = u+1 .. u+K:
// the double average of per-frame mean joint distances between tracked
// and ground-truth positions. Starts whose window would run past the
// last ground-truth frame are dropped from the outer average entirely.
// `per_start` holds one trajectory set per start frame (origin_frame
// identifies u); `gt` is indexed [frame][joint].
double mmpjpe(const std::vector<std::vector<Trajectory>>& per_start,
              const std::vector<std::vector<std::array<double, 3>>>& gt, int k);

// Tracks the ground-truth keypoints from every eligible start frame of
// the sequence through the trained motion and reports mmpjpe.
double scene_mmpjpe(const nets::FieldBundle<float>& bundle, const scenes::SceneSequence& seq,
                    int k);

// Mean absolute displacement error against the toy's stored per-pixel
// motion, averaged over transitions, pixels, and both axes. `estimated`
// is indexed [transition][2*(y*width+x)+axis], matching the toy layout.
double toy_abs_err(const std::vector<std::vector<float>>& estimated,
                   const scenes::ToySequence2D& toy);

}  // namespace pref::eval
