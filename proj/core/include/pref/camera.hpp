#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace pref::render {

// Pinhole camera, OpenCV-style axes (x right, y down, z forward), with a
// row-major camera-to-world rotation. Rays go through pixel centers, so
// pixel (u,v) maps to image-plane point (u+0.5, v+0.5).
struct Camera {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;
  std::array<double, 9> rotation{1, 0, 0, 0, 1, 0, 0, 0, 1};
  std::array<double, 3> position{0, 0, 0};

  void validate() const;
  std::array<double, 3> forward_axis() const;
};

// Camera at `pos` looking at `target` with the given world up (+z for our
// scenes); throws if the view direction is parallel to up.
Camera make_look_at(const std::array<double, 3>& pos, const std::array<double, 3>& target,
                    const std::array<double, 3>& up, double focal, int width, int height);

// Continuous pixel-index coordinates of a world point (projecting the
// center of pixel (u,v) yields exactly (u,v)). Returns false for points
// at or behind the camera plane.
bool project_point(const Camera& cam, const std::array<double, 3>& world, double& u, double& v);

struct RayBatch {
  std::vector<double> origins;     // 3 per ray
  std::vector<double> directions;  // 3 per ray, unit length
  std::vector<double> near_vals;
  std::vector<double> far_vals;
  double t = 0.0;                  // normalized frame time
  std::vector<double> targets;     // 3 per ray when supervised, else empty

  std::int64_t size() const { return static_cast<std::int64_t>(near_vals.size()); }
  void validate() const;  // unit directions within 1e-6, near < far
};

// Pinhole back-projection through the listed pixel centers; near/far come
// from the bounding sphere of the scene box so every ray gets a valid
// nonempty [near, far] interval.
RayBatch generate_rays(const Camera& cam, const std::vector<std::array<int, 2>>& pixels, double t,
                       const std::array<double, 3>& bounds_min,
                       const std::array<double, 3>& bounds_max);

}  // namespace pref::render
