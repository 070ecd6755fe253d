#include "pref/camera.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pref::render {

namespace {

std::array<double, 3> cross(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double dot(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

std::array<double, 3> normalized(const std::array<double, 3>& v) {
  const double n = std::sqrt(dot(v, v));
  if (n < 1e-12) throw std::invalid_argument("camera: cannot normalize near-zero vector");
  return {v[0] / n, v[1] / n, v[2] / n};
}

}  // namespace

void Camera::validate() const {
  if (fx <= 0 || fy <= 0) throw std::invalid_argument("camera: focal lengths must be positive");
  if (width < 1 || height < 1) throw std::invalid_argument("camera: empty image plane");
  const auto& r = rotation;
  // Rows of R^T R against identity, and det(R) against +1.
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double acc = 0;
      for (int k = 0; k < 3; ++k) acc += r[k * 3 + i] * r[k * 3 + j];
      if (std::fabs(acc - (i == j ? 1.0 : 0.0)) > 1e-5)
        throw std::invalid_argument("camera: rotation is not orthonormal");
    }
  const double det = r[0] * (r[4] * r[8] - r[5] * r[7]) - r[1] * (r[3] * r[8] - r[5] * r[6]) +
                     r[2] * (r[3] * r[7] - r[4] * r[6]);
  if (std::fabs(det - 1.0) > 1e-5)
    throw std::invalid_argument("camera: rotation determinant is not +1");
}

std::array<double, 3> Camera::forward_axis() const {
  return {rotation[2], rotation[5], rotation[8]};
}

Camera make_look_at(const std::array<double, 3>& pos, const std::array<double, 3>& target,
                    const std::array<double, 3>& up, double focal, int width, int height) {
  const std::array<double, 3> fwd =
      normalized({target[0] - pos[0], target[1] - pos[1], target[2] - pos[2]});
  const auto side = cross(fwd, normalized(up));
  if (std::sqrt(dot(side, side)) < 1e-8)
    throw std::invalid_argument("camera: view direction parallel to up vector");
  const auto x = normalized(side);
  const auto y = cross(fwd, x);
  Camera cam;
  cam.fx = cam.fy = focal;
  cam.cx = width / 2.0;
  cam.cy = height / 2.0;
  cam.width = width;
  cam.height = height;
  cam.rotation = {x[0], y[0], fwd[0], x[1], y[1], fwd[1], x[2], y[2], fwd[2]};
  cam.position = pos;
  cam.validate();
  return cam;
}

bool project_point(const Camera& cam, const std::array<double, 3>& world, double& u, double& v) {
  const auto& r = cam.rotation;
  const std::array<double, 3> d = {world[0] - cam.position[0], world[1] - cam.position[1],
                                   world[2] - cam.position[2]};
  // World-to-camera uses R^T (columns become rows).
  const double xc = r[0] * d[0] + r[3] * d[1] + r[6] * d[2];
  const double yc = r[1] * d[0] + r[4] * d[1] + r[7] * d[2];
  const double zc = r[2] * d[0] + r[5] * d[1] + r[8] * d[2];
  if (zc <= 1e-9) return false;
  u = cam.fx * xc / zc + cam.cx - 0.5;
  v = cam.fy * yc / zc + cam.cy - 0.5;
  return true;
}

void RayBatch::validate() const {
  const std::int64_t n = size();
  if (static_cast<std::int64_t>(origins.size()) != 3 * n ||
      static_cast<std::int64_t>(directions.size()) != 3 * n ||
      static_cast<std::int64_t>(far_vals.size()) != n)
    throw std::invalid_argument("rays: inconsistent array lengths");
  if (!targets.empty() && static_cast<std::int64_t>(targets.size()) != 3 * n)
    throw std::invalid_argument("rays: target color count does not match ray count");
  for (std::int64_t i = 0; i < n; ++i) {
    const double* d = directions.data() + 3 * i;
    const double norm = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
    if (std::fabs(norm - 1.0) > 1e-6)
      throw std::invalid_argument("rays: direction " + std::to_string(i) + " is not unit length");
    if (!(near_vals[i] < far_vals[i]))
      throw std::invalid_argument("rays: near >= far on ray " + std::to_string(i));
  }
}

RayBatch generate_rays(const Camera& cam, const std::vector<std::array<int, 2>>& pixels, double t,
                       const std::array<double, 3>& bounds_min,
                       const std::array<double, 3>& bounds_max) {
  cam.validate();
  const std::array<double, 3> center = {(bounds_min[0] + bounds_max[0]) / 2,
                                        (bounds_min[1] + bounds_max[1]) / 2,
                                        (bounds_min[2] + bounds_max[2]) / 2};
  const std::array<double, 3> half = {(bounds_max[0] - bounds_min[0]) / 2,
                                      (bounds_max[1] - bounds_min[1]) / 2,
                                      (bounds_max[2] - bounds_min[2]) / 2};
  const double radius = std::sqrt(dot(half, half));
  RayBatch rays;
  rays.t = t;
  rays.origins.reserve(pixels.size() * 3);
  rays.directions.reserve(pixels.size() * 3);
  for (const auto& px : pixels) {
    if (px[0] < 0 || px[0] >= cam.width || px[1] < 0 || px[1] >= cam.height)
      throw std::invalid_argument("generate_rays: pixel (" + std::to_string(px[0]) + "," +
                                  std::to_string(px[1]) + ") outside image");
    const std::array<double, 3> dc = {(px[0] + 0.5 - cam.cx) / cam.fx,
                                      (px[1] + 0.5 - cam.cy) / cam.fy, 1.0};
    const auto& r = cam.rotation;
    const auto dw = normalized({r[0] * dc[0] + r[1] * dc[1] + r[2] * dc[2],
                                r[3] * dc[0] + r[4] * dc[1] + r[5] * dc[2],
                                r[6] * dc[0] + r[7] * dc[1] + r[8] * dc[2]});
    const std::array<double, 3> oc = {center[0] - cam.position[0], center[1] - cam.position[1],
                                      center[2] - cam.position[2]};
    const double along = dot(oc, dw);
    const double near = std::max(1e-3, along - radius);
    const double far = std::max(near + 2 * radius, along + radius);
    rays.origins.insert(rays.origins.end(), cam.position.begin(), cam.position.end());
    rays.directions.insert(rays.directions.end(), dw.begin(), dw.end());
    rays.near_vals.push_back(near);
    rays.far_vals.push_back(far);
  }
  return rays;
}

}  // namespace pref::render
