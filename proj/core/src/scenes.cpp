#include "pref/scenes.hpp"

#include <cmath>
#include <stdexcept>

namespace pref::scenes {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

std::array<double, 3> TrajectorySpec::position(double t) const {
  switch (kind) {
    case TrajectoryKind::kStatic:
      return base;
    case TrajectoryKind::kLinear:
      return {base[0] + velocity[0] * t, base[1] + velocity[1] * t, base[2] + velocity[2] * t};
    case TrajectoryKind::kSinusoid: {
      const double s = std::sin(kTwoPi * frequency * t + phase);
      return {base[0] + amplitude[0] * s, base[1] + amplitude[1] * s, base[2] + amplitude[2] * s};
    }
    case TrajectoryKind::kOrbit: {
      const double a = kTwoPi * frequency * t + phase;
      return {base[0] + orbit_radius * std::cos(a), base[1] + orbit_radius * std::sin(a),
              base[2]};
    }
  }
  return base;
}

namespace {

double primitive_extent(const PrimitiveSpec& prim) {
  if (prim.solid == SolidKind::kSphere) return prim.radius;
  const auto& h = prim.half_extents;
  return std::sqrt(h[0] * h[0] + h[1] * h[1] + h[2] * h[2]);
}

// Signed distance to the solid's surface, negative inside.
double primitive_sdf(const PrimitiveSpec& prim, const std::array<double, 3>& center,
                     const std::array<double, 3>& p) {
  const std::array<double, 3> d = {p[0] - center[0], p[1] - center[1], p[2] - center[2]};
  if (prim.solid == SolidKind::kSphere)
    return std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) - prim.radius;
  std::array<double, 3> q;
  double inner = -1e30;
  for (int a = 0; a < 3; ++a) {
    q[a] = std::fabs(d[a]) - prim.half_extents[a];
    inner = std::max(inner, q[a]);
  }
  double outer = 0;
  for (int a = 0; a < 3; ++a) outer += std::max(q[a], 0.0) * std::max(q[a], 0.0);
  return std::sqrt(outer) + std::min(inner, 0.0);
}

bool primitive_active(const SceneSpec& spec, const PrimitiveSpec& prim, double t) {
  const double eps = 0.5 / (spec.frame_count - 1);
  return t >= spec.frame_time(std::max(prim.appear_from, 0)) - eps &&
         t <= spec.frame_time(std::min(prim.appear_to, spec.frame_count - 1)) + eps;
}

}  // namespace

double SceneSpec::diameter() const {
  double acc = 0;
  for (int a = 0; a < 3; ++a) {
    const double d = bounds_max[a] - bounds_min[a];
    acc += d * d;
  }
  return std::sqrt(acc);
}

void SceneSpec::validate() const {
  if (frame_count < 2) throw std::invalid_argument("scene: needs at least 2 frames");
  if (gt_samples < 2) throw std::invalid_argument("scene: gt_samples too small");
  if (rig.count < 1) throw std::invalid_argument("scene: empty camera rig");
  for (int a = 0; a < 3; ++a)
    if (!(bounds_min[a] < bounds_max[a]))
      throw std::invalid_argument("scene: degenerate bounds");
  if (primitives.empty()) throw std::invalid_argument("scene: no primitives");
  for (std::size_t i = 0; i < primitives.size(); ++i) {
    const auto& prim = primitives[i];
    const double extent = primitive_extent(prim);
    if (extent <= 0) throw std::invalid_argument("scene: primitive " + std::to_string(i) +
                                                 " has no volume");
    if (prim.falloff <= 0 || prim.falloff >= extent)
      throw std::invalid_argument("scene: primitive " + std::to_string(i) +
                                  " falloff must lie in (0, extent)");
    if (prim.extinction <= 0)
      throw std::invalid_argument("scene: primitive " + std::to_string(i) +
                                  " extinction must be positive");
    for (int f = 0; f < frame_count; ++f) {
      const auto c = prim.trajectory.position(frame_time(f));
      for (int a = 0; a < 3; ++a)
        if (c[a] - extent < bounds_min[a] || c[a] + extent > bounds_max[a])
          throw std::invalid_argument("scene: primitive " + std::to_string(i) +
                                      " exits bounds at frame " + std::to_string(f));
    }
  }
}

void analytic_sample(const SceneSpec& spec, const std::array<double, 3>& p, double t,
                     std::array<double, 3>& rgb, double& sigma) {
  sigma = 0;
  rgb = {0, 0, 0};
  for (const auto& prim : spec.primitives) {
    if (!primitive_active(spec, prim, t)) continue;
    const double sdf = primitive_sdf(prim, prim.trajectory.position(t), p);
    if (sdf >= 0) continue;
    const double ramp = std::min(-sdf / prim.falloff, 1.0);
    const double s = prim.extinction * ramp;
    sigma += s;
    for (int c = 0; c < 3; ++c) rgb[c] += s * prim.color[c];
  }
  if (sigma > 0)
    for (int c = 0; c < 3; ++c) rgb[c] /= sigma;
}

render::AnalyticField analytic_field(const SceneSpec& spec) {
  return [spec](const std::array<double, 3>& p, double t, std::array<double, 3>& rgb,
                double& sigma) { analytic_sample(spec, p, t, rgb, sigma); };
}

SceneSequence make_scene(const SceneSpec& spec, std::uint64_t seed) {
  spec.validate();
  SceneSequence seq;
  seq.spec = spec;
  seq.seed = seed;

  const std::array<double, 3> center = {(spec.bounds_min[0] + spec.bounds_max[0]) / 2,
                                        (spec.bounds_min[1] + spec.bounds_max[1]) / 2,
                                        (spec.bounds_min[2] + spec.bounds_max[2]) / 2};
  for (int j = 0; j < spec.rig.count; ++j) {
    const double a = kTwoPi * j / spec.rig.count;
    const std::array<double, 3> pos = {center[0] + spec.rig.radius * std::cos(a),
                                       center[1] + spec.rig.radius * std::sin(a),
                                       center[2] + spec.rig.elevation};
    seq.cameras.push_back(render::make_look_at(pos, center, {0, 0, 1}, spec.rig.focal,
                                               spec.rig.image_width, spec.rig.image_height));
  }

  // Keypoints ride each primitive at fixed body-frame offsets.
  Rng rng(seed);
  Rng kp_rng = rng.fork(11);
  std::vector<std::array<double, 3>> offsets;
  std::vector<std::size_t> owner;
  for (std::size_t i = 0; i < spec.primitives.size(); ++i) {
    const auto& prim = spec.primitives[i];
    for (int k = 0; k < prim.keypoints; ++k) {
      std::array<double, 3> off;
      if (prim.solid == SolidKind::kSphere) {
        // Uniform direction via normalized gaussian, scaled inside the solid.
        double n2 = 0;
        do {
          for (int a = 0; a < 3; ++a) off[a] = kp_rng.normal();
          n2 = off[0] * off[0] + off[1] * off[1] + off[2] * off[2];
        } while (n2 < 1e-12);
        const double r = 0.6 * prim.radius * std::cbrt(kp_rng.uniform());
        const double inv = r / std::sqrt(n2);
        for (int a = 0; a < 3; ++a) off[a] *= inv;
      } else {
        for (int a = 0; a < 3; ++a)
          off[a] = kp_rng.uniform(-0.6 * prim.half_extents[a], 0.6 * prim.half_extents[a]);
      }
      offsets.push_back(off);
      owner.push_back(i);
    }
  }
  seq.keypoints.resize(spec.frame_count);
  for (int f = 0; f < spec.frame_count; ++f) {
    const double t = spec.frame_time(f);
    for (std::size_t k = 0; k < offsets.size(); ++k) {
      const auto c = spec.primitives[owner[k]].trajectory.position(t);
      const std::array<double, 3> p = {c[0] + offsets[k][0], c[1] + offsets[k][1],
                                       c[2] + offsets[k][2]};
      for (int a = 0; a < 3; ++a)
        if (p[a] < spec.bounds_min[a] || p[a] > spec.bounds_max[a])
          throw std::invalid_argument("scene: keypoint escapes bounds at frame " +
                                      std::to_string(f));
      seq.keypoints[f].push_back(p);
    }
  }

  // Ground truth rendered by the shared quadrature against the exact field.
  const auto field = analytic_field(spec);
  Rng unused(0);
  seq.frames.resize(seq.cameras.size());
  std::vector<std::array<int, 2>> pixels;
  for (std::size_t cam_i = 0; cam_i < seq.cameras.size(); ++cam_i) {
    const auto& cam = seq.cameras[cam_i];
    pixels.clear();
    for (int y = 0; y < cam.height; ++y)
      for (int x = 0; x < cam.width; ++x) pixels.push_back({x, y});
    for (int f = 0; f < spec.frame_count; ++f) {
      auto rays = render::generate_rays(cam, pixels, spec.frame_time(f), spec.bounds_min,
                                        spec.bounds_max);
      auto depths = render::sample_points(rays, spec.gt_samples, false, unused);
      auto colors = render::render_rays_analytic(field, rays, depths, spec.gt_samples);
      auto img = render::make_image(cam.width, cam.height);
      for (std::size_t k = 0; k < pixels.size(); ++k)
        for (int c = 0; c < 3; ++c)
          img.rgb[k * 3 + c] =
              std::min(std::max(static_cast<float>(colors[k * 4 + c]), 0.0f), 1.0f);
      seq.frames[cam_i].push_back(std::move(img));
    }
  }
  return seq;
}

}  // namespace pref::scenes
