#pragma once

#include "pref/render.hpp"

namespace pref::scenes {

enum class TrajectoryKind { kStatic, kLinear, kSinusoid, kOrbit };

// Rigid translation of a solid's center over normalized time t in [0,1].
struct TrajectorySpec {
  TrajectoryKind kind = TrajectoryKind::kStatic;
  std::array<double, 3> base{0, 0, 0};
  std::array<double, 3> velocity{0, 0, 0};   // kLinear: displacement over the whole sequence
  std::array<double, 3> amplitude{0, 0, 0};  // kSinusoid: per-axis amplitude
  double frequency = 1.0;                    // cycles over the sequence
  double phase = 0.0;
  double orbit_radius = 0.0;                 // kOrbit: circle in the xy plane around base

  std::array<double, 3> position(double t) const;
};

enum class SolidKind { kSphere, kBox };

struct PrimitiveSpec {
  SolidKind solid = SolidKind::kSphere;
  double radius = 0.3;
  std::array<double, 3> half_extents{0.2, 0.2, 0.2};
  std::array<double, 3> color{0.9, 0.2, 0.15};
  double extinction = 10.0;  // per world unit
  double falloff = 0.05;     // boundary falloff width, world units
  TrajectorySpec trajectory;
  int appear_from = 0;          // frames outside [appear_from, appear_to] have no density
  int appear_to = 1 << 29;
  int keypoints = 8;
};

struct RigSpec {
  int count = 6;
  double radius = 3.0;
  double elevation = 1.0;
  double focal = 70.0;
  int image_width = 64;
  int image_height = 64;
};

struct SceneSpec {
  std::array<double, 3> bounds_min{-1, -1, -1};
  std::array<double, 3> bounds_max{1, 1, 1};
  std::vector<PrimitiveSpec> primitives;
  RigSpec rig;
  int frame_count = 25;
  int gt_samples = 256;  // quadrature samples for ground-truth rendering

  void validate() const;
  double frame_time(int f) const { return static_cast<double>(f) / (frame_count - 1); }
  double diameter() const;
};

struct SceneSequence {
  SceneSpec spec;
  std::uint64_t seed = 0;
  std::vector<render::Camera> cameras;
  std::vector<std::vector<render::Image>> frames;            // [camera][frame]
  std::vector<std::vector<std::array<double, 3>>> keypoints;  // [frame][point]

  int frame_count() const { return spec.frame_count; }
  double frame_time(int f) const { return spec.frame_time(f); }
};

// Exact density and color at (p,t): constant extinction inside each solid
// with a linear falloff band of the configured width just inside the
// boundary, zero outside; overlaps blend colors by density.
void analytic_sample(const SceneSpec& spec, const std::array<double, 3>& p, double t,
                     std::array<double, 3>& rgb, double& sigma);
render::AnalyticField analytic_field(const SceneSpec& spec);

// Builds cameras, seeded keypoint offsets, and ground-truth images rendered
// with the shared quadrature at spec.gt_samples.
SceneSequence make_scene(const SceneSpec& spec, std::uint64_t seed);

// Dataset directory round trip (cameras.txt, frames/cam{k}/f{t}.png,
// keypoints.csv, bounds.txt, meta.txt).
void save_dataset(const SceneSequence& seq, const std::string& path);
SceneSequence load_dataset(const std::string& path);

}  // namespace pref::scenes
