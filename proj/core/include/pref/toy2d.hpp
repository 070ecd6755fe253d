#pragma once

#include <array>
#include <cstdint>

#include "pref/image.hpp"
#include "pref/rng.hpp"

namespace pref::scenes {

enum class WarpKind { kShear, kSwirl };

struct ToyWarp {
  WarpKind kind = WarpKind::kShear;
  double amplitude = 1.5;   // pixels (shear) or radians at the swirl center
  double frequency = 2.0;   // shear: sine cycles across the image height
};

struct ToySpec {
  int width = 64;
  int height = 64;
  int frame_count = 8;
  ToyWarp warp_a{WarpKind::kShear, 1.5, 2.0};
  ToyWarp warp_b{WarpKind::kSwirl, 0.05, 0.0};
  int texture_waves = 6;  // sinusoids summed into the base image

  void validate() const;
};

// Procedural image sequence deformed by two alternating warps (A,B,A,...),
// with the exact forward displacement field stored per transition.
struct ToySequence2D {
  ToySpec spec;
  std::uint64_t seed = 0;
  std::vector<render::Image> frames;
  // Per transition, row-major [H*W*2] pixel displacements (dx, dy):
  // content at pixel p of frame t appears at p + motion[t](p) in frame t+1.
  std::vector<std::vector<float>> motion;

  int transition_count() const { return spec.frame_count - 1; }
};

// Forward displacement of pixel (x, y) under the warp.
std::array<double, 2> warp_displacement(const ToyWarp& warp, double x, double y, int width,
                                        int height);

// Rejects amplitudes that fold the image over (non-invertible warp).
ToySequence2D make_toy2d(const ToySpec& spec, std::uint64_t seed);

void save_toy2d(const ToySequence2D& toy, const std::string& path);
ToySequence2D load_toy2d(const std::string& path);

}  // namespace pref::scenes
