#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

#include "pref/camera.hpp"
#include "pref/rng.hpp"
#include "test_util.hpp"

using namespace pref;
using render::Camera;

namespace {

double norm3(const std::array<double, 3>& v) {
  return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
}

}  // namespace

TEST_SUITE("camera") {

TEST_CASE("look-at camera faces the target") {
  auto cam = render::make_look_at({0, -2.5, 0.4}, {0, 0, 0}, {0, 0, 1}, 90.0, 64, 48);
  CHECK(cam.width == 64);
  CHECK(cam.height == 48);
  CHECK(cam.position == std::array<double, 3>{0, -2.5, 0.4});
  CHECK(cam.cx == doctest::Approx(32.0));
  CHECK(cam.cy == doctest::Approx(24.0));

  auto fwd = cam.forward_axis();
  std::array<double, 3> to_target{0 - cam.position[0], 0 - cam.position[1], 0 - cam.position[2]};
  const double len = norm3(to_target);
  for (int i = 0; i < 3; ++i) CHECK(fwd[i] == doctest::Approx(to_target[i] / len).epsilon(1e-9));

  // Rotation columns are orthonormal.
  const auto& R = cam.rotation;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      double dot = 0;
      for (int r = 0; r < 3; ++r) dot += R[r * 3 + a] * R[r * 3 + b];
      CHECK(dot == doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-9));
    }
}

TEST_CASE("look-at rejects a view direction parallel to up") {
  CHECK_THROWS(render::make_look_at({0, 0, 3}, {0, 0, 0}, {0, 0, 1}, 60.0, 32, 32));
  CHECK_THROWS(render::make_look_at({0, 0, -3}, {0, 0, 0}, {0, 0, 1}, 60.0, 32, 32));
  CHECK_THROWS(render::make_look_at({1, 1, 1}, {1, 1, 1}, {0, 0, 1}, 60.0, 32, 32));
}

TEST_CASE("camera validation catches bad intrinsics") {
  Camera cam = render::make_look_at({0, -3, 0}, {0, 0, 0}, {0, 0, 1}, 70.0, 16, 16);
  CHECK_NOTHROW(cam.validate());
  Camera bad = cam;
  bad.fx = 0;
  CHECK_THROWS(bad.validate());
  bad = cam;
  bad.width = 0;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("rays through pixel centers reproject to their pixel") {
  Rng rng(404);
  const std::array<double, 3> lo{-1, -1, -1}, hi{1, 1, 1};
  for (int trial = 0; trial < 8; ++trial) {
    std::array<double, 3> pos{rng.uniform(-3.5, 3.5), rng.uniform(-3.5, 3.5),
                              rng.uniform(0.5, 3.0)};
    if (norm3(pos) < 2.2) pos[1] -= 3.0;
    auto cam = render::make_look_at(pos, {0, 0, 0}, {0, 0, 1}, rng.uniform(50.0, 110.0), 64, 64);

    std::vector<std::array<int, 2>> pixels;
    for (int i = 0; i < 25; ++i)
      pixels.push_back({int(rng.uniform_index(64)), int(rng.uniform_index(64))});
    auto rays = render::generate_rays(cam, pixels, 0.25, lo, hi);
    CHECK(rays.size() == 25);
    CHECK(rays.t == doctest::Approx(0.25));
    CHECK_NOTHROW(rays.validate());

    for (std::size_t r = 0; r < pixels.size(); ++r) {
      // Origin sits at the camera...
      for (int i = 0; i < 3; ++i) CHECK(rays.origins[3 * r + i] == doctest::Approx(cam.position[i]));
      // ...directions are unit...
      std::array<double, 3> d{rays.directions[3 * r], rays.directions[3 * r + 1],
                              rays.directions[3 * r + 2]};
      CHECK(norm3(d) == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(rays.near_vals[r] < rays.far_vals[r]);
      CHECK(rays.near_vals[r] > 0);

      // ...and any point along the ray projects back onto the pixel center.
      const double s = rng.uniform(rays.near_vals[r], rays.far_vals[r]);
      double u = -1, v = -1;
      REQUIRE(render::project_point(
          cam, {cam.position[0] + s * d[0], cam.position[1] + s * d[1], cam.position[2] + s * d[2]},
          u, v));
      CHECK(std::abs(u - pixels[r][0]) < 1e-4);
      CHECK(std::abs(v - pixels[r][1]) < 1e-4);
    }
  }
}

TEST_CASE("ray intervals cover the scene bounding sphere") {
  const std::array<double, 3> lo{-1, -1, -1}, hi{1, 1, 1};
  auto cam = render::make_look_at({0, -2.8, 0}, {0, 0, 0}, {0, 0, 1}, 80.0, 32, 32);
  auto rays = render::generate_rays(cam, {{16, 16}}, 0.0, lo, hi);
  // Conservative interval: project the sphere center (origin, radius
  // sqrt(3)) onto the ray and pad by the full radius on both sides.
  const std::array<double, 3> d{rays.directions[0], rays.directions[1], rays.directions[2]};
  const std::array<double, 3> oc{-cam.position[0], -cam.position[1], -cam.position[2]};
  const double mid = d[0] * oc[0] + d[1] * oc[1] + d[2] * oc[2];
  const double radius = std::sqrt(3.0);
  CHECK(rays.near_vals[0] == doctest::Approx(mid - radius).epsilon(1e-9));
  CHECK(rays.far_vals[0] == doctest::Approx(mid + radius).epsilon(1e-9));
  // A camera inside the sphere still gets a positive interval.
  auto inside = render::make_look_at({0, -0.5, 0}, {0, 0, 0}, {0, 0, 1}, 80.0, 32, 32);
  auto rin = render::generate_rays(inside, {{16, 16}}, 0.0, lo, hi);
  CHECK(rin.near_vals[0] == doctest::Approx(1e-3));
  CHECK(rin.far_vals[0] >= rin.near_vals[0] + 2 * radius - 1e-9);
}

TEST_CASE("points behind the camera do not project") {
  auto cam = render::make_look_at({0, -3, 0}, {0, 0, 0}, {0, 0, 1}, 60.0, 32, 32);
  double u, v;
  CHECK(render::project_point(cam, {0, 0, 0}, u, v));
  CHECK_FALSE(render::project_point(cam, {0, -5, 0}, u, v));
  CHECK_FALSE(render::project_point(cam, cam.position, u, v));
}

TEST_CASE("ray batch validation") {
  render::RayBatch rays;
  rays.origins = {0, 0, 0};
  rays.directions = {0, 0, 2};  // not unit
  rays.near_vals = {0.5};
  rays.far_vals = {1.5};
  CHECK_THROWS(rays.validate());
  rays.directions = {0, 0, 1};
  CHECK_NOTHROW(rays.validate());
  rays.near_vals = {1.5};
  rays.far_vals = {0.5};
  CHECK_THROWS(rays.validate());
  rays.near_vals = {0.5};
  rays.far_vals = {1.5};
  rays.origins = {0, 0, 0, 1, 1, 1};  // length mismatch
  CHECK_THROWS(rays.validate());
}

}  // TEST_SUITE
