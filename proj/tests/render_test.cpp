#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "batteries.hpp"
#include "pref/bundle.hpp"
#include "pref/camera.hpp"
#include "pref/render.hpp"
#include "pref/rng.hpp"
#include "test_util.hpp"

using namespace pref;
using ad::Tensor;

namespace {

render::RayBatch two_rays(double t = 0.0) {
  render::RayBatch rays;
  for (int r = 0; r < 2; ++r) {
    rays.origins.insert(rays.origins.end(), {0.15 * r, -0.1, -2.5});
    rays.directions.insert(rays.directions.end(), {0, 0, 1});
    rays.near_vals.push_back(1.6);
    rays.far_vals.push_back(3.4);
  }
  rays.t = t;
  return rays;
}

nets::BundleSpec render_spec() {
  nets::BundleSpec spec;
  spec.n = 3;
  spec.m = 4;
  spec.tau = 2;
  spec.transition_count = 3;
  spec.enc_position = {3, true};
  spec.enc_time = {2, true};
  spec.field_width = 16;
  spec.field_layers = 2;
  spec.field_skip = 1;
  spec.motion_width = 12;
  spec.motion_layers = 2;
  spec.motion_skip = 1;
  spec.predictor_width = 8;
  spec.predictor_layers = 2;
  return spec;
}

// Zero a network's output layer so it emits exactly zero pre-activation.
template <typename T>
void zero_output_layer(nets::Mlp<T>& net) {
  auto params = net.parameters();
  auto& w = params[params.size() - 2];
  auto& b = params[params.size() - 1];
  std::fill(w.impl()->data.begin(), w.impl()->data.end(), T(0));
  std::fill(b.impl()->data.begin(), b.impl()->data.end(), T(0));
}

}  // namespace

TEST_SUITE("render") {

TEST_CASE("midpoint depths bisect equal bins") {
  render::RayBatch rays = two_rays();
  rays.near_vals = {0.0, 2.0};
  rays.far_vals = {1.0, 4.0};
  Rng rng(1);
  auto depths = render::sample_points(rays, 4, false, rng);
  REQUIRE(depths.size() == 8);
  const std::vector<double> want0{0.125, 0.375, 0.625, 0.875};
  for (int s = 0; s < 4; ++s) {
    CHECK(depths[s] == doctest::Approx(want0[s]).epsilon(1e-12));
    CHECK(depths[4 + s] == doctest::Approx(2.0 + 2.0 * want0[s]).epsilon(1e-12));
  }
}

TEST_CASE("stratified depths stay in their bins and average to midpoints") {
  render::RayBatch rays = two_rays();
  rays.near_vals = {1.0, 1.0};
  rays.far_vals = {3.0, 3.0};
  const int S = 4;
  std::vector<double> mean(S, 0.0);
  const int trials = 10000;
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng(9000 + trial);
    auto depths = render::sample_points(rays, S, true, rng);
    for (int s = 0; s < S; ++s) {
      const double lo = 1.0 + 0.5 * s, hi = lo + 0.5;
      CHECK(depths[s] >= lo);
      CHECK(depths[s] <= hi);
      mean[s] += depths[s];
    }
  }
  for (int s = 0; s < S; ++s) {
    const double mid = 1.25 + 0.5 * s;
    CHECK(std::abs(mean[s] / trials - mid) < 0.01 * mid);
  }
}

TEST_CASE("quadrature converges to the homogeneous closed form") {
  double prev = battery::homogeneous_error(16);
  for (int S : {32, 64, 128, 256}) {
    const double err = battery::homogeneous_error(S);
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 1e-3);
}

TEST_CASE("opacity telescopes and weights never exceed one") {
  auto bundle = nets::init_bundle<double>(render_spec(), 52);
  auto rays = two_rays(0.5);
  Rng rng(7);
  auto depths = render::sample_points(rays, 16, false, rng);
  auto out = render::render_rays(bundle, rays, depths, 16);
  REQUIRE(out.shape() == std::vector<std::int64_t>({2, 4}));
  for (int r = 0; r < 2; ++r) {
    const double opacity = out.data()[r * 4 + 3];
    CHECK(opacity >= 0.0);
    CHECK(opacity <= 1.0);
    for (int c = 0; c < 3; ++c) {
      CHECK(out.data()[r * 4 + c] >= 0.0);
      CHECK(out.data()[r * 4 + c] <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("a field emitting zero density renders black and transparent") {
  auto bundle = nets::init_bundle<double>(render_spec(), 53);
  // relu(0) = 0 density everywhere once the output layer is zeroed; color
  // sigmoid(0) = 0.5 but zero alpha weights kill it.
  zero_output_layer(bundle.field);
  auto rays = two_rays(0.25);
  Rng rng(7);
  auto depths = render::sample_points(rays, 8, false, rng);
  auto out = render::render_rays(bundle, rays, depths, 8);
  for (std::size_t i = 0; i < out.data().size(); ++i) CHECK(out.data()[i] == 0.0);
}

TEST_CASE("zeroed motion head makes the warped render match the direct one") {
  auto spec = render_spec();
  auto bundle = nets::init_bundle<double>(spec, 54);
  zero_output_layer(bundle.motion);
  auto rays = two_rays();
  Rng rng(11);
  auto depths = render::sample_points(rays, 8, false, rng);

  for (int k = 0; k < spec.transition_count; ++k) {
    rays.t = k * spec.frame_step();
    auto warped = render::render_rays_with_motion(bundle, rays, depths, 8, k);
    render::RayBatch shifted = rays;
    shifted.t = (k + 1) * spec.frame_step();
    auto direct = render::render_rays(bundle, shifted, depths, 8);
    CHECK(testutil::bitwise_equal(warped, direct));
  }
}

TEST_CASE("analytic renderer agrees with the bundle path on a constant field") {
  // Drive render_rays_analytic with the same constant medium the closed
  // form uses; per-sample quadrature must match the tensor compositor.
  const double sigma0 = 1.7;
  const std::array<double, 3> c0{0.6, 0.3, 0.9};
  render::AnalyticField field = [&](const std::array<double, 3>&, double,
                                    std::array<double, 3>& rgb, double& sigma) {
    rgb = c0;
    sigma = sigma0;
  };
  auto rays = two_rays();
  Rng rng(3);
  auto depths = render::sample_points(rays, 64, false, rng);
  auto out = render::render_rays_analytic(field, rays, depths, 64);
  REQUIRE(out.size() == 8);
  for (int r = 0; r < 2; ++r) {
    // Segments span first sample to far, so the discrete optical depth
    // telescopes to sigma*(far - depths[0]) exactly for a constant medium.
    const double expect_opacity = 1.0 - std::exp(-sigma0 * (3.4 - depths[r * 64]));
    CHECK(out[r * 4 + 3] == doctest::Approx(expect_opacity).epsilon(1e-12));
    for (int c = 0; c < 3; ++c)
      CHECK(out[r * 4 + c] == doctest::Approx(c0[c] * expect_opacity).epsilon(1e-12));
  }
}

TEST_CASE("full-frame render is chunk-size invariant") {
  auto bundle = nets::init_bundle<float>(render_spec(), 55);
  auto cam = render::make_look_at({0, -2.6, 0.3}, {0, 0, 0}, {0, 0, 1}, 20.0, 12, 9);
  auto a = render::render_image(bundle, cam, 0.5, 6, 7);
  auto b = render::render_image(bundle, cam, 0.5, 6, 4096);
  REQUIRE(a.width == 12);
  REQUIRE(a.height == 9);
  REQUIRE(a.rgb.size() == b.rgb.size());
  for (std::size_t i = 0; i < a.rgb.size(); ++i) CHECK(a.rgb[i] == b.rgb[i]);
}

TEST_CASE("renderer rejects malformed sample counts") {
  auto bundle = nets::init_bundle<double>(render_spec(), 56);
  auto rays = two_rays();
  Rng rng(1);
  auto depths = render::sample_points(rays, 4, false, rng);
  CHECK_THROWS(render::render_rays(bundle, rays, depths, 5));  // depth size mismatch
  CHECK_THROWS(render::render_rays_with_motion(bundle, rays, depths, 4, 99));
}

}  // TEST_SUITE
