#include "pref/render.hpp"

#include <cmath>
#include <stdexcept>

namespace pref::render {

std::vector<double> sample_points(const RayBatch& rays, int num_samples, bool stratified,
                                  Rng& rng) {
  if (num_samples < 2) throw std::invalid_argument("sample_points: need at least 2 samples");
  rays.validate();
  const std::int64_t n = rays.size();
  std::vector<double> depths(static_cast<std::size_t>(n) * num_samples);
  for (std::int64_t i = 0; i < n; ++i) {
    const double near = rays.near_vals[i], span = rays.far_vals[i] - rays.near_vals[i];
    for (int s = 0; s < num_samples; ++s) {
      const double u = stratified ? rng.uniform() : 0.5;
      depths[i * num_samples + s] = near + span * ((s + u) / num_samples);
    }
  }
  return depths;
}

namespace {

void check_depths(const RayBatch& rays, const std::vector<double>& depths, int num_samples) {
  const std::int64_t n = rays.size();
  if (num_samples < 1 ||
      depths.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(num_samples))
    throw std::invalid_argument("render: depth count does not match rays x samples");
  for (std::int64_t i = 0; i < n; ++i)
    for (int s = 1; s < num_samples; ++s)
      if (!(depths[i * num_samples + s] > depths[i * num_samples + s - 1]))
        throw std::invalid_argument("render: depths not strictly increasing on ray " +
                                    std::to_string(i));
}

// World-space sample positions [N*S,3] and per-sample segment lengths
// [N,S], the last segment closed at the ray's far bound.
template <typename T>
void build_samples(const RayBatch& rays, const std::vector<double>& depths, int num_samples,
                   std::vector<T>& points, std::vector<T>& deltas) {
  const std::int64_t n = rays.size();
  points.resize(static_cast<std::size_t>(n) * num_samples * 3);
  deltas.resize(static_cast<std::size_t>(n) * num_samples);
  for (std::int64_t i = 0; i < n; ++i) {
    const double* o = rays.origins.data() + 3 * i;
    const double* d = rays.directions.data() + 3 * i;
    for (int s = 0; s < num_samples; ++s) {
      const double depth = depths[i * num_samples + s];
      for (int a = 0; a < 3; ++a)
        points[(i * num_samples + s) * 3 + a] = static_cast<T>(o[a] + depth * d[a]);
      const double next =
          s + 1 < num_samples ? depths[i * num_samples + s + 1] : rays.far_vals[i];
      deltas[i * num_samples + s] = static_cast<T>(std::max(next - depth, 0.0));
    }
  }
}

template <typename T>
ad::Tensor<T> composite_samples(const ad::Tensor<T>& rgbsigma, const std::vector<T>& deltas,
                                std::int64_t n, int num_samples) {
  auto colors = ad::reshape(ad::slice_cols(rgbsigma, 0, 3), {n, std::int64_t(3) * num_samples});
  auto sigma = ad::reshape(ad::slice_cols(rgbsigma, 3, 1), {n, std::int64_t(num_samples)});
  auto delta = ad::Tensor<T>::from(deltas, {n, std::int64_t(num_samples)});
  return ad::composite(ad::mul(sigma, delta), colors);
}

}  // namespace

template <typename T>
ad::Tensor<T> render_rays(const nets::FieldBundle<T>& bundle, const RayBatch& rays,
                          const std::vector<double>& depths, int num_samples) {
  rays.validate();
  check_depths(rays, depths, num_samples);
  std::vector<T> pts, deltas;
  build_samples<T>(rays, depths, num_samples, pts, deltas);
  const std::int64_t n = rays.size();
  auto points = ad::Tensor<T>::from(std::move(pts), {n * num_samples, 3});
  auto rgbsigma = bundle.spacetime_query(points, rays.t);
  return composite_samples(rgbsigma, deltas, n, num_samples);
}

template <typename T>
ad::Tensor<T> render_rays_with_motion(const nets::FieldBundle<T>& bundle, const RayBatch& rays,
                                      const std::vector<double>& depths, int num_samples,
                                      int transition) {
  rays.validate();
  check_depths(rays, depths, num_samples);
  std::vector<T> pts, deltas;
  build_samples<T>(rays, depths, num_samples, pts, deltas);
  const std::int64_t n = rays.size();
  auto points = ad::Tensor<T>::from(std::move(pts), {n * num_samples, 3});
  auto displaced = ad::add(points, bundle.motion_query(points, bundle.transition_embedding(transition)));
  auto rgbsigma = bundle.spacetime_query(displaced, rays.t + bundle.spec.frame_step());
  return composite_samples(rgbsigma, deltas, n, num_samples);
}

std::vector<double> render_rays_analytic(const AnalyticField& field, const RayBatch& rays,
                                         const std::vector<double>& depths, int num_samples) {
  rays.validate();
  check_depths(rays, depths, num_samples);
  std::vector<double> pts, deltas;
  build_samples<double>(rays, depths, num_samples, pts, deltas);
  const std::int64_t n = rays.size();
  std::vector<double> sig_del(static_cast<std::size_t>(n) * num_samples);
  std::vector<double> colors(static_cast<std::size_t>(n) * num_samples * 3);
  for (std::int64_t i = 0; i < n * num_samples; ++i) {
    std::array<double, 3> rgb;
    double sigma;
    field({pts[i * 3], pts[i * 3 + 1], pts[i * 3 + 2]}, rays.t, rgb, sigma);
    sig_del[i] = sigma * deltas[i];
    for (int c = 0; c < 3; ++c) colors[i * 3 + c] = rgb[c];
  }
  ad::NoGradGuard guard;
  auto out = ad::composite(
      ad::Tensor<double>::from(std::move(sig_del), {n, std::int64_t(num_samples)}),
      ad::Tensor<double>::from(std::move(colors), {n, std::int64_t(3) * num_samples}));
  return out.data();
}

template <typename T>
Image render_image(const nets::FieldBundle<T>& bundle, const Camera& cam, double t,
                   int num_samples, int rays_per_chunk) {
  cam.validate();
  if (rays_per_chunk < 1) throw std::invalid_argument("render_image: bad chunk size");
  Image img = make_image(cam.width, cam.height);
  ad::NoGradGuard guard;
  Rng unused(0);
  std::vector<std::array<int, 2>> pixels;
  pixels.reserve(rays_per_chunk);
  std::size_t cursor = 0;
  const std::size_t total = static_cast<std::size_t>(cam.width) * cam.height;
  while (cursor < total) {
    pixels.clear();
    while (cursor < total && pixels.size() < static_cast<std::size_t>(rays_per_chunk)) {
      pixels.push_back({static_cast<int>(cursor % cam.width), static_cast<int>(cursor / cam.width)});
      ++cursor;
    }
    auto rays = generate_rays(cam, pixels, t, bundle.spec.bounds_min, bundle.spec.bounds_max);
    auto depths = sample_points(rays, num_samples, false, unused);
    auto out = render_rays(bundle, rays, depths, num_samples);
    const auto& data = out.data();
    for (std::size_t k = 0; k < pixels.size(); ++k) {
      float* px = img.pixel(pixels[k][0], pixels[k][1]);
      for (int c = 0; c < 3; ++c)
        px[c] = std::min(std::max(static_cast<float>(data[k * 4 + c]), 0.0f), 1.0f);
    }
  }
  return img;
}

template ad::Tensor<float> render_rays<float>(const nets::FieldBundle<float>&, const RayBatch&,
                                              const std::vector<double>&, int);
template ad::Tensor<double> render_rays<double>(const nets::FieldBundle<double>&, const RayBatch&,
                                                const std::vector<double>&, int);
template ad::Tensor<float> render_rays_with_motion<float>(const nets::FieldBundle<float>&,
                                                          const RayBatch&,
                                                          const std::vector<double>&, int, int);
template ad::Tensor<double> render_rays_with_motion<double>(const nets::FieldBundle<double>&,
                                                            const RayBatch&,
                                                            const std::vector<double>&, int, int);
template Image render_image<float>(const nets::FieldBundle<float>&, const Camera&, double, int,
                                   int);
template Image render_image<double>(const nets::FieldBundle<double>&, const Camera&, double, int,
                                    int);

}  // namespace pref::render
