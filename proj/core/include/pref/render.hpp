#pragma once

#include <functional>

#include "pref/bundle.hpp"
#include "pref/camera.hpp"
#include "pref/image.hpp"

namespace pref::render {

// Depths partitioning each ray's [near, far] into num_samples equal bins,
// flattened ray-major ([ray*S + s]). Stratified mode jitters one uniform
// draw per bin; otherwise bin midpoints.
std::vector<double> sample_points(const RayBatch& rays, int num_samples, bool stratified,
                                  Rng& rng);

// Composited color and opacity [N,4] along each ray: alpha_i =
// 1-exp(-sigma_i*delta_i) under transmittance weighting, with the last
// segment closed at far. Differentiable into the bundle.
template <typename T>
ad::Tensor<T> render_rays(const nets::FieldBundle<T>& bundle, const RayBatch& rays,
                          const std::vector<double>& depths, int num_samples);

// Same quadrature, but every sample point is advected by the motion field
// under transition k's embedding and the field is read at the next frame's
// time; gradients reach M, the basis, w_k, and F.
template <typename T>
ad::Tensor<T> render_rays_with_motion(const nets::FieldBundle<T>& bundle, const RayBatch& rays,
                                      const std::vector<double>& depths, int num_samples,
                                      int transition);

// Ground-truth quadrature over a closed-form field, run through the same
// compositing primitive; returns [N,4] doubles.
using AnalyticField = std::function<void(const std::array<double, 3>& p, double t,
                                         std::array<double, 3>& rgb, double& sigma)>;
std::vector<double> render_rays_analytic(const AnalyticField& field, const RayBatch& rays,
                                         const std::vector<double>& depths, int num_samples);

// Full-frame render, tiled internally; midpoint sampling, so deterministic.
template <typename T>
Image render_image(const nets::FieldBundle<T>& bundle, const Camera& cam, double t,
                   int num_samples, int rays_per_chunk = 4096);

extern template ad::Tensor<float> render_rays<float>(const nets::FieldBundle<float>&,
                                                     const RayBatch&, const std::vector<double>&,
                                                     int);
extern template ad::Tensor<double> render_rays<double>(const nets::FieldBundle<double>&,
                                                       const RayBatch&,
                                                       const std::vector<double>&, int);
extern template ad::Tensor<float> render_rays_with_motion<float>(const nets::FieldBundle<float>&,
                                                                 const RayBatch&,
                                                                 const std::vector<double>&, int,
                                                                 int);
extern template ad::Tensor<double> render_rays_with_motion<double>(
    const nets::FieldBundle<double>&, const RayBatch&, const std::vector<double>&, int, int);
extern template Image render_image<float>(const nets::FieldBundle<float>&, const Camera&, double,
                                          int, int);
extern template Image render_image<double>(const nets::FieldBundle<double>&, const Camera&,
                                           double, int, int);

}  // namespace pref::render
