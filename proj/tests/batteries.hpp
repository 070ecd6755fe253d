#pragma once

// Finite-difference and closed-form oracles shared between the unit tests
// and the acceptance harness. Unit suites run them at reduced counts; the
// acceptance harness runs the full battery.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "pref/bundle.hpp"
#include "pref/gradcheck.hpp"
#include "pref/losses.hpp"
#include "pref/render.hpp"
#include "pref/rng.hpp"
#include "pref/tracking.hpp"

namespace battery {

struct FdOutcome {
  int instances = 0;
  int failures = 0;
  double worst_rel = 0.0;
  std::string worst_case;

  bool pass() const { return failures == 0; }
  void absorb(const std::string& label, const pref::ad::GradCheckReport& report) {
    ++instances;
    if (!report.pass) ++failures;
    if (report.max_rel_err > worst_rel) {
      worst_rel = report.max_rel_err;
      worst_case = label;
    }
  }
};

namespace detail {

using pref::Rng;
using pref::ad::Tensor;

inline Tensor<double> rand2d(Rng& rng, std::int64_t rows, std::int64_t cols, double lo, double hi,
                             bool rg = true) {
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return Tensor<double>::from(std::move(v), {rows, cols}, rg);
}

// Keeps finite differences valid for kinked ops by staying clear of the
// non-differentiable set.
inline Tensor<double> rand_away_from(Rng& rng, std::int64_t rows, std::int64_t cols,
                                     const std::vector<double>& kinks, double margin) {
  std::vector<double> v(rows * cols);
  for (auto& x : v) {
    for (;;) {
      x = rng.uniform(-2.0, 2.0);
      bool clear = true;
      for (double k : kinks)
        if (std::abs(x - k) < margin) clear = false;
      if (clear) break;
    }
  }
  return Tensor<double>::from(std::move(v), {rows, cols}, true);
}

// Scalarizes an arbitrary output with fixed random weights so every output
// element feeds the checked gradient.
inline Tensor<double> weighted_sum(Rng& rng, const Tensor<double>& out) {
  std::vector<double> w(out.numel());
  for (auto& x : w) x = rng.uniform(-1.0, 1.0);
  auto weights = Tensor<double>::from(std::move(w), out.shape(), false);
  return pref::ad::sum(pref::ad::mul(out, weights));
}

}  // namespace detail

// One finite-difference pass over every differentiable primitive,
// `per_op` random instances each. 64-bit, central differences.
inline FdOutcome fd_primitive_battery(int per_op, std::uint64_t seed, double step = 1e-4,
                                      double tol = 1e-3) {
  using namespace pref::ad;
  using detail::rand2d;
  using detail::rand_away_from;
  pref::Rng rng(seed);
  FdOutcome out;

  auto dims = [&rng]() {
    return std::array<std::int64_t, 2>{1 + std::int64_t(rng.uniform_index(4)),
                                       1 + std::int64_t(rng.uniform_index(5))};
  };
  auto check1 = [&](const std::string& label, const Tensor<double>& x, auto&& fn) {
    auto f = [&](const std::vector<Tensor<double>>& p) {
      return detail::weighted_sum(rng, fn(p[0]));
    };
    pref::Rng save = rng;  // weighted_sum must draw the same weights on every re-eval
    auto wrapped = [&](const std::vector<Tensor<double>>& p) {
      rng = save;
      return f(p);
    };
    out.absorb(label, grad_check(wrapped, {x}, step, tol));
  };
  auto check2 = [&](const std::string& label, const Tensor<double>& a, const Tensor<double>& b,
                    auto&& fn) {
    pref::Rng save = rng;
    auto wrapped = [&](const std::vector<Tensor<double>>& p) {
      rng = save;
      return detail::weighted_sum(rng, fn(p[0], p[1]));
    };
    out.absorb(label, grad_check(wrapped, {a, b}, step, tol));
  };

  for (int i = 0; i < per_op; ++i) {
    auto [n, d] = dims();

    // Binary elementwise in all three shape modes.
    const int mode = int(rng.uniform_index(3));
    auto rhs = mode == 0   ? rand2d(rng, n, d, -2, 2)
               : mode == 1 ? rand2d(rng, 1, d, -2, 2)
                           : Tensor<double>::from(rand2d(rng, 1, d, -2, 2).data(), {d}, true);
    check2("add", rand2d(rng, n, d, -2, 2), rhs, [](auto& a, auto& b) { return add(a, b); });
    check2("sub", rand2d(rng, n, d, -2, 2), rand2d(rng, n, d, -2, 2),
           [](auto& a, auto& b) { return sub(a, b); });
    check2("mul", rand2d(rng, n, d, -2, 2), rand2d(rng, n, d, -2, 2),
           [](auto& a, auto& b) { return mul(a, b); });
    check2("sqdiff", rand2d(rng, n, d, -2, 2), rand2d(rng, n, d, -2, 2),
           [](auto& a, auto& b) { return sqdiff(a, b); });

    check1("neg", rand2d(rng, n, d, -2, 2), [](auto& x) { return neg(x); });
    check1("exp", rand2d(rng, n, d, -2, 2), [](auto& x) { return exp(x); });
    check1("sin", rand2d(rng, n, d, -3, 3), [](auto& x) { return sin(x); });
    check1("cos", rand2d(rng, n, d, -3, 3), [](auto& x) { return cos(x); });
    check1("sigmoid", rand2d(rng, n, d, -4, 4), [](auto& x) { return sigmoid(x); });
    check1("relu", rand_away_from(rng, n, d, {0.0}, 0.05), [](auto& x) { return relu(x); });
    check1("clamp", rand_away_from(rng, n, d, {-1.0, 1.0}, 0.05),
           [](auto& x) { return clamp(x, -1.0, 1.0); });
    const double s = rng.uniform(-3, 3);
    check1("scale", rand2d(rng, n, d, -2, 2), [s](auto& x) { return scale(x, s); });

    const std::int64_t k = 1 + std::int64_t(rng.uniform_index(4));
    check2("matmul", rand2d(rng, n, k, -1, 1), rand2d(rng, k, d, -1, 1),
           [](auto& a, auto& b) { return matmul(a, b); });

    {
      auto a = rand2d(rng, n, d, -1, 1);
      auto b = rand2d(rng, n, 1 + std::int64_t(rng.uniform_index(3)), -1, 1);
      pref::Rng save = rng;
      auto wrapped = [&](const std::vector<Tensor<double>>& p) {
        rng = save;
        return detail::weighted_sum(rng, concat_cols<double>({p[0], p[1]}));
      };
      out.absorb("concat_cols", grad_check(wrapped, {a, b}, step, tol));
    }

    const std::int64_t start = std::int64_t(rng.uniform_index(d));
    const std::int64_t len = 1 + std::int64_t(rng.uniform_index(d - start));
    check1("slice_cols", rand2d(rng, n, d, -2, 2),
           [start, len](auto& x) { return slice_cols(x, start, len); });

    check1("repeat_rows", rand2d(rng, 1, d, -2, 2), [n](auto& x) { return repeat_rows(x, n); });
    check1("reshape", rand2d(rng, n, d, -2, 2),
           [](auto& x) { return reshape(x, {x.numel()}); });

    {
      auto x = rand2d(rng, n, d, -2, 2);
      auto f = [](const std::vector<Tensor<double>>& p) { return sum(p[0]); };
      out.absorb("sum", grad_check(f, {x}, step, tol));
      auto g = [](const std::vector<Tensor<double>>& p) { return mean(p[0]); };
      out.absorb("mean", grad_check(g, {rand2d(rng, n, d, -2, 2)}, step, tol));
    }

    {
      const std::int64_t s_count = 2 + std::int64_t(rng.uniform_index(4));
      auto sd = rand2d(rng, n, s_count, 0.01, 1.5);
      auto colors = rand2d(rng, n, 3 * s_count, 0.0, 1.0);
      check2("composite", sd, colors, [](auto& a, auto& b) { return composite(a, b); });
    }

    {
      // Image is a constant input; only the lookup coordinates get grads.
      // Coordinates stay off the integer lattice, where the interpolant
      // has kinks, and inside the clamp-free interior.
      const std::int64_t h = 4, w = 5, c = 1 + std::int64_t(rng.uniform_index(3));
      std::vector<double> img(h * w * c);
      for (auto& v : img) v = rng.uniform(0, 1);
      auto image = Tensor<double>::from(std::move(img), {h, w, c}, false);
      std::vector<double> cv;
      for (std::int64_t j = 0; j < n; ++j) {
        cv.push_back(rng.uniform_index(w - 1) + rng.uniform(0.1, 0.9));
        cv.push_back(rng.uniform_index(h - 1) + rng.uniform(0.1, 0.9));
      }
      auto coords = Tensor<double>::from(std::move(cv), {n, 2}, true);
      pref::Rng save = rng;
      auto wrapped = [&](const std::vector<Tensor<double>>& p) {
        rng = save;
        return detail::weighted_sum(rng, bilinear_sample(image, p[0]));
      };
      out.absorb("bilinear_sample", grad_check(wrapped, {coords}, step, tol));
    }
  }
  return out;
}

// Small double-precision bundle for whole-network checks.
inline pref::nets::FieldBundle<double> tiny_bundle(std::uint64_t seed) {
  pref::nets::BundleSpec spec;
  spec.n = 3;
  spec.m = 4;
  spec.tau = 2;
  spec.transition_count = 5;
  spec.enc_position = {2, true};
  spec.enc_time = {2, true};
  spec.field_width = 8;
  spec.field_layers = 2;
  spec.field_skip = 1;
  spec.motion_width = 8;
  spec.motion_layers = 2;
  spec.motion_skip = 1;
  spec.predictor_width = 8;
  spec.predictor_layers = 2;
  return pref::nets::init_bundle<double>(spec, seed);
}

// Gradients of the field, motion (through omega = w * B), predictor, and
// the full motion-reparameterized render, against finite differences.
inline FdOutcome fd_network_battery(int instances, std::uint64_t seed, double step = 1e-4,
                                    double tol = 1e-3) {
  using namespace pref;
  using ad::Tensor;
  Rng rng(seed);
  FdOutcome out;

  for (int i = 0; i < instances; ++i) {
    auto bundle = tiny_bundle(seed * 1000 + i);
    const int k = 2 + int(rng.uniform_index(bundle.spec.transition_count - 2));

    {
      auto pts = detail::rand2d(rng, 3, 3, -0.9, 0.9, false);
      const double t = rng.uniform(0, 1);
      auto f = [&](const std::vector<Tensor<double>>&) {
        return ad::sum(bundle.spacetime_query(pts, t));
      };
      out.absorb("field_query", grad_check(f, bundle.field.parameters(), step, tol));
    }

    {
      auto pts = detail::rand2d(rng, 3, 3, -0.9, 0.9, false);
      std::vector<Tensor<double>> params = bundle.motion.parameters();
      params.push_back(bundle.basis);
      params.push_back(bundle.weights[k]);
      auto f = [&](const std::vector<Tensor<double>>&) {
        return ad::sum(bundle.motion_query(pts, bundle.transition_embedding(k)));
      };
      out.absorb("motion_query_omega", grad_check(f, params, step, tol));
    }

    {
      std::vector<Tensor<double>> params = bundle.predictor.parameters();
      for (int j = k - bundle.spec.tau; j <= k; ++j) params.push_back(bundle.weights[j]);
      auto f = [&](const std::vector<Tensor<double>>&) {
        return train::prediction_loss(bundle, k, train::PredGradMode::kJoint);
      };
      out.absorb("predictor_loss", grad_check(f, params, step, tol));
    }

    {
      render::RayBatch rays;
      for (int r = 0; r < 2; ++r) {
        rays.origins.insert(rays.origins.end(), {rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), -2.5});
        rays.directions.insert(rays.directions.end(), {0, 0, 1});
        rays.near_vals.push_back(1.6);
        rays.far_vals.push_back(3.4);
      }
      rays.t = k * bundle.spec.frame_step();
      Rng depth_rng(seed + 77);
      auto depths = render::sample_points(rays, 4, false, depth_rng);
      std::vector<Tensor<double>> params = bundle.parameters(false);
      auto f = [&](const std::vector<Tensor<double>>&) {
        return ad::sum(render::render_rays_with_motion(bundle, rays, depths, 4, k));
      };
      out.absorb("render_with_motion", grad_check(f, params, step, tol));
    }
  }
  return out;
}

// |quadrature - closed form| for a constant-medium field, worst channel
// over a few axis-aligned rays.
inline double homogeneous_error(int num_samples, double sigma0 = 1.7,
                                std::array<double, 3> c0 = {0.6, 0.3, 0.9}) {
  pref::render::RayBatch rays;
  const std::array<std::array<double, 3>, 3> dirs{{{0, 0, 1}, {0, 1, 0}, {1, 0, 0}}};
  for (const auto& d : dirs) {
    rays.origins.insert(rays.origins.end(), {0.05, -0.1, -2.0});
    rays.directions.insert(rays.directions.end(), d.begin(), d.end());
    rays.near_vals.push_back(0.4);
    rays.far_vals.push_back(2.9);
  }
  pref::Rng rng(0);
  auto depths = pref::render::sample_points(rays, num_samples, false, rng);
  auto field = [&](const std::array<double, 3>&, double, std::array<double, 3>& rgb,
                   double& sigma) {
    rgb = c0;
    sigma = sigma0;
  };
  auto img = pref::render::render_rays_analytic(field, rays, depths, num_samples);
  double worst = 0;
  for (std::size_t r = 0; r < dirs.size(); ++r) {
    const double expected_alpha = 1.0 - std::exp(-sigma0 * (rays.far_vals[r] - rays.near_vals[r]));
    for (int ch = 0; ch < 3; ++ch)
      worst = std::max(worst, std::abs(img[r * 4 + ch] - c0[ch] * expected_alpha));
    worst = std::max(worst, std::abs(img[r * 4 + 3] - expected_alpha));
  }
  return worst;
}

// Straight-from-the-definition tracking metric: mean over eligible start
// frames u, horizons v = 1..k, and joints, of the Euclidean error at
// frame u+v. Written independently of the library implementation.
inline double bruteforce_mmpjpe(const std::vector<std::vector<pref::eval::Trajectory>>& per_start,
                                const std::vector<std::vector<std::array<double, 3>>>& gt, int k) {
  const int last_gt = int(gt.size()) - 1;
  double outer = 0;
  int starts = 0;
  for (const auto& trajs : per_start) {
    if (trajs.empty()) continue;
    const int u = trajs.front().origin_frame;
    if (u + k > last_gt) continue;
    double horizon_sum = 0;
    for (int v = 1; v <= k; ++v) {
      double joint_sum = 0;
      for (const auto& tr : trajs) {
        const auto& p = tr.positions[v];
        const auto& q = gt[u + v][tr.point_id];
        joint_sum += std::sqrt((p[0] - q[0]) * (p[0] - q[0]) + (p[1] - q[1]) * (p[1] - q[1]) +
                               (p[2] - q[2]) * (p[2] - q[2]));
      }
      horizon_sum += joint_sum / double(trajs.size());
    }
    outer += horizon_sum / double(k);
    ++starts;
  }
  return starts == 0 ? 0.0 : outer / double(starts);
}

}  // namespace battery
