#include <doctest.h>

#include <cmath>
#include <set>

#include "pref/bundle.hpp"
#include "test_util.hpp"

using namespace pref;
using ad::Tensor;

namespace {

nets::BundleSpec small_spec() {
  nets::BundleSpec spec;
  spec.n = 3;
  spec.m = 4;
  spec.tau = 2;
  spec.transition_count = 6;
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
  return spec;
}

}  // namespace

TEST_SUITE("bundle") {
  TEST_CASE("embedding is the linear map w*B") {
    auto bundle = nets::init_bundle<double>(small_spec(), 3);
    const int n = bundle.spec.n, m = bundle.spec.m;

    // One-hot weights pick out basis rows.
    for (int i = 0; i < n; ++i) {
      std::vector<double> w(n, 0.0);
      w[i] = 1.0;
      auto om = bundle.embed_weights(Tensor<double>::from(w, {1, n}));
      for (int j = 0; j < m; ++j)
        CHECK(om.data()[j] == doctest::Approx(bundle.basis.data()[i * m + j]).epsilon(1e-12));
    }

    // Linearity.
    Rng rng(9);
    auto w1 = testutil::rand_tensor<double>(rng, {1, n}, -1, 1, false);
    auto w2 = testutil::rand_tensor<double>(rng, {1, n}, -1, 1, false);
    const double a = 0.7, b = -1.9;
    auto combo = ad::add(ad::scale(w1, a), ad::scale(w2, b));
    auto lhs = bundle.embed_weights(combo);
    auto e1 = bundle.embed_weights(w1);
    auto e2 = bundle.embed_weights(w2);
    for (int j = 0; j < m; ++j)
      CHECK(lhs.data()[j] ==
            doctest::Approx(a * e1.data()[j] + b * e2.data()[j]).epsilon(1e-10));

    // Naive matvec oracle.
    auto w = testutil::rand_tensor<double>(rng, {1, n}, -2, 2, false);
    auto om = bundle.embed_weights(w);
    for (int j = 0; j < m; ++j) {
      double acc = 0;
      for (int i = 0; i < n; ++i) acc += w.data()[i] * bundle.basis.data()[i * m + j];
      CHECK(om.data()[j] == doctest::Approx(acc).epsilon(1e-12));
    }
  }

  TEST_CASE("per-frame mode passes weights through") {
    auto spec = small_spec();
    spec.embedding_mode = nets::EmbeddingMode::kPerFrame;
    auto bundle = nets::init_bundle<double>(spec, 3);
    CHECK(spec.weight_dim() == spec.m);
    CHECK_FALSE(bundle.basis.defined());
    auto w = Tensor<double>::from({1, 2, 3, 4}, {1, 4});
    auto om = bundle.embed_weights(w);
    CHECK(om.data() == w.data());
    // Transition weights are [1, m] and feed the motion net directly.
    CHECK(bundle.weights[0].shape() == ad::Shape{1, 4});
  }

  TEST_CASE("predictor dimensions follow tau and the weight dim") {
    auto bundle = nets::init_bundle<float>(small_spec(), 0);
    CHECK(bundle.predictor.spec.in_dim == 2 * 3);  // tau * n
    CHECK(bundle.predictor.spec.out_dim == 3);

    nets::BundleSpec wide = small_spec();
    wide.n = 5;
    wide.tau = 3;
    wide.transition_count = 8;
    auto b2 = nets::init_bundle<float>(wide, 0);
    CHECK(b2.predictor.spec.in_dim == 15);
    CHECK(b2.predictor.spec.out_dim == 5);

    std::vector<Tensor<float>> hist(3, Tensor<float>::from({0, 0, 0, 0, 0}, {1, 5}));
    CHECK(b2.predict_weights(hist).shape() == ad::Shape{1, 5});
    hist.pop_back();
    CHECK_THROWS_AS(b2.predict_weights(hist), ad::ShapeError);
  }

  TEST_CASE("field outputs live in their value ranges") {
    auto bundle = nets::init_bundle<float>(small_spec(), 11);
    Rng rng(4);
    auto pts = testutil::rand_tensor<float>(rng, {32, 3}, -1, 1, false);
    for (double t : {0.0, 0.31, 1.0}) {
      auto out = bundle.spacetime_query(pts, t);
      REQUIRE(out.shape() == ad::Shape{32, 4});
      for (int i = 0; i < 32; ++i) {
        for (int c = 0; c < 3; ++c) {
          CHECK(out.data()[i * 4 + c] >= 0.0f);
          CHECK(out.data()[i * 4 + c] <= 1.0f);
        }
        CHECK(out.data()[i * 4 + 3] >= 0.0f);
      }
    }
    CHECK_THROWS_AS(bundle.spacetime_query(pts, -0.5), ad::ShapeError);
    CHECK_THROWS_AS(bundle.spacetime_query(pts, 1.5), ad::ShapeError);
  }

  TEST_CASE("motion broadcast matches per-row embeddings") {
    auto bundle = nets::init_bundle<double>(small_spec(), 5);
    Rng rng(6);
    auto pts = testutil::rand_tensor<double>(rng, {4, 3}, -0.9, 0.9, false);
    auto omega = bundle.transition_embedding(1);
    auto broadcast = bundle.motion_query(pts, omega);
    std::vector<double> rows;
    for (int r = 0; r < 4; ++r) rows.insert(rows.end(), omega.data().begin(), omega.data().end());
    auto expanded = bundle.motion_query(pts, Tensor<double>::from(rows, {4, 4}));
    REQUIRE(broadcast.shape() == expanded.shape());
    for (std::int64_t i = 0; i < broadcast.numel(); ++i)
      CHECK(broadcast.data()[i] == doctest::Approx(expanded.data()[i]).epsilon(1e-12));

    CHECK_THROWS_AS(bundle.transition_embedding(-1), ad::ShapeError);
    CHECK_THROWS_AS(bundle.transition_embedding(6), ad::ShapeError);
  }

  TEST_CASE("single-point wrappers agree with batched queries") {
    auto bundle = nets::init_bundle<float>(small_spec(), 21);
    const std::array<double, 3> p{0.2, -0.4, 0.6};
    auto s = bundle.query_point(p, 0.5);
    auto pts = Tensor<float>::from({0.2f, -0.4f, 0.6f}, {1, 3});
    auto batched = bundle.spacetime_query(pts, 0.5);
    for (int c = 0; c < 4; ++c) CHECK(s[c] == doctest::Approx(batched.data()[c]).epsilon(1e-6));

    auto d = bundle.displace_point(p, 2);
    auto dp = bundle.motion_query(pts, bundle.transition_embedding(2));
    for (int c = 0; c < 3; ++c) CHECK(d[c] == doctest::Approx(dp.data()[c]).epsilon(1e-6));
  }

  TEST_CASE("deterministic initialization with independent component streams") {
    auto a = nets::init_bundle<float>(small_spec(), 42);
    auto b = nets::init_bundle<float>(small_spec(), 42);
    auto pa = a.parameters(true);
    auto pb = b.parameters(true);
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(testutil::bitwise_equal(pa[i], pb[i]));

    auto c = nets::init_bundle<float>(small_spec(), 43);
    CHECK_FALSE(testutil::bitwise_equal(a.field.weights[0], c.field.weights[0]));

    // Switching embedding mode must not disturb the other components.
    auto spec_pf = small_spec();
    spec_pf.embedding_mode = nets::EmbeddingMode::kPerFrame;
    auto d = nets::init_bundle<float>(spec_pf, 42);
    CHECK(testutil::bitwise_equal(a.field.weights[0], d.field.weights[0]));
    CHECK(testutil::bitwise_equal(a.motion.weights[1], d.motion.weights[1]));
  }

  TEST_CASE("parameter list covers every component exactly once") {
    auto bundle = nets::init_bundle<float>(small_spec(), 1);
    auto all = bundle.parameters(true);
    auto without = bundle.parameters(false);
    CHECK(all.size() == without.size() + bundle.predictor.parameters().size());
    CHECK(bundle.parameter_count(true) ==
          bundle.parameter_count(false) + bundle.predictor.parameter_count());

    std::set<std::string> names;
    for (const auto& p : all) {
      CHECK_FALSE(p.name().empty());
      CHECK(names.insert(p.name()).second);
    }
    // Transition weights: one per transition, [1, n].
    CHECK(bundle.weights.size() == 6);
    CHECK(bundle.weights[3].shape() == ad::Shape{1, 3});
  }

  TEST_CASE("spec validation") {
    auto spec = small_spec();
    spec.transition_count = spec.tau;
    CHECK_THROWS_AS(spec.validate(), ad::ShapeError);
    spec = small_spec();
    spec.n = 0;
    CHECK_THROWS_AS(spec.validate(), ad::ShapeError);
    spec = small_spec();
    spec.bounds_min = {1, -1, -1};
    spec.bounds_max = {1, 1, 1};
    CHECK_THROWS_AS(spec.validate(), ad::ShapeError);
    CHECK(small_spec().frame_step() == doctest::Approx(1.0 / 6.0));
  }
}
