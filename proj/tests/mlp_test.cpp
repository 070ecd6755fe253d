#include <doctest.h>

#include <cmath>

#include "pref/gradcheck.hpp"
#include "pref/mlp.hpp"
#include "test_util.hpp"

using namespace pref;
using ad::Tensor;

namespace {

// Scalar-loop reimplementation of the forward pass, sharing nothing with
// the tensor code path.
std::vector<double> naive_forward(const nets::Mlp<double>& net, const std::vector<double>& input) {
  std::vector<double> h = input;
  auto layer = [&](const Tensor<double>& w, const Tensor<double>& b, const std::vector<double>& in,
                   bool relu) {
    const std::int64_t fan_in = w.dim(0), fan_out = w.dim(1);
    REQUIRE(static_cast<std::int64_t>(in.size()) == fan_in);
    std::vector<double> out(fan_out);
    for (std::int64_t o = 0; o < fan_out; ++o) {
      double acc = b.data()[o];
      for (std::int64_t i = 0; i < fan_in; ++i) acc += in[i] * w.data()[i * fan_out + o];
      out[o] = relu && acc < 0 ? 0.0 : acc;
    }
    return out;
  };
  for (int i = 0; i < net.spec.hidden_layers; ++i) {
    if (i == net.spec.skip_layer) h.insert(h.end(), input.begin(), input.end());
    h = layer(net.weights[i], net.biases[i], h, true);
  }
  return layer(net.weights.back(), net.biases.back(), h, false);
}

}  // namespace

TEST_SUITE("mlp") {
  TEST_CASE("forward matches a scalar-loop oracle") {
    Rng rng(8);
    nets::MlpSpec spec;
    spec.in_dim = 3;
    spec.width = 8;
    spec.hidden_layers = 3;
    spec.skip_layer = 2;
    spec.out_dim = 4;
    auto net = nets::make_mlp<double>(spec, "f", rng);

    for (int trial = 0; trial < 20; ++trial) {
      auto x = testutil::rand_tensor<double>(rng, {2, 3}, -2, 2, false);
      auto y = net.forward(x);
      REQUIRE(y.shape() == ad::Shape{2, 4});
      for (int r = 0; r < 2; ++r) {
        std::vector<double> row(x.data().begin() + r * 3, x.data().begin() + r * 3 + 3);
        auto expect = naive_forward(net, row);
        for (int c = 0; c < 4; ++c)
          CHECK(y.data()[r * 4 + c] == doctest::Approx(expect[c]).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("parameter naming and count") {
    Rng rng(1);
    nets::MlpSpec spec;
    spec.in_dim = 5;
    spec.width = 7;
    spec.hidden_layers = 2;
    spec.skip_layer = 1;
    spec.out_dim = 3;
    auto net = nets::make_mlp<float>(spec, "motion", rng);

    REQUIRE(net.weights.size() == 3);
    CHECK(net.weights[0].name() == "motion.w0");
    CHECK(net.biases[0].name() == "motion.b0");
    CHECK(net.weights[2].name() == "motion.w2");
    CHECK(net.weights[0].shape() == ad::Shape{5, 7});
    // The skip layer sees [hidden, input] concatenated.
    CHECK(net.weights[1].shape() == ad::Shape{12, 7});
    CHECK(net.weights[2].shape() == ad::Shape{7, 3});

    std::int64_t expected = 5 * 7 + 7 + 12 * 7 + 7 + 7 * 3 + 3;
    CHECK(net.parameter_count() == expected);
    CHECK(net.parameters().size() == 6);
  }

  TEST_CASE("fan-in initialization bounds") {
    Rng rng(2);
    nets::MlpSpec spec;
    spec.in_dim = 16;
    spec.width = 16;
    spec.hidden_layers = 2;
    spec.out_dim = 16;
    auto net = nets::make_mlp<double>(spec, "n", rng);
    for (const auto& w : net.weights) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(w.dim(0)));
      double mean = 0;
      for (double v : w.data()) {
        CHECK(std::abs(v) <= bound);
        mean += v;
      }
      mean /= double(w.numel());
      CHECK(std::abs(mean) < bound * 0.35);
    }
  }

  TEST_CASE("same rng state reproduces the same network") {
    nets::MlpSpec spec;
    spec.in_dim = 4;
    spec.width = 6;
    spec.hidden_layers = 2;
    spec.out_dim = 2;
    Rng a(77), b(77), c(78);
    auto na = nets::make_mlp<float>(spec, "x", a);
    auto nb = nets::make_mlp<float>(spec, "x", b);
    auto nc = nets::make_mlp<float>(spec, "x", c);
    for (std::size_t i = 0; i < na.weights.size(); ++i) {
      CHECK(testutil::bitwise_equal(na.weights[i], nb.weights[i]));
      CHECK(testutil::bitwise_equal(na.biases[i], nb.biases[i]));
    }
    CHECK_FALSE(testutil::bitwise_equal(na.weights[0], nc.weights[0]));
  }

  TEST_CASE("gradients against finite differences") {
    Rng rng(31);
    nets::MlpSpec spec;
    spec.in_dim = 2;
    spec.width = 5;
    spec.hidden_layers = 2;
    spec.skip_layer = 1;
    spec.out_dim = 2;
    auto net = nets::make_mlp<double>(spec, "g", rng);
    auto x = testutil::rand_tensor<double>(rng, {3, 2}, -1.5, 1.5, false);
    auto f = [&](const std::vector<Tensor<double>>&) { return ad::sum(net.forward(x)); };
    auto report = ad::grad_check(f, net.parameters());
    INFO(report.to_string());
    CHECK(report.pass);
  }

  TEST_CASE("spec validation") {
    nets::MlpSpec spec;
    spec.in_dim = 3;
    spec.out_dim = 1;
    spec.hidden_layers = 2;
    spec.skip_layer = 2;  // must be strictly inside
    CHECK_THROWS_AS(spec.validate(), ad::ShapeError);
    spec.skip_layer = 0;
    CHECK_THROWS_AS(spec.validate(), ad::ShapeError);
    spec.skip_layer = -1;
    CHECK_NOTHROW(spec.validate());
    spec.hidden_layers = 0;
    CHECK_THROWS_AS(spec.validate(), ad::ShapeError);
    nets::Mlp<double> uninit;
    CHECK_THROWS_AS(uninit.forward(Tensor<double>::from({1, 2, 3}, {1, 3})), ad::ShapeError);
  }
}
