#include <doctest.h>

#include <cmath>

#include "pref/encoding.hpp"
#include "pref/gradcheck.hpp"
#include "test_util.hpp"

using namespace pref;
using ad::Tensor;

TEST_SUITE("encoding") {
  TEST_CASE("x=0 with two frequencies") {
    auto x = Tensor<double>::from({0.0}, {1, 1});
    auto enc = nets::positional_encode(x, {2, true});
    CHECK(enc.shape() == ad::Shape{1, 5});
    CHECK(enc.data() == std::vector<double>{0, 0, 1, 0, 1});
  }

  TEST_CASE("encoded dimension") {
    CHECK(nets::encoded_dim(3, {10, true}) == 63);
    CHECK(nets::encoded_dim(1, {6, true}) == 13);
    CHECK(nets::encoded_dim(2, {4, false}) == 16);
    auto x = Tensor<double>::from(std::vector<double>(3, 0.25), {1, 3});
    CHECK(nets::positional_encode(x, {10, true}).shape() == ad::Shape{1, 63});
  }

  TEST_CASE("feature layout matches the formula") {
    Rng rng(4);
    auto x = testutil::rand_tensor<double>(rng, {3, 2}, -1, 1, false);
    nets::EncoderSpec spec{3, true};
    auto enc = nets::positional_encode(x, spec);
    REQUIRE(enc.shape() == ad::Shape{3, 2 * 7});
    // Columns: [x0, x1, sin(pi x0), sin(pi x1), cos(pi x0), cos(pi x1),
    // sin(2 pi x0), ...] per frequency block.
    const auto& v = enc.data();
    const std::int64_t cols = enc.dim(1);
    for (int r = 0; r < 3; ++r) {
      for (int d = 0; d < 2; ++d) {
        const double xv = x.data()[r * 2 + d];
        CHECK(v[r * cols + d] == xv);
        for (int l = 0; l < 3; ++l) {
          const double arg = std::pow(2.0, l) * 3.14159265358979323846 * xv;
          const double s = v[r * cols + 2 + 2 * l * 2 + d];
          const double c = v[r * cols + 2 + (2 * l + 1) * 2 + d];
          CHECK(s == doctest::Approx(std::sin(arg)).epsilon(1e-12));
          CHECK(c == doctest::Approx(std::cos(arg)).epsilon(1e-12));
        }
      }
    }
  }

  TEST_CASE("plain-value path agrees with the tensor path") {
    Rng rng(5);
    std::vector<double> vals{-0.8, 0.3, 0.9};
    nets::EncoderSpec spec{4, true};
    auto plain = nets::encode_values(vals, spec);
    auto tensor = nets::positional_encode(Tensor<double>::from(vals, {1, 3}), spec);
    REQUIRE(plain.size() == static_cast<std::size_t>(tensor.numel()));
    for (std::size_t i = 0; i < plain.size(); ++i)
      CHECK(plain[i] == doctest::Approx(tensor.data()[i]).epsilon(1e-12));
  }

  TEST_CASE("rejects unusable specs") {
    auto x = Tensor<double>::from({0.5}, {1, 1});
    CHECK_THROWS_AS(nets::positional_encode(x, {0, false}), ad::ShapeError);
    CHECK_THROWS_AS(nets::positional_encode(Tensor<double>::from({0.5}, {1}), {2, true}),
                    ad::ShapeError);
  }

  TEST_CASE("gradients flow through the features") {
    auto x = Tensor<double>::from({0.37, -0.61}, {1, 2}, true);
    auto f = [](const std::vector<Tensor<double>>& p) {
      return ad::sum(nets::positional_encode(p[0], {3, true}));
    };
    auto report = ad::grad_check(f, {x});
    INFO(report.to_string());
    CHECK(report.pass);
  }
}
