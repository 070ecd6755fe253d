#include <doctest.h>

#include <cmath>

#include "batteries.hpp"
#include "pref/gradcheck.hpp"
#include "pref/ops.hpp"

using namespace pref;
using ad::Tensor;

TEST_SUITE("autodiff") {
  TEST_CASE("finite differences over every primitive, reduced battery") {
    auto outcome = battery::fd_primitive_battery(3, 17);
    INFO(outcome.worst_case, " rel err ", outcome.worst_rel);
    CHECK(outcome.failures == 0);
    CHECK(outcome.instances > 0);
  }

  TEST_CASE("finite differences through the networks, reduced battery") {
    auto outcome = battery::fd_network_battery(2, 23);
    INFO(outcome.worst_case, " rel err ", outcome.worst_rel);
    CHECK(outcome.failures == 0);
  }

  TEST_CASE("a deliberately wrong gradient fails the checker") {
    // Forward x^2 paired with backward 3x instead of 2x. If the checker
    // accepted this, every other battery result would be meaningless.
    auto broken_square = [](const Tensor<double>& x) {
      std::vector<double> out(x.data().size());
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] * x.data()[i];
      auto xi = x.impl();
      return ad::detail::make_op<double>(
          "broken_square", x.shape(), std::move(out), {xi},
          [xi](ad::TensorImpl<double>& self) {
            ad::detail::ensure_grad(*xi);
            for (std::size_t i = 0; i < self.grad.size(); ++i)
              xi->grad[i] += self.grad[i] * 3.0 * xi->data[i];
          });
    };
    auto x = Tensor<double>::from({0.7, -1.3, 2.1}, {3}, true);
    auto f = [&](const std::vector<Tensor<double>>& p) { return ad::sum(broken_square(p[0])); };
    auto report = ad::grad_check(f, {x});
    CHECK_FALSE(report.pass);
    CHECK(report.max_rel_err > 0.1);
  }

  TEST_CASE("fan-out accumulates gradients from every consumer") {
    auto y = Tensor<double>::from({1.5, -0.5}, {2}, true);
    // z = sum(y*y + y): dz/dy = 2y + 1.
    auto z = ad::sum(ad::add(ad::mul(y, y), y));
    ad::backward(z);
    REQUIRE(y.has_grad());
    CHECK(y.grad()[0] == doctest::Approx(4.0));
    CHECK(y.grad()[1] == doctest::Approx(0.0));

    // The same tensor twice in one op: d(x+x)/dx = 2.
    auto x = Tensor<double>::from({3.0}, {1}, true);
    ad::backward(ad::sum(ad::add(x, x)));
    CHECK(x.grad()[0] == doctest::Approx(2.0));
  }

  TEST_CASE("diamond graph") {
    // x -> (sin, cos) -> product; d/dx sin(x)cos(x) = cos(2x).
    auto x = Tensor<double>::from({0.3, 1.1, -0.7}, {3}, true);
    ad::backward(ad::sum(ad::mul(ad::sin(x), ad::cos(x))));
    for (int i = 0; i < 3; ++i)
      CHECK(x.grad()[i] == doctest::Approx(std::cos(2 * x.data()[i])).epsilon(1e-9));
  }

  TEST_CASE("backward requires a scalar") {
    auto x = Tensor<double>::from({1, 2}, {2}, true);
    CHECK_THROWS_AS(ad::backward(ad::add(x, x)), ad::ShapeError);
  }

  TEST_CASE("constants stay out of the tape") {
    auto x = Tensor<double>::from({1.0, 2.0}, {2}, true);
    auto c = Tensor<double>::from({5.0, 5.0}, {2}, false);
    auto z = ad::sum(ad::mul(x, c));
    ad::backward(z);
    CHECK_FALSE(c.has_grad());
    CHECK(x.grad() == std::vector<double>{5.0, 5.0});
  }

  TEST_CASE("grad_check rejects misuse") {
    auto x = Tensor<double>::from({1.0}, {1}, false);
    auto f = [](const std::vector<Tensor<double>>& p) { return ad::sum(p[0]); };
    CHECK_THROWS_AS(ad::grad_check(f, {x}), ad::ShapeError);  // not a gradient leaf
    auto y = Tensor<double>::from({1.0, 2.0}, {2}, true);
    auto vector_valued = [](const std::vector<Tensor<double>>& p) { return p[0]; };
    CHECK_THROWS_AS(ad::grad_check(vector_valued, {y}), ad::ShapeError);
  }
}
