#include <doctest.h>

#include <cmath>
#include <limits>

#include "pref/ops.hpp"
#include "test_util.hpp"

using namespace pref;
using ad::Tensor;

TEST_SUITE("tensor_ops") {
  TEST_CASE("elementwise values") {
    auto a = Tensor<float>::from({1, 2}, {2});
    auto b = Tensor<float>::from({3, 4}, {2});
    auto sum = ad::add(a, b);
    CHECK(sum.data() == std::vector<float>{4, 6});
    CHECK(ad::sub(b, a).data() == std::vector<float>{2, 2});
    CHECK(ad::mul(a, b).data() == std::vector<float>{3, 8});
    CHECK(ad::sqdiff(a, b).data() == std::vector<float>{4, 4});
    CHECK(ad::neg(a).data() == std::vector<float>{-1, -2});
    CHECK(ad::scale(a, 2.5f).data() == std::vector<float>{2.5f, 5.0f});
    CHECK(ad::sigmoid(Tensor<float>::from({0}, {1})).data()[0] == doctest::Approx(0.5));
    CHECK(ad::relu(Tensor<float>::from({-3, 2}, {2})).data() == std::vector<float>{0, 2});
    auto e = ad::exp(Tensor<double>::from({0.0, 1.0}, {2}));
    CHECK(e.data()[0] == doctest::Approx(1.0));
    CHECK(e.data()[1] == doctest::Approx(std::exp(1.0)));
  }

  TEST_CASE("broadcast across the leading batch dimension") {
    auto a = Tensor<double>::from({1, 2, 3, 4, 5, 6}, {3, 2}, true);
    auto row = Tensor<double>::from({10, 20}, {1, 2}, true);
    auto out = ad::add(a, row);
    CHECK(out.shape() == ad::Shape{3, 2});
    CHECK(out.data() == std::vector<double>{11, 22, 13, 24, 15, 26});

    // Gradient of the broadcast side sums over the batch rows.
    ad::backward(ad::sum(out));
    CHECK(row.grad() == std::vector<double>{3, 3});
    CHECK(a.grad() == std::vector<double>(6, 1.0));

    auto dropped = Tensor<double>::from({10, 20}, {2});
    CHECK(ad::add(a, dropped).data() == std::vector<double>{11, 22, 13, 24, 15, 26});

    CHECK_THROWS_AS(ad::add(a, Tensor<double>::from({1, 2, 3}, {3})), ad::ShapeError);
  }

  TEST_CASE("matmul values") {
    auto a = Tensor<double>::from({1, 2, 3, 4, 5, 6}, {2, 3});
    auto b = Tensor<double>::from({7, 8, 9, 10, 11, 12}, {3, 2});
    auto c = ad::matmul(a, b);
    CHECK(c.shape() == ad::Shape{2, 2});
    CHECK(c.data() == std::vector<double>{58, 64, 139, 154});
    CHECK_THROWS_AS(ad::matmul(a, a), ad::ShapeError);
  }

  TEST_CASE("reductions") {
    auto x = Tensor<double>::from({1, 2, 3, 4}, {2, 2}, true);
    CHECK(ad::sum(x).item() == 10.0);
    CHECK(ad::mean(x).item() == 2.5);
    ad::backward(ad::sum(x));
    CHECK(x.grad() == std::vector<double>{1, 1, 1, 1});
    x.zero_grad();
    ad::backward(ad::mean(x));
    CHECK(x.grad() == std::vector<double>(4, 0.25));
  }

  TEST_CASE("concat slice repeat reshape round trips") {
    auto a = Tensor<double>::from({1, 2, 3, 4}, {2, 2});
    auto b = Tensor<double>::from({5, 6}, {2, 1});
    auto cat = ad::concat_cols<double>({a, b});
    CHECK(cat.shape() == ad::Shape{2, 3});
    CHECK(cat.data() == std::vector<double>{1, 2, 5, 3, 4, 6});
    CHECK(ad::slice_cols(cat, 0, 2).data() == a.data());
    CHECK(ad::slice_cols(cat, 2, 1).data() == b.data());
    CHECK_THROWS_AS(ad::slice_cols(cat, 2, 2), ad::ShapeError);

    auto rep = ad::repeat_rows(Tensor<double>::from({7, 8}, {1, 2}), 3);
    CHECK(rep.shape() == ad::Shape{3, 2});
    CHECK(rep.data() == std::vector<double>{7, 8, 7, 8, 7, 8});

    auto row = Tensor<double>::from({7, 8}, {1, 2}, true);
    ad::backward(ad::sum(ad::mul(ad::repeat_rows(row, 3),
                                 Tensor<double>::from({1, 2, 3, 4, 5, 6}, {3, 2}))));
    CHECK(row.grad() == std::vector<double>{9, 12});

    CHECK(ad::reshape(a, {4}).shape() == ad::Shape{4});
    CHECK_THROWS_AS(ad::reshape(a, {3}), ad::ShapeError);
  }

  TEST_CASE("clamp passes gradient strictly inside the range") {
    auto x = Tensor<double>::from({-2.0, -1.0, 0.0, 1.0, 2.0}, {5}, true);
    auto y = ad::clamp(x, -1.0, 1.0);
    CHECK(y.data() == std::vector<double>{-1, -1, 0, 1, 1});
    ad::backward(ad::sum(y));
    CHECK(x.grad() == std::vector<double>{0, 0, 1, 0, 0});
    CHECK_THROWS_AS(ad::clamp(x, 1.0, -1.0), ad::ShapeError);
  }

  TEST_CASE("composite weights telescope") {
    // Two rays, three samples. Opacity must equal 1 - prod(1 - alpha)
    // exactly, and fully transparent rays composite to black.
    auto sd = Tensor<double>::from({0.3, 1.1, 0.6, 0, 0, 0}, {2, 3}, true);
    std::vector<double> cols(18, 0.0);
    for (int s = 0; s < 3; ++s) {
      cols[3 * s + 0] = 0.9;
      cols[3 * s + 1] = 0.4;
      cols[3 * s + 2] = 0.2;
    }
    auto colors = Tensor<double>::from(cols, {2, 9});
    auto out = ad::composite(sd, colors);
    REQUIRE(out.shape() == ad::Shape{2, 4});

    const double a0 = 1 - std::exp(-0.3), a1 = 1 - std::exp(-1.1), a2 = 1 - std::exp(-0.6);
    const double opacity = 1 - (1 - a0) * (1 - a1) * (1 - a2);
    CHECK(out.data()[3] == doctest::Approx(opacity).epsilon(1e-12));
    // Constant color: composited value is color * opacity.
    CHECK(out.data()[0] == doctest::Approx(0.9 * opacity).epsilon(1e-12));
    CHECK(out.data()[1] == doctest::Approx(0.4 * opacity).epsilon(1e-12));

    CHECK(out.data()[4] == 0.0);
    CHECK(out.data()[5] == 0.0);
    CHECK(out.data()[7] == 0.0);

    // An effectively opaque first sample hides everything behind it.
    auto heavy = ad::composite(Tensor<double>::from({40.0, 1.0}, {1, 2}),
                               Tensor<double>::from({0.1, 0.2, 0.3, 0.9, 0.9, 0.9}, {1, 6}));
    CHECK(heavy.data()[0] == doctest::Approx(0.1).epsilon(1e-8));
    CHECK(heavy.data()[3] == doctest::Approx(1.0).epsilon(1e-8));
  }

  TEST_CASE("bilinear_sample convention") {
    // 2x3 single-channel image; coords are (x, y) with (0,0) at the
    // top-left pixel center.
    auto img = Tensor<double>::from({1, 2, 3, 4, 5, 6}, {2, 3, 1});
    auto at = [&](double x, double y) {
      auto c = Tensor<double>::from({x, y}, {1, 2});
      return ad::bilinear_sample(img, c).data()[0];
    };
    CHECK(at(0, 0) == 1.0);
    CHECK(at(2, 0) == 3.0);
    CHECK(at(0, 1) == 4.0);
    CHECK(at(1, 0.5) == doctest::Approx(3.5));
    CHECK(at(0.5, 0) == doctest::Approx(1.5));
    // Out-of-range lookups clamp to the edge.
    CHECK(at(-3, 0) == 1.0);
    CHECK(at(9, 9) == 6.0);
    CHECK_THROWS_AS(ad::bilinear_sample(img, Tensor<double>::from({0, 0, 0}, {1, 3})),
                    ad::ShapeError);
  }

  TEST_CASE("strict numerics rejects non-finite values") {
    const bool prev = ad::strict_numerics();
    ad::set_strict_numerics(true);
    auto inf = Tensor<float>::from({std::numeric_limits<float>::infinity()}, {1});
    CHECK_THROWS_AS(ad::scale(inf, 2.0f), ad::NumericError);
    // Overflow shows up when the poisoned value feeds the next op.
    auto overflow = ad::exp(Tensor<float>::from({90.0f}, {1}));
    CHECK_THROWS_AS(ad::scale(overflow, 1.0f), ad::NumericError);
    ad::set_strict_numerics(false);
    CHECK_NOTHROW(ad::scale(inf, 2.0f));
    ad::set_strict_numerics(prev);
  }

  TEST_CASE("no-grad forwards match gradient-enabled forwards bitwise") {
    Rng rng(3);
    auto x = testutil::rand_tensor<float>(rng, {4, 3}, -2, 2, true);
    auto w = testutil::rand_tensor<float>(rng, {3, 2}, -1, 1, true);
    auto run = [&]() { return ad::sigmoid(ad::matmul(ad::relu(x), w)); };
    auto with_grad = run();
    CHECK(with_grad.requires_grad());
    {
      ad::NoGradGuard guard;
      auto without = run();
      CHECK_FALSE(without.requires_grad());
      CHECK(testutil::bitwise_equal(with_grad, without));
    }
  }

  TEST_CASE("detach blocks gradient flow but shares values") {
    auto x = Tensor<double>::from({2.0, 3.0}, {2}, true);
    auto d = x.detach();
    CHECK(d.data() == x.data());
    CHECK_FALSE(d.requires_grad());
    auto loss = ad::sum(ad::mul(x, d));  // d is a constant copy
    ad::backward(loss);
    CHECK(x.grad() == std::vector<double>{2.0, 3.0});
  }

  TEST_CASE("scalar item and shape errors") {
    CHECK(Tensor<double>::scalar(4.5).item() == 4.5);
    CHECK_THROWS_AS(Tensor<double>::from({1, 2}, {2}).item(), ad::ShapeError);
    CHECK_THROWS_AS(Tensor<double>::from({1, 2}, {3}), ad::ShapeError);
  }
}
