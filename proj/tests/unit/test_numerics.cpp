#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "oracles.hpp"
#include "pcbls/numerics.hpp"
#include "pcbls/rng.hpp"

using namespace pcbls;

TEST_SUITE("numerics") {
  TEST_CASE("single-cell kernel is one") {
    const auto k = gaussian_kernel2d(1, 0.3);
    REQUIRE(k.size() == 1);
    CHECK(k(0, 0) == 1.0);
  }

  TEST_CASE("3x3 sigma 1 kernel weights") {
    const auto k = gaussian_kernel2d(3, 1.0);
    CHECK(std::abs(k(1, 1) - 0.20418) < 1e-4);
    CHECK(std::abs(k(0, 1) - 0.12384) < 1e-4);
    CHECK(std::abs(k(0, 0) - 0.07511) < 1e-4);
    double total = 0.0;
    for (double v : k.weights()) total += v;
    CHECK(std::abs(total - 1.0) < 1e-12);
  }

  TEST_CASE("narrow kernel approaches a delta") {
    const auto k = gaussian_kernel2d(3, 0.05);
    CHECK(k(1, 1) >= 1.0 - 1e-12);
    for (std::size_t r = 0; r < 3; ++r)
      for (std::size_t c = 0; c < 3; ++c)
        if (r != 1 || c != 1) CHECK(k(r, c) <= 1e-12);
  }

  TEST_CASE("kernel is symmetric") {
    const auto k = gaussian_kernel2d(5, 1.3);
    for (std::size_t r = 0; r < 5; ++r) {
      for (std::size_t c = 0; c < 5; ++c) {
        CHECK(k(r, c) == k(4 - r, c));
        CHECK(k(r, c) == k(r, 4 - c));
        CHECK(k(r, c) == k(c, r));
      }
    }
  }

  TEST_CASE("kernel argument errors") {
    CHECK_THROWS_AS(gaussian_kernel2d(4, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(gaussian_kernel2d(3, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(gaussian_kernel2d(3, -1.0), std::invalid_argument);
  }

  TEST_CASE("identity kernel leaves a map unchanged") {
    Rng rng(3);
    std::vector<double> values(20);
    for (double& v : values) v = rng.uniform();
    const Tensor map({4, 5}, values);
    CHECK(conv2d_same(map, gaussian_kernel2d(1, 1.0)) == map);
  }

  TEST_CASE("constant map stays constant") {
    const Tensor map({6, 3}, 0.37);
    const auto out = conv2d_same(map, gaussian_kernel2d(5, 2.0));
    for (double v : out.data()) CHECK(std::abs(v - 0.37) < 1e-12);
  }

  TEST_CASE("convolution matches the triple-loop reference") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> values(25);
      for (double& v : values) v = rng.uniform();
      const auto out = conv2d_same(Tensor({5, 5}, values), gaussian_kernel2d(3, 1.0));
      const auto ref = oracle::conv_replicate(values, 5, 5, oracle::gaussian(3, 1.0), 3);
      for (std::size_t i = 0; i < 25; ++i) CHECK(std::abs(out.data()[i] - ref[i]) < 1e-12);
    }
  }

  TEST_CASE("channel-wise convolution keeps per-pixel sums") {
    Rng rng(5);
    const std::size_t h = 6, w = 7, classes = 4;
    std::vector<std::vector<double>> planes(classes, std::vector<double>(h * w));
    for (std::size_t p = 0; p < h * w; ++p) {
      double total = 0.0;
      for (auto& plane : planes) total += plane[p] = rng.uniform();
      for (auto& plane : planes) plane[p] /= total;
    }
    const auto kernel = gaussian_kernel2d(3, 0.9);
    std::vector<std::vector<double>> out(classes, std::vector<double>(h * w));
    for (std::size_t c = 0; c < classes; ++c) conv2d_same(planes[c], out[c], h, w, kernel);
    for (std::size_t p = 0; p < h * w; ++p) {
      double total = 0.0;
      for (const auto& plane : out) total += plane[p];
      CHECK(std::abs(total - 1.0) < 1e-9);
    }
  }

  TEST_CASE("softmax examples") {
    std::vector<double> out(4);
    softmax(std::vector<double>{0, 0, 0, 0}, out);
    for (double v : out) CHECK(v == doctest::Approx(0.25));

    std::vector<double> two(2);
    softmax(std::vector<double>{2, 0}, two);
    CHECK(std::abs(two[0] - 0.88080) < 1e-5);
    CHECK(std::abs(two[1] - 0.11920) < 1e-5);

    softmax(std::vector<double>{1000, 0}, two);
    CHECK(std::isfinite(two[0]));
    CHECK(two[0] == doctest::Approx(1.0));
    CHECK(two[1] < 1e-300);
  }

  TEST_CASE("softmax ignores a constant shift") {
    Rng rng(8);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> z(6), shifted(6), a(6), b(6);
      const double shift = rng.uniform(-50, 50);
      for (std::size_t i = 0; i < z.size(); ++i) {
        z[i] = rng.uniform(-5, 5);
        shifted[i] = z[i] + shift;
      }
      softmax(z, a);
      softmax(shifted, b);
      for (std::size_t i = 0; i < z.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-12);
    }
  }

  TEST_CASE("softmax over tensor rows") {
    const Tensor logits({2, 2}, std::vector<double>{2, 0, 0, 2});
    const auto p = softmax(logits, 1);
    CHECK(std::abs(p.at(0, 0) - 0.88080) < 1e-5);
    CHECK(std::abs(p.at(1, 1) - 0.88080) < 1e-5);
    const auto q = softmax(logits, 0);
    CHECK(std::abs(q.at(0, 0) - 0.88080) < 1e-5);
    CHECK(std::abs(q.at(1, 0) - 0.11920) < 1e-5);
  }

  TEST_CASE("tensor shape checks") {
    CHECK_THROWS_AS(Tensor({2, 3}, std::vector<double>(5)), std::invalid_argument);
    CHECK(Tensor({2, 3}).all_finite());
    CHECK_FALSE(Tensor({1}, std::vector<double>{NAN}).all_finite());
  }

  TEST_CASE("log_sum_exp and argmax") {
    CHECK(log_sum_exp(std::vector<double>{0, 0}) == doctest::Approx(std::log(2.0)));
    CHECK(log_sum_exp(std::vector<double>{1000, 1000}) == doctest::Approx(1000 + std::log(2.0)));
    CHECK(argmax(std::vector<double>{1, 3, 3, 2}) == 1);
  }
}
