#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "oracles.hpp"
#include "pcbls/rng.hpp"
#include "pcbls/soft_labels.hpp"

using namespace pcbls;

namespace {

LabelMap random_map(Rng& rng, std::size_t h, std::size_t w, std::size_t k) {
  std::vector<int> idx(h * w);
  for (int& v : idx) v = static_cast<int>(rng.below(k));
  return LabelMap(h, w, k, idx);
}

} // namespace

TEST_SUITE("soft_labels") {
  TEST_CASE("uls examples") {
    const auto same = uls({3, 8}, 0.0);
    for (std::size_t c = 0; c < 8; ++c) CHECK(same.probs[c] == (c == 3 ? 1.0 : 0.0));

    const auto half = uls({2, 8}, 0.5);
    for (std::size_t c = 0; c < 8; ++c) CHECK(half.probs[c] == doctest::Approx(c == 2 ? 0.5625 : 0.0625));

    const auto two = uls({0, 2}, 0.1);
    CHECK(two.probs[0] == doctest::Approx(0.95));
    CHECK(two.probs[1] == doctest::Approx(0.05));
  }

  TEST_CASE("uls bounds and monotonicity") {
    for (double eps = 0.0; eps < 1.0; eps += 0.05) {
      const auto p = uls({1, 5}, eps);
      CHECK(*std::min_element(p.probs.begin(), p.probs.end()) == doctest::Approx(eps / 5));
      CHECK(*std::max_element(p.probs.begin(), p.probs.end()) == doctest::Approx(1 - eps + eps / 5));
      if (eps + 0.05 < 1.0) CHECK(uls({1, 5}, eps + 0.05).probs[1] < p.probs[1]);
    }
  }

  TEST_CASE("uls commutes with relabeling") {
    const auto a = uls({1, 4}, 0.3);
    const auto b = uls({3, 4}, 0.3);
    CHECK(a.probs[1] == b.probs[3]);
    CHECK(a.probs[3] == b.probs[1]);
    CHECK(a.probs[0] == b.probs[0]);
  }

  TEST_CASE("uls rejects bad arguments") {
    CHECK_THROWS_AS(uls({0, 4}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(uls({0, 4}, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(uls({4, 4}, 0.1), std::invalid_argument);
  }

  TEST_CASE("multi-label smoothing") {
    const std::vector<int> t{1, 0, 1};
    const auto s = uls_multilabel(t, 0.2);
    CHECK(s[0] == doctest::Approx(0.9));
    CHECK(s[1] == doctest::Approx(0.1));
    CHECK(s[2] == doctest::Approx(0.9));
  }

  TEST_CASE("label map validation") {
    CHECK_THROWS_AS(LabelMap(1, 2, 2, {0, 2}), std::invalid_argument);
    CHECK_THROWS_AS(LabelMap(1, 2, 2, {0}), std::invalid_argument);
  }

  TEST_CASE("svls of a uniform map is one-hot") {
    const LabelMap labels(4, 4, 3, std::vector<int>(16, 2));
    const auto s = svls(labels, 1.7);
    for (std::size_t y = 0; y < 4; ++y)
      for (std::size_t x = 0; x < 4; ++x)
        for (std::size_t c = 0; c < 3; ++c) CHECK(std::abs(s(c, y, x) - (c == 2 ? 1.0 : 0.0)) < 1e-12);
  }

  TEST_CASE("narrow svls is one-hot") {
    Rng rng(2);
    const auto labels = random_map(rng, 6, 5, 4);
    const auto s = svls(labels, 0.05, 3);
    for (std::size_t p = 0; p < 30; ++p)
      for (std::size_t c = 0; c < 4; ++c) CHECK(std::abs(s.channel(c)[p] - (labels[p] == int(c) ? 1.0 : 0.0)) < 1e-9);
  }

  TEST_CASE("1x2 two-class map with replicate padding") {
    // Column weights of the 3x3 sigma=1 kernel are .27406/.45186/.27406; pixel 0 sees
    // two class-0 columns (its own and the clamped left one).
    const LabelMap labels(1, 2, 2, {0, 1});
    const auto s = svls(labels, 1.0, 3);
    CHECK(std::abs(s(0, 0, 0) - 0.72592) < 1e-4);
    CHECK(std::abs(s(1, 0, 0) - 0.27408) < 1e-4);
    const auto ref = oracle::uls_svls(labels, 0.0, 1.0, 3);
    CHECK(std::abs(s(0, 0, 0) - ref[0][0]) < 1e-12);
  }

  TEST_CASE("svls and uls_svls match the reference") {
    Rng rng(17);
    for (int trial = 0; trial < 30; ++trial) {
      const std::size_t h = 1 + rng.below(8), w = 1 + rng.below(8), k = 2 + rng.below(4);
      const auto labels = random_map(rng, h, w, k);
      const double sigma = rng.uniform(0.2, 2.0);
      const double eps = rng.uniform(0.0, 0.9);
      const auto a = svls(labels, sigma, 3);
      const auto b = uls_svls(labels, eps, sigma, 3);
      const auto ra = oracle::uls_svls(labels, 0.0, sigma, 3);
      const auto rb = oracle::uls_svls(labels, eps, sigma, 3);
      for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t p = 0; p < h * w; ++p) {
          CHECK(std::abs(a.channel(c)[p] - ra[c][p]) < 1e-12);
          CHECK(std::abs(b.channel(c)[p] - rb[c][p]) < 1e-12);
        }
      }
    }
  }

  TEST_CASE("uls_svls degenerate cases") {
    Rng rng(4);
    const auto labels = random_map(rng, 5, 5, 3);
    const auto plain = svls(labels, 0.9);
    const auto fused = uls_svls(labels, 0.0, 0.9);
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t p = 0; p < 25; ++p) CHECK(plain.channel(c)[p] == doctest::Approx(fused.channel(c)[p]));

    const auto delta = uls_svls(labels, 0.6, 0.05);
    const auto per_pixel = uls_map(labels, 0.6);
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t p = 0; p < 25; ++p) CHECK(std::abs(delta.channel(c)[p] - per_pixel.channel(c)[p]) < 1e-9);
  }

  TEST_CASE("5x5 fused case at the segmentation preset") {
    Rng rng(9);
    const auto labels = random_map(rng, 5, 5, 3);
    const auto out = uls_svls(labels, 0.6, 0.9, 3);
    const auto ref = oracle::uls_svls(labels, 0.6, 0.9, 3);
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t p = 0; p < 25; ++p) CHECK(std::abs(out.channel(c)[p] - ref[c][p]) < 1e-12);
  }

  TEST_CASE("interior pixels of a wide region stay one-hot") {
    std::vector<int> idx(8 * 8, 0);
    for (std::size_t y = 0; y < 8; ++y)
      for (std::size_t x = 4; x < 8; ++x) idx[y * 8 + x] = 1;
    const auto s = svls(LabelMap(8, 8, 2, idx), 1.0, 3);
    for (std::size_t y = 0; y < 8; ++y) {
      CHECK(std::abs(s(0, y, 0) - 1.0) < 1e-9);
      CHECK(std::abs(s(0, y, 2) - 1.0) < 1e-9);
      CHECK(s(0, y, 3) < 1.0 - 1e-3);
      CHECK(std::abs(s(1, y, 7) - 1.0) < 1e-9);
    }
  }

  TEST_CASE("outputs are distributions") {
    Rng rng(21);
    const auto labels = random_map(rng, 7, 6, 5);
    const auto s = uls_svls(labels, 0.3, 1.4, 5);
    for (std::size_t p = 0; p < 42; ++p) {
      double total = 0.0;
      for (std::size_t c = 0; c < 5; ++c) {
        CHECK(s.channel(c)[p] >= 0.0);
        CHECK(s.channel(c)[p] <= 1.0);
        total += s.channel(c)[p];
      }
      CHECK(std::abs(total - 1.0) < 1e-6);
    }
  }
}
