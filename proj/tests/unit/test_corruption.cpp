#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "fixtures.hpp"
#include "pcbls/corruption.hpp"
#include "pcbls/persistence.hpp"
#include "pcbls/rng.hpp"

using namespace pcbls;
namespace fs = std::filesystem;

namespace {

Image random_image(Rng& rng, std::size_t h, std::size_t w, std::size_t c) {
  Image img{h, w, c, std::vector<double>(h * w * c)};
  for (double& v : img.pixels) v = rng.uniform();
  return img;
}

LabeledDataset tiny_rgb_set(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  LabeledDataset d;
  d.channels = 3;
  d.height = 6;
  d.width = 5;
  d.num_classes = 3;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x(d.input_size());
    for (double& v : x) v = rng.uniform();
    d.inputs.push_back(x);
    d.labels.push_back(static_cast<int>(i % 3));
  }
  return d;
}

} // namespace

TEST_SUITE("corruption") {
  TEST_CASE("identity parameters leave images unchanged") {
    Rng rng(50);
    const auto img = random_image(rng, 9, 11, 3);
    for (CorruptionKind kind : all_corruption_kinds()) {
      CAPTURE(to_string(kind));
      const auto out = corrupt_with(img, kind, identity_params(kind), 123);
      for (std::size_t i = 0; i < img.pixels.size(); ++i) CHECK(std::abs(out.pixels[i] - img.pixels[i]) < 1e-12);
    }
  }

  TEST_CASE("gaussian noise statistics at severity 1") {
    Image img{64, 64, 1, std::vector<double>(64 * 64, 0.5)};
    const auto out = corrupt(img, {CorruptionKind::gaussian_noise, 1, 99});
    double mean = 0.0;
    for (double v : out.pixels) mean += v;
    mean /= static_cast<double>(out.pixels.size());
    double var = 0.0;
    for (double v : out.pixels) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(out.pixels.size() - 1));
    CHECK(std::abs(mean - 0.5) < 0.01);
    CHECK(std::abs(sd - 0.08) < 0.01);
    CHECK(severity_params(CorruptionKind::gaussian_noise, 1).primary == 0.08);
  }

  TEST_CASE("pixelate severity 5 gives 8x8 blocks") {
    Rng rng(51);
    const auto img = random_image(rng, 16, 16, 1);
    const auto out = corrupt(img, {CorruptionKind::pixelate, 5, 1});
    for (std::size_t y = 0; y < 16; ++y)
      for (std::size_t x = 0; x < 16; ++x) CHECK(out.at(y, x, 0) == out.at(y / 8 * 8, x / 8 * 8, 0));
    CHECK(out.at(0, 0, 0) != out.at(8, 8, 0));
  }

  TEST_CASE("outputs stay in range and replay") {
    Rng rng(52);
    const auto img = random_image(rng, 12, 10, 3);
    for (CorruptionKind kind : all_corruption_kinds()) {
      for (int s = 1; s <= kSeverityLevels; ++s) {
        const CorruptionSpec spec{kind, s, 7};
        const auto out = corrupt(img, spec);
        CHECK(out == corrupt(img, spec));
        CHECK(out.height == img.height);
        CHECK(out.width == img.width);
        for (double v : out.pixels) {
          CHECK(v >= 0.0);
          CHECK(v <= 1.0);
        }
      }
    }
  }

  TEST_CASE("severity table is monotone") {
    for (CorruptionKind kind : all_corruption_kinds()) {
      CAPTURE(to_string(kind));
      for (int s = 1; s < kSeverityLevels; ++s) {
        CHECK(corruption_strength(kind, severity_params(kind, s)) <
              corruption_strength(kind, severity_params(kind, s + 1)));
      }
      CHECK(corruption_strength(kind, identity_params(kind)) < corruption_strength(kind, severity_params(kind, 1)));
    }
  }

  TEST_CASE("noise magnitude grows with severity") {
    Rng rng(53);
    const auto img = random_image(rng, 16, 16, 1);
    for (auto kind : {CorruptionKind::gaussian_noise, CorruptionKind::shot_noise, CorruptionKind::impulse_noise}) {
      double previous = 0.0;
      for (int s = 1; s <= kSeverityLevels; ++s) {
        double total = 0.0;
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
          const auto out = corrupt(img, {kind, s, seed});
          for (std::size_t i = 0; i < img.pixels.size(); ++i) total += std::abs(out.pixels[i] - img.pixels[i]);
        }
        CHECK(total > previous);
        previous = total;
      }
    }
  }

  TEST_CASE("bad severities are rejected") {
    Rng rng(54);
    const auto img = random_image(rng, 4, 4, 1);
    CHECK_THROWS_AS(corrupt(img, {CorruptionKind::fog, 0, 1}), std::invalid_argument);
    CHECK_THROWS_AS(corrupt(img, {CorruptionKind::fog, 6, 1}), std::invalid_argument);
    CHECK_THROWS_AS(corruption_kind_from_string("snow"), std::invalid_argument);
  }

  TEST_CASE("corrupt_dataset counts and replay") {
    const auto data = tiny_rgb_set(2, 5);
    const auto dir = fixture::temp_dir("corrupt_a");
    CHECK(corrupt_dataset(data, {}, std::vector<int>{1, 2, 3, 4, 5}, 9, dir).empty());

    const std::vector<CorruptionKind> kinds{CorruptionKind::gaussian_noise, CorruptionKind::glass_blur,
                                            CorruptionKind::jpeg_like};
    const std::vector<int> severities{1, 2, 3, 4, 5};
    const auto rows = corrupt_dataset(data, kinds, severities, 9, dir);
    CHECK(rows.size() == 30);
    CHECK(read_manifest(dir / "manifest.csv") == rows);

    const auto again = fixture::temp_dir("corrupt_b");
    CHECK(corrupt_dataset(data, kinds, severities, 9, again) == rows);
    for (const auto& row : rows) CHECK(read_file(dir / row.path) == read_file(again / row.path));
    CHECK(read_file(dir / "manifest.csv") == read_file(again / "manifest.csv"));
  }

  TEST_CASE("per-image seeds make order irrelevant") {
    const auto data = tiny_rgb_set(4, 6);
    const auto dir = fixture::temp_dir("corrupt_order");
    const std::vector<CorruptionKind> kinds{CorruptionKind::shot_noise};
    const std::vector<int> severities{3};
    corrupt_dataset(data, kinds, severities, 11, dir);
    // Each file depends only on its own image and derived seed.
    const Image clean = image_from_planes(data.inputs[3], 3, 6, 5);
    const Image expect = corrupt(clean, {CorruptionKind::shot_noise, 3, corruption_seed(11, CorruptionKind::shot_noise, 3, 3)});
    CHECK(read_pnm(dir / "shot_noise/3/000003.ppm") == decode_pnm(encode_pnm(expect)));
  }

  TEST_CASE("robustness report shape and trivial models") {
    LabeledDataset one_class;
    one_class.width = 4;
    one_class.num_classes = 2;
    Rng rng(55);
    for (int i = 0; i < 20; ++i) {
      std::vector<double> x(4);
      for (double& v : x) v = rng.uniform();
      one_class.inputs.push_back(x);
      one_class.labels.push_back(0);
    }
    const Model constant(Architecture::linear_softmax, {4, 2}, {0, 0, 0, 0, 0, 0, 0, 0, 1, 0});
    const auto kinds = all_corruption_kinds();
    const auto table = robustness_report(constant, one_class, kinds, 3);
    CHECK(table.rows.size() == kinds.size());
    CHECK(table.clean_accuracy == 100.0);
    for (const auto& row : table.rows) {
      for (double v : row.per_severity) CHECK(v == 100.0);
      CHECK(row.mean == 100.0);
    }
    const auto csv = robustness_csv(table);
    CHECK(csv.rfind("kind,severity_1,severity_2,severity_3,severity_4,severity_5,mean\n", 0) == 0);

    const auto dir = fixture::temp_dir("robust_manifest");
    const std::vector<CorruptionKind> two{CorruptionKind::fog, CorruptionKind::contrast};
    const std::vector<int> all_sev{1, 2, 3, 4, 5};
    const auto rows = corrupt_dataset(one_class, two, all_sev, 3, dir);
    const auto from_files = robustness_report(constant, rows, dir, one_class);
    CHECK(from_files.rows.size() == 2);
    CHECK(from_files.rows[1].mean == 100.0);
  }

  TEST_CASE("random guessing scores about 100/K") {
    LabeledDataset data;
    data.width = 4;
    data.num_classes = 4;
    Rng rng(56);
    for (int i = 0; i < 4000; ++i) {
      std::vector<double> x(4);
      for (double& v : x) v = rng.uniform();
      data.inputs.push_back(x);
      data.labels.push_back(static_cast<int>(rng.below(4)));
    }
    const auto model = Model::linear_softmax(4, 4, 8);
    const std::vector<CorruptionKind> kinds{CorruptionKind::gaussian_noise, CorruptionKind::brightness,
                                            CorruptionKind::pixelate};
    const auto table = robustness_report(model, data, kinds, 4);
    for (const auto& row : table.rows)
      for (double v : row.per_severity) CHECK(std::abs(v - 25.0) <= 3.0);
  }
}
