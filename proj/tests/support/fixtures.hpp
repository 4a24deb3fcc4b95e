#pragma once

// Random models, batches and targets for gradient checks.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pcbls/losses.hpp"
#include "pcbls/models.hpp"
#include "pcbls/rng.hpp"
#include "pcbls/soft_labels.hpp"

namespace fixture {

struct GradCase {
  pcbls::Model model;
  std::vector<std::vector<double>> storage;
  pcbls::Batch batch;
  pcbls::BatchTargets targets;
  pcbls::LossKind kind;
};

inline std::vector<double> random_distribution(pcbls::Rng& rng, std::size_t k) {
  std::vector<double> p(k);
  double total = 0.0;
  for (double& v : p) total += v = rng.uniform(0.05, 1.0);
  for (double& v : p) v /= total;
  return p;
}

// Random parameters in [-scale, scale].
inline void scramble(pcbls::Model& model, pcbls::Rng& rng, double scale = 1.0) {
  for (double& p : model.params()) p = rng.uniform(-scale, scale);
}

inline GradCase vector_case(pcbls::Architecture arch, pcbls::LossKind kind, pcbls::Rng& rng) {
  const std::size_t d = 2 + rng.below(4), k = 2 + rng.below(4), n = 1 + rng.below(3);
  pcbls::Model model = arch == pcbls::Architecture::mlp ? pcbls::Model::mlp(d, 2 + rng.below(4), k, rng.next_u64())
                                                        : pcbls::Model::linear_softmax(d, k, rng.next_u64());
  scramble(model, rng);
  GradCase c{model, {}, {}, {}, kind};
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x(d);
    for (double& v : x) v = rng.uniform(-1, 1);
    c.storage.push_back(x);
    if (kind == pcbls::LossKind::soft_ce) {
      c.targets.vectors.push_back(random_distribution(rng, k));
    } else {
      std::vector<double> t(k);
      for (double& v : t) v = rng.uniform();
      c.targets.vectors.push_back(t);
    }
  }
  for (const auto& x : c.storage) c.batch.inputs.emplace_back(x);
  return c;
}

inline GradCase pixel_case(pcbls::Rng& rng, bool with_masks = true) {
  const std::size_t channels = 1 + rng.below(3), classes = 2 + rng.below(2);
  const std::size_t h = 2 + rng.below(3), w = 2 + rng.below(3), n = 1 + rng.below(2);
  pcbls::Model model = pcbls::Model::tiny_fcn(channels, 2 + rng.below(3), 2 + rng.below(3), classes, rng.next_u64());
  scramble(model, rng, 0.6);
  GradCase c{model, {}, {}, {}, pcbls::LossKind::masked_pixel_ce};
  c.batch.spatial = {h, w};
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x(channels * h * w);
    for (double& v : x) v = rng.uniform();
    c.storage.push_back(x);
    pcbls::SoftLabelMap target(h, w, classes);
    for (std::size_t p = 0; p < h * w; ++p) {
      const auto dist = random_distribution(rng, classes);
      for (std::size_t k = 0; k < classes; ++k) target.channel(k)[p] = dist[k];
    }
    c.targets.maps.push_back(target);
    if (with_masks) {
      std::vector<std::uint8_t> mask(h * w);
      for (auto& m : mask) m = rng.uniform() < 0.7 ? 1 : 0;
      mask[0] = 1;
      c.targets.masks.push_back(mask);
    }
  }
  for (const auto& x : c.storage) c.batch.inputs.emplace_back(x);
  return c;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("pcbls_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

} // namespace fixture
