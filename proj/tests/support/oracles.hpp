#pragma once

// Brute-force reference implementations used by unit and acceptance tests.
// Written from the definitions, deliberately without calling the library's numerics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "pcbls/losses.hpp"
#include "pcbls/models.hpp"
#include "pcbls/soft_labels.hpp"

namespace oracle {

inline std::vector<double> gaussian(std::size_t k, double sigma) {
  const int r = static_cast<int>(k / 2);
  std::vector<double> w;
  double total = 0.0;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      w.push_back(v);
      total += v;
    }
  }
  for (double& v : w) v /= total;
  return w;
}

// Same-size convolution with clamped (replicate) borders; map is row-major H x W.
inline std::vector<double> conv_replicate(const std::vector<double>& map, std::size_t h, std::size_t w,
                                          const std::vector<double>& kernel, std::size_t k) {
  const int r = static_cast<int>(k / 2);
  std::vector<double> out(h * w, 0.0);
  for (int y = 0; y < static_cast<int>(h); ++y) {
    for (int x = 0; x < static_cast<int>(w); ++x) {
      double acc = 0.0;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          const int yy = std::clamp(y + dy, 0, static_cast<int>(h) - 1);
          const int xx = std::clamp(x + dx, 0, static_cast<int>(w) - 1);
          acc += kernel[(dy + r) * static_cast<int>(k) + (dx + r)] * map[yy * w + xx];
        }
      }
      out[y * w + x] = acc;
    }
  }
  return out;
}

// Per-class maps [c][pixel] after optional ULS, then Gaussian smoothing.
inline std::vector<std::vector<double>> uls_svls(const pcbls::LabelMap& labels, double eps, double sigma,
                                                 std::size_t k) {
  const std::size_t h = labels.height(), w = labels.width(), classes = labels.num_classes();
  const auto kernel = gaussian(k, sigma);
  std::vector<std::vector<double>> out;
  for (std::size_t c = 0; c < classes; ++c) {
    std::vector<double> plane(h * w);
    for (std::size_t p = 0; p < h * w; ++p) {
      const double onehot = labels[p] == static_cast<int>(c) ? 1.0 : 0.0;
      plane[p] = (1.0 - eps) * onehot + eps / static_cast<double>(classes);
    }
    out.push_back(conv_replicate(plane, h, w, kernel, k));
  }
  return out;
}

// ECE by scanning every bin's membership against its edges.
inline double ece(const std::vector<double>& conf, const std::vector<bool>& correct, std::size_t bins) {
  const double n = static_cast<double>(conf.size());
  double total = 0.0;
  for (std::size_t b = 0; b < bins; ++b) {
    const double lo = static_cast<double>(b) / static_cast<double>(bins);
    const double hi = static_cast<double>(b + 1) / static_cast<double>(bins);
    double c_sum = 0.0, a_sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < conf.size(); ++i) {
      const bool inside = conf[i] >= lo && (conf[i] < hi || b + 1 == bins);
      if (!inside) continue;
      c_sum += conf[i];
      a_sum += correct[i] ? 1.0 : 0.0;
      ++count;
    }
    if (count == 0) continue;
    const double cnt = static_cast<double>(count);
    total += (cnt / n) * std::abs(a_sum / cnt - c_sum / cnt);
  }
  return total;
}

// Cross-entropy of a target against softmax(z), via direct log-sum-exp.
inline double cross_entropy(const std::vector<double>& z, const std::vector<double>& target) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  const double lse = m + std::log(s);
  double loss = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) loss -= target[i] * (z[i] - lse);
  return loss;
}

// ||a - b|| / max(||a||, ||b||, 1e-10).
inline double relative_error(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-10});
}

// Central finite-difference gradient of the batch loss w.r.t. every parameter.
inline std::vector<double> numeric_gradient(const pcbls::Model& model, const pcbls::Batch& batch,
                                            const pcbls::BatchTargets& targets, pcbls::LossKind kind,
                                            double h = 1e-5) {
  pcbls::Model probe = model;
  std::vector<double> grad(model.parameter_count());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double keep = probe.params()[i];
    probe.params()[i] = keep + h;
    const double up = pcbls::backward(probe, batch, targets, kind).loss;
    probe.params()[i] = keep - h;
    const double down = pcbls::backward(probe, batch, targets, kind).loss;
    probe.params()[i] = keep;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

} // namespace oracle
