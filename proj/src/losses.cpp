#include "pcbls/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>

#include "pcbls/numerics.hpp"

namespace pcbls {

namespace {

constexpr double kTargetSumTolerance = 1e-6;

void check_distribution(std::span<const double> target) {
  double sum = 0.0;
  for (double t : target) {
    if (t < 0.0) {
      throw std::invalid_argument("soft_ce: target has a negative entry");
    }
    sum += t;
  }
  if (std::abs(sum - 1.0) > kTargetSumTolerance) {
    throw std::invalid_argument("soft_ce: target sums to " + std::to_string(sum) + ", not 1");
  }
}

// Loss of one K-vector; writes scale * (softmax - target) into grad.
double ce_terms(std::span<const double> logits, std::span<const double> target, double scale,
                std::span<double> grad) {
  const double lse = log_sum_exp(logits);
  double loss = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double log_p = logits[i] - lse;
    loss -= target[i] * log_p;
    grad[i] = scale * (std::exp(log_p) - target[i]);
  }
  return loss;
}

double bce_terms(std::span<const double> logits, std::span<const double> targets, std::span<double> grad) {
  const auto n = static_cast<double>(logits.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double z = logits[i];
    const double t = targets[i];
    if (!(t >= 0.0 && t <= 1.0)) {
      throw std::invalid_argument("soft_bce: target outside [0, 1]");
    }
    // softplus(z) - t z, evaluated without overflow
    loss += std::max(z, 0.0) - t * z + std::log1p(std::exp(-std::abs(z)));
    const double sig = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    grad[i] = (sig - t) / n;
  }
  return loss / n;
}

// Sum of per-pixel CE over included pixels of one map; gradient scaled by `scale`.
double pixel_terms(std::span<const double> logits, const SoftLabelMap& target, std::span<const std::uint8_t> mask,
                   double scale, std::span<double> grad, std::size_t& included) {
  const std::size_t k = target.num_classes();
  const std::size_t hw = target.height() * target.width();
  if (logits.size() != k * hw) {
    throw std::invalid_argument("masked_pixel_ce: logit map does not match target shape");
  }
  if (!mask.empty() && mask.size() != hw) {
    throw std::invalid_argument("masked_pixel_ce: mask does not match target shape");
  }
  std::vector<double> z(k);
  std::vector<double> t(k);
  std::vector<double> g(k);
  double loss = 0.0;
  for (std::size_t p = 0; p < hw; ++p) {
    if (!mask.empty() && mask[p] == 0) {
      continue;
    }
    for (std::size_t c = 0; c < k; ++c) {
      z[c] = logits[c * hw + p];
      t[c] = target.channel(c)[p];
    }
    loss += ce_terms(z, t, scale, g);
    for (std::size_t c = 0; c < k; ++c) {
      grad[c * hw + p] = g[c];
    }
    ++included;
  }
  return loss;
}

std::size_t mask_count(std::span<const std::uint8_t> mask, std::size_t hw) {
  if (mask.empty()) {
    return hw;
  }
  return static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; }));
}

} // namespace

LogitGradient soft_ce(std::span<const double> logits, std::span<const double> target) {
  if (logits.size() != target.size() || logits.empty()) {
    throw std::invalid_argument("soft_ce: logits and target lengths differ");
  }
  check_distribution(target);
  LogitGradient out{0.0, std::vector<double>(logits.size())};
  out.loss = ce_terms(logits, target, 1.0, out.grad);
  return out;
}

LogitGradient soft_bce(std::span<const double> logits, std::span<const double> targets) {
  if (logits.size() != targets.size() || logits.empty()) {
    throw std::invalid_argument("soft_bce: logits and target lengths differ");
  }
  LogitGradient out{0.0, std::vector<double>(logits.size())};
  out.loss = bce_terms(logits, targets, out.grad);
  return out;
}

PixelLossGradient masked_pixel_ce(std::span<const std::vector<double>> logit_maps,
                                  std::span<const SoftLabelMap> targets,
                                  std::span<const std::vector<std::uint8_t>> masks) {
  if (logit_maps.size() != targets.size() || (!masks.empty() && masks.size() != targets.size())) {
    throw std::invalid_argument("masked_pixel_ce: batch sizes differ");
  }
  PixelLossGradient out;
  std::size_t total = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const std::size_t hw = targets[i].height() * targets[i].width();
    total += mask_count(masks.empty() ? std::span<const std::uint8_t>{} : masks[i], hw);
  }
  const double scale = total > 0 ? 1.0 / static_cast<double>(total) : 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    out.grads.emplace_back(logit_maps[i].size(), 0.0);
    out.loss += pixel_terms(logit_maps[i], targets[i], masks.empty() ? std::span<const std::uint8_t>{} : masks[i],
                            scale, out.grads.back(), out.included);
  }
  out.loss *= scale;
  return out;
}

LossValue backward(const Model& model, const Batch& batch, const BatchTargets& targets, LossKind kind,
                   const BackwardOptions& options) {
  const std::size_t n = batch.inputs.size();
  if (n == 0) {
    throw std::invalid_argument("backward: empty batch");
  }
  if (kind == LossKind::masked_pixel_ce) {
    if (!model.is_dense()) {
      throw std::invalid_argument("masked_pixel_ce needs a dense (tiny_fcn) model");
    }
    if (targets.maps.size() != n || (!targets.masks.empty() && targets.masks.size() != n)) {
      throw std::invalid_argument("backward: pixel targets do not match batch size");
    }
  } else {
    if (model.is_dense()) {
      throw std::invalid_argument("vector losses need a vector (linear_softmax or mlp) model");
    }
    if (targets.vectors.size() != n) {
      throw std::invalid_argument("backward: targets do not match batch size");
    }
  }

  // Validate everything up front; worker threads must not throw.
  const std::size_t outputs = model.output_count();
  const std::size_t hw = batch.spatial.height * batch.spatial.width;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t expected_input = model.input_size() * (model.is_dense() ? hw : 1);
    if (batch.inputs[i].size() != expected_input) {
      throw std::invalid_argument("backward: input " + std::to_string(i) + " has the wrong length");
    }
    switch (kind) {
    case LossKind::soft_ce:
      if (targets.vectors[i].size() != outputs) {
        throw std::invalid_argument("soft_ce: target length does not match model outputs");
      }
      check_distribution(targets.vectors[i]);
      break;
    case LossKind::soft_bce:
      if (targets.vectors[i].size() != outputs) {
        throw std::invalid_argument("soft_bce: target length does not match model outputs");
      }
      for (double t : targets.vectors[i]) {
        if (!(t >= 0.0 && t <= 1.0)) {
          throw std::invalid_argument("soft_bce: target outside [0, 1]");
        }
      }
      break;
    case LossKind::masked_pixel_ce: {
      const auto& m = targets.maps[i];
      if (m.num_classes() != outputs || m.height() != batch.spatial.height || m.width() != batch.spatial.width) {
        throw std::invalid_argument("masked_pixel_ce: target map does not match model output shape");
      }
      if (!targets.masks.empty() && targets.masks[i].size() != hw) {
        throw std::invalid_argument("masked_pixel_ce: mask does not match target shape");
      }
      break;
    }
    }
  }

  double scale = 1.0 / static_cast<double>(n);
  std::size_t included_total = n;
  if (kind == LossKind::masked_pixel_ce) {
    included_total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      included_total += mask_count(targets.masks.empty() ? std::span<const std::uint8_t>{} : targets.masks[i], hw);
    }
    scale = included_total > 0 ? 1.0 / static_cast<double>(included_total) : 0.0;
  }

  const std::size_t params = model.parameter_count();
  std::vector<std::vector<double>> grads(n);
  std::vector<double> losses(n, 0.0);

  auto work = [&](std::size_t i) {
    grads[i].assign(params, 0.0);
    LogitLoss loss_fn;
    switch (kind) {
    case LossKind::soft_ce:
      loss_fn = [&](std::span<const double> z, std::span<double> dz) {
        return ce_terms(z, targets.vectors[i], 1.0, dz);
      };
      break;
    case LossKind::soft_bce:
      loss_fn = [&](std::span<const double> z, std::span<double> dz) {
        return bce_terms(z, targets.vectors[i], dz);
      };
      break;
    case LossKind::masked_pixel_ce:
      loss_fn = [&](std::span<const double> z, std::span<double> dz) {
        std::size_t included = 0;
        const auto mask = targets.masks.empty() ? std::span<const std::uint8_t>{} : targets.masks[i];
        return pixel_terms(z, targets.maps[i], mask, 1.0, dz, included);
      };
      break;
    }
    if (scale == 0.0) {
      return;
    }
    losses[i] = accumulate_gradient(model, batch.inputs[i], batch.spatial, loss_fn, scale, grads[i]);
  };

  const std::size_t threads = std::clamp<std::size_t>(options.threads, 1, n);
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      work(i);
    }
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < n; i += threads) {
          work(i);
        }
      });
    }
  }

  LossValue out{0.0, std::vector<double>(params, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    if (options.observer) {
      options.observer(i, grads[i]);
    }
    out.loss += losses[i];
    for (std::size_t j = 0; j < params; ++j) {
      out.gradient[j] += grads[i][j];
    }
  }
  out.loss *= scale;
  return out;
}

} // namespace pcbls
