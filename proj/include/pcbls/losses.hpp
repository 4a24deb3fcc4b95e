#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "pcbls/models.hpp"
#include "pcbls/soft_labels.hpp"

namespace pcbls {

/// Loss value and its gradient w.r.t. the logits.
struct LogitGradient {
  double loss = 0.0;
  std::vector<double> grad;
};

/// Loss value and its gradient w.r.t. the model parameters.
struct LossValue {
  double loss = 0.0;
  std::vector<double> gradient;
};

/// -sum_i t_i log softmax(z)_i; gradient softmax(z) - t.
LogitGradient soft_ce(std::span<const double> logits, std::span<const double> target);

/// Mean over labels of binary cross-entropy against soft targets; gradient per logit is (sigmoid(z) - t) / L.
LogitGradient soft_bce(std::span<const double> logits, std::span<const double> targets);

/// Mean soft cross-entropy over included pixels of all maps.
/// Logit maps are K x H x W; an all-excluded batch yields loss 0 and zero gradient.
struct PixelLossGradient {
  double loss = 0.0;
  std::size_t included = 0;
  std::vector<std::vector<double>> grads;
};
PixelLossGradient masked_pixel_ce(std::span<const std::vector<double>> logit_maps,
                                  std::span<const SoftLabelMap> targets,
                                  std::span<const std::vector<std::uint8_t>> masks);

enum class LossKind { soft_ce, soft_bce, masked_pixel_ce };

/// Targets for one mini-batch; fill the members the loss kind uses.
struct BatchTargets {
  std::vector<std::vector<double>> vectors;    // soft_ce / soft_bce
  std::vector<SoftLabelMap> maps;              // masked_pixel_ce
  std::vector<std::vector<std::uint8_t>> masks; // masked_pixel_ce; empty means all ones
};

struct Batch {
  std::vector<std::span<const double>> inputs;
  Spatial spatial;
};

/// Called once per sample, in batch order, with that sample's share of the batch gradient.
using SampleGradientObserver = std::function<void(std::size_t index, std::span<const double> grad)>;

struct BackwardOptions {
  std::size_t threads = 1;
  SampleGradientObserver observer;
};

/// Batch loss and exact parameter gradient.
///
/// soft_ce / soft_bce average over samples; masked_pixel_ce averages over included pixels.
/// Per-sample gradients are reduced in batch order, so the result does not depend on threads.
LossValue backward(const Model& model, const Batch& batch, const BatchTargets& targets, LossKind kind,
                   const BackwardOptions& options = {});

} // namespace pcbls
