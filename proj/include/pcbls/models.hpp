#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "pcbls/soft_labels.hpp"

namespace pcbls {

/// Tag values double as the checkpoint architecture byte.
enum class Architecture : std::uint8_t { linear_softmax = 1, mlp = 2, tiny_fcn = 3 };

std::string_view to_string(Architecture arch);
Architecture architecture_from_string(std::string_view name);

/// Spatial extent of one input; (1, 1) for vector models.
struct Spatial {
  std::size_t height = 1;
  std::size_t width = 1;
};

/// Small differentiable predictor with a flat parameter vector.
///
/// dims by architecture:
///   linear_softmax  {D, K}          logits = W x + b
///   mlp             {D, H, K}       logits = W2 tanh(W1 x + b1) + b2
///   tiny_fcn        {C, w1, w2, K}  three 3x3 replicate-padded convs, tanh between
class Model {
public:
  Model(Architecture arch, std::vector<std::size_t> dims, std::vector<double> params);

  static Model linear_softmax(std::size_t inputs, std::size_t classes, std::uint64_t seed);
  static Model mlp(std::size_t inputs, std::size_t hidden, std::size_t classes, std::uint64_t seed);
  static Model tiny_fcn(std::size_t channels, std::size_t width1, std::size_t width2, std::size_t classes,
                        std::uint64_t seed);
  /// Zero-initialized model of the given shape.
  static Model zeros(Architecture arch, std::vector<std::size_t> dims);

  Architecture architecture() const noexcept { return arch_; }
  const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  std::size_t input_size() const noexcept { return dims_.front(); }
  std::size_t output_count() const noexcept { return dims_.back(); }
  bool is_dense() const noexcept { return arch_ == Architecture::tiny_fcn; }

  std::span<double> params() noexcept { return params_; }
  std::span<const double> params() const noexcept { return params_; }
  std::size_t parameter_count() const noexcept { return params_.size(); }

  static std::size_t parameter_count(Architecture arch, const std::vector<std::size_t>& dims);

  friend bool operator==(const Model&, const Model&) = default;

private:
  Architecture arch_;
  std::vector<std::size_t> dims_;
  std::vector<double> params_;
};

/// Logits: K values for vector models, K x H x W (channel-major) for tiny_fcn.
std::vector<double> forward(const Model& model, std::span<const double> input, Spatial spatial = {});

/// Loss on one sample's logits; writes d(loss)/d(logits) and returns the loss.
using LogitLoss = std::function<double(std::span<const double> logits, std::span<double> d_logits)>;

/// Backpropagates a logit-level loss and adds scale * d(loss)/d(params) into grad.
double accumulate_gradient(const Model& model, std::span<const double> input, Spatial spatial,
                           const LogitLoss& loss, double scale, std::span<double> grad);

} // namespace pcbls
