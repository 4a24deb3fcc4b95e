#include "pcbls/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>

namespace pcbls {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::size_t clamp_index(std::ptrdiff_t i, std::size_t n) {
  if (i < 0) {
    return 0;
  }
  return std::min(static_cast<std::size_t>(i), n - 1);
}

} // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(shape_product(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_product(shape_) != data_.size()) {
    throw std::invalid_argument("tensor: shape product " + std::to_string(shape_product(shape_)) +
                                " does not match data length " + std::to_string(data_.size()));
  }
}

double& Tensor::at(std::size_t row, std::size_t col) {
  if (rank() != 2 || row >= shape_[0] || col >= shape_[1]) {
    throw std::out_of_range("tensor: 2-D index out of range");
  }
  return data_[row * shape_[1] + col];
}

double Tensor::at(std::size_t row, std::size_t col) const {
  return const_cast<Tensor&>(*this).at(row, col);
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Kernel2D::Kernel2D(std::size_t size, std::vector<double> weights)
    : size_(size), weights_(std::move(weights)) {
  if (size_ == 0 || size_ % 2 == 0) {
    throw std::invalid_argument("kernel size must be odd and positive, got " + std::to_string(size_));
  }
  if (weights_.size() != size_ * size_) {
    throw std::invalid_argument("kernel weight count does not match size");
  }
}

Kernel2D gaussian_kernel2d(std::size_t size, double sigma) {
  if (size == 0 || size % 2 == 0) {
    throw std::invalid_argument("gaussian kernel size must be odd and positive, got " +
                                std::to_string(size));
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("gaussian kernel sigma must be positive");
  }
  const auto center = static_cast<double>(size / 2);
  std::vector<double> weights(size * size);
  for (std::size_t i = 0; i < size; ++i) {
    for (std::size_t j = 0; j < size; ++j) {
      const double di = static_cast<double>(i) - center;
      const double dj = static_cast<double>(j) - center;
      weights[i * size + j] = std::exp(-(di * di + dj * dj) / (2.0 * sigma * sigma));
    }
  }
  // The centre weight is exp(0) = 1, so the sum never underflows to zero.
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (auto& w : weights) {
    w /= total;
  }
  return Kernel2D(size, std::move(weights));
}

void conv2d_same(std::span<const double> in, std::span<double> out, std::size_t height,
                 std::size_t width, const Kernel2D& kernel) {
  if (in.size() != height * width || out.size() != height * width) {
    throw std::invalid_argument("conv2d_same: buffer size does not match HxW");
  }
  const auto r = static_cast<std::ptrdiff_t>(kernel.radius());
  const std::size_t k = kernel.size();
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      double acc = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        const std::size_t sy =
            clamp_index(static_cast<std::ptrdiff_t>(y) + static_cast<std::ptrdiff_t>(i) - r, height);
        for (std::size_t j = 0; j < k; ++j) {
          const std::size_t sx =
              clamp_index(static_cast<std::ptrdiff_t>(x) + static_cast<std::ptrdiff_t>(j) - r, width);
          acc += kernel(i, j) * in[sy * width + sx];
        }
      }
      out[y * width + x] = acc;
    }
  }
}

Tensor conv2d_same(const Tensor& map, const Kernel2D& kernel) {
  if (map.rank() != 2 || map.dim(0) == 0 || map.dim(1) == 0) {
    throw std::invalid_argument("conv2d_same expects a non-empty HxW tensor");
  }
  Tensor out(map.shape());
  conv2d_same(map.data(), out.data(), map.dim(0), map.dim(1), kernel);
  return out;
}

double log_sum_exp(std::span<const double> values) {
  const double m = *std::max_element(values.begin(), values.end());
  double s = 0.0;
  for (double v : values) {
    s += std::exp(v - m);
  }
  return m + std::log(s);
}

void softmax(std::span<const double> logits, std::span<double> out) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double s = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - m);
    s += out[i];
  }
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] /= s;
  }
}

void softmax_inplace(std::span<double> values) { softmax(values, values); }

Tensor softmax(const Tensor& logits, std::size_t axis) {
  if (axis >= logits.rank()) {
    throw std::invalid_argument("softmax axis out of range");
  }
  const auto& shape = logits.shape();
  std::size_t outer = 1;
  std::size_t inner = 1;
  for (std::size_t a = 0; a < axis; ++a) {
    outer *= shape[a];
  }
  for (std::size_t a = axis + 1; a < shape.size(); ++a) {
    inner *= shape[a];
  }
  const std::size_t n = shape[axis];
  Tensor out(shape);
  std::vector<double> lane(n);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      for (std::size_t c = 0; c < n; ++c) {
        lane[c] = logits[(o * n + c) * inner + i];
      }
      softmax_inplace(lane);
      for (std::size_t c = 0; c < n; ++c) {
        out[(o * n + c) * inner + i] = lane[c];
      }
    }
  }
  return out;
}

std::size_t argmax(std::span<const double> values) {
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

} // namespace pcbls
