#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace pcbls {

/// Dense row-major array of doubles.
class Tensor {
public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(std::size_t row, std::size_t col);
  double at(std::size_t row, std::size_t col) const;

  bool all_finite() const noexcept;

  friend bool operator==(const Tensor&, const Tensor&) = default;

private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

/// Odd-sized square convolution kernel, weights row-major.
class Kernel2D {
public:
  Kernel2D(std::size_t size, std::vector<double> weights);

  std::size_t size() const noexcept { return size_; }
  std::size_t radius() const noexcept { return size_ / 2; }
  double operator()(std::size_t row, std::size_t col) const { return weights_[row * size_ + col]; }
  std::span<const double> weights() const noexcept { return weights_; }

private:
  std::size_t size_;
  std::vector<double> weights_;
};

/// Normalized Gaussian kernel; weights sum to 1.
Kernel2D gaussian_kernel2d(std::size_t size, double sigma);

/// Same-size 2-D convolution of an HxW map with replicate (clamp) padding.
Tensor conv2d_same(const Tensor& map, const Kernel2D& kernel);

/// Convolve one HxW plane stored in a flat buffer; out must not alias in.
void conv2d_same(std::span<const double> in, std::span<double> out, std::size_t height,
                 std::size_t width, const Kernel2D& kernel);

/// Max-stabilized softmax along the given axis.
Tensor softmax(const Tensor& logits, std::size_t axis);

/// In-place softmax of a single vector.
void softmax_inplace(std::span<double> values);

/// Elements [0..n) of the softmax of logits written into out.
void softmax(std::span<const double> logits, std::span<double> out);

/// log(sum(exp(values))) computed stably.
double log_sum_exp(std::span<const double> values);

std::size_t argmax(std::span<const double> values);

} // namespace pcbls
