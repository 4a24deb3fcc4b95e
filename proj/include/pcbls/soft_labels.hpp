#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pcbls/numerics.hpp"

namespace pcbls {

/// Default SVLS kernel size.
inline constexpr std::size_t kDefaultSvlsKernel = 3;

struct OneHotLabel {
  std::size_t class_index;
  std::size_t num_classes;
};

/// Probability vector over K classes.
struct ClassProbs {
  std::vector<double> probs;
};

/// Per-pixel class indices on an HxW grid.
class LabelMap {
public:
  LabelMap() = default;
  LabelMap(std::size_t height, std::size_t width, std::size_t num_classes,
           std::vector<int> indices);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t num_classes() const noexcept { return num_classes_; }
  std::size_t pixel_count() const noexcept { return indices_.size(); }
  int operator()(std::size_t y, std::size_t x) const { return indices_[y * width_ + x]; }
  int operator[](std::size_t pixel) const { return indices_[pixel]; }
  std::span<const int> indices() const noexcept { return indices_; }

  friend bool operator==(const LabelMap&, const LabelMap&) = default;

private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t num_classes_ = 0;
  std::vector<int> indices_;
};

/// Per-pixel probability vectors, stored channel-major (K x H x W).
class SoftLabelMap {
public:
  SoftLabelMap(std::size_t height, std::size_t width, std::size_t num_classes);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t num_classes() const noexcept { return num_classes_; }

  double operator()(std::size_t c, std::size_t y, std::size_t x) const {
    return data_[(c * height_ + y) * width_ + x];
  }
  double& operator()(std::size_t c, std::size_t y, std::size_t x) {
    return data_[(c * height_ + y) * width_ + x];
  }
  std::span<double> channel(std::size_t c) { return {data_.data() + c * height_ * width_, height_ * width_}; }
  std::span<const double> channel(std::size_t c) const {
    return {data_.data() + c * height_ * width_, height_ * width_};
  }
  std::span<const double> data() const noexcept { return data_; }

private:
  std::size_t height_;
  std::size_t width_;
  std::size_t num_classes_;
  std::vector<double> data_;
};

/// Uniform label smoothing: (1 - eps) * one_hot + eps / K.
ClassProbs uls(const OneHotLabel& label, double epsilon);

/// Multi-label smoothing, applied per label with K = 2: t * (1 - eps) + eps / 2.
std::vector<double> uls_multilabel(std::span<const int> targets, double epsilon);

/// One-hot channel maps for a label map.
SoftLabelMap one_hot(const LabelMap& labels);

/// Spatially varying smoothing: one-hot channels convolved with a Gaussian kernel.
SoftLabelMap svls(const LabelMap& labels, double sigma, std::size_t kernel_size = kDefaultSvlsKernel);

/// ULS per pixel first, then the Gaussian convolution channel-wise.
SoftLabelMap uls_svls(const LabelMap& labels, double epsilon, double sigma,
                      std::size_t kernel_size = kDefaultSvlsKernel);

/// Per-pixel ULS without spatial smoothing.
SoftLabelMap uls_map(const LabelMap& labels, double epsilon);

} // namespace pcbls
