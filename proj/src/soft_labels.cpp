#include "pcbls/soft_labels.hpp"

#include <stdexcept>
#include <string>

namespace pcbls {

namespace {

void check_epsilon(double epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) {
    throw std::invalid_argument("smoothing factor epsilon must lie in [0, 1), got " +
                                std::to_string(epsilon));
  }
}

SoftLabelMap convolve_channels(const SoftLabelMap& in, const Kernel2D& kernel) {
  SoftLabelMap out(in.height(), in.width(), in.num_classes());
  for (std::size_t c = 0; c < in.num_classes(); ++c) {
    conv2d_same(in.channel(c), out.channel(c), in.height(), in.width(), kernel);
  }
  return out;
}

} // namespace

LabelMap::LabelMap(std::size_t height, std::size_t width, std::size_t num_classes,
                   std::vector<int> indices)
    : height_(height), width_(width), num_classes_(num_classes), indices_(std::move(indices)) {
  if (indices_.size() != height_ * width_) {
    throw std::invalid_argument("label map: index count does not match HxW");
  }
  if (num_classes_ < 2) {
    throw std::invalid_argument("label map: need at least 2 classes");
  }
  for (int v : indices_) {
    if (v < 0 || static_cast<std::size_t>(v) >= num_classes_) {
      throw std::invalid_argument("label map: class index " + std::to_string(v) + " out of range");
    }
  }
}

SoftLabelMap::SoftLabelMap(std::size_t height, std::size_t width, std::size_t num_classes)
    : height_(height), width_(width), num_classes_(num_classes),
      data_(height * width * num_classes, 0.0) {}

ClassProbs uls(const OneHotLabel& label, double epsilon) {
  check_epsilon(epsilon);
  if (label.num_classes < 2 || label.class_index >= label.num_classes) {
    throw std::invalid_argument("uls: invalid one-hot label");
  }
  const double off = epsilon / static_cast<double>(label.num_classes);
  ClassProbs out{std::vector<double>(label.num_classes, off)};
  out.probs[label.class_index] = (1.0 - epsilon) + off;
  return out;
}

std::vector<double> uls_multilabel(std::span<const int> targets, double epsilon) {
  check_epsilon(epsilon);
  std::vector<double> out(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] != 0 && targets[i] != 1) {
      throw std::invalid_argument("uls_multilabel: targets must be binary");
    }
    out[i] = static_cast<double>(targets[i]) * (1.0 - epsilon) + epsilon / 2.0;
  }
  return out;
}

SoftLabelMap one_hot(const LabelMap& labels) {
  SoftLabelMap out(labels.height(), labels.width(), labels.num_classes());
  for (std::size_t y = 0; y < labels.height(); ++y) {
    for (std::size_t x = 0; x < labels.width(); ++x) {
      out(static_cast<std::size_t>(labels(y, x)), y, x) = 1.0;
    }
  }
  return out;
}

SoftLabelMap uls_map(const LabelMap& labels, double epsilon) {
  check_epsilon(epsilon);
  const std::size_t k = labels.num_classes();
  const double off = epsilon / static_cast<double>(k);
  SoftLabelMap out(labels.height(), labels.width(), k);
  for (std::size_t y = 0; y < labels.height(); ++y) {
    for (std::size_t x = 0; x < labels.width(); ++x) {
      const auto truth = static_cast<std::size_t>(labels(y, x));
      for (std::size_t c = 0; c < k; ++c) {
        out(c, y, x) = c == truth ? (1.0 - epsilon) + off : off;
      }
    }
  }
  return out;
}

SoftLabelMap svls(const LabelMap& labels, double sigma, std::size_t kernel_size) {
  const Kernel2D kernel = gaussian_kernel2d(kernel_size, sigma);
  return convolve_channels(one_hot(labels), kernel);
}

SoftLabelMap uls_svls(const LabelMap& labels, double epsilon, double sigma, std::size_t kernel_size) {
  check_epsilon(epsilon);
  const Kernel2D kernel = gaussian_kernel2d(kernel_size, sigma);
  return convolve_channels(uls_map(labels, epsilon), kernel);
}

} // namespace pcbls
