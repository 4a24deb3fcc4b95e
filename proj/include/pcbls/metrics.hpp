#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pcbls/soft_labels.hpp"

namespace pcbls {

inline constexpr std::size_t kDefaultEceBins = 10;

struct TemperatureModel {
  double temperature = 1.0;
};

struct CalibrationBin {
  double lower = 0.0;
  double upper = 0.0;
  double confidence = 0.0; // mean confidence, 0 for empty bins
  double accuracy = 0.0;   // fraction correct, 0 for empty bins
  std::size_t count = 0;
};

struct CalibrationReport {
  double ece = 0.0;
  double brier = 0.0;
  double nll = 0.0;
  std::vector<CalibrationBin> bins;
};

double accuracy(std::span<const int> predicted, std::span<const int> labels);

/// All-points AP averaged over labels with at least one positive.
/// Ties in score are ranked by ascending sample index.
double mean_average_precision(std::span<const std::vector<double>> scores, std::span<const std::vector<int>> labels);

/// Average precision of a single ranking.
double average_precision(std::span<const double> scores, std::span<const int> positives);

struct SegmentationScores {
  std::vector<double> iou;  // per class; NaN for background and excluded classes
  std::vector<double> dice;
  double mean_iou = 0.0;
  double mean_dice = 0.0;
  std::size_t classes_counted = 0;
};

/// Dataset-level per-class IoU and Dice over foreground classes.
SegmentationScores iou_dice(std::span<const LabelMap> predicted, std::span<const LabelMap> truth,
                            std::size_t num_classes, int background = 0);

/// Bin index under equal-width bins on [0, 1]; the top bin is closed on the right.
std::size_t calibration_bin(double confidence, std::size_t bins);

/// Expected calibration error with equal-width bins; brier and nll are left at 0.
CalibrationReport ece(std::span<const double> confidences, std::span<const bool> correct,
                      std::size_t bins = kDefaultEceBins);

/// Mean over samples of sum_k (p_k - onehot_k)^2.
double brier(std::span<const std::vector<double>> probs, std::span<const int> labels);

/// Mean negative log-likelihood of softmax(logits / T).
double nll(std::span<const std::vector<double>> logits, std::span<const int> labels, double temperature = 1.0);

/// Golden-section search for T over log T in [log 0.05, log 20].
TemperatureModel fit_temperature(std::span<const std::vector<double>> logits, std::span<const int> labels);

/// softmax(logits / T).
ClassProbs apply_temperature(std::span<const double> logits, double temperature);

/// Full report for softmax(logits / T): ECE over max-probability confidences, Brier and NLL.
CalibrationReport calibration_report(std::span<const std::vector<double>> logits, std::span<const int> labels,
                                     double temperature = 1.0, std::size_t bins = kDefaultEceBins);

} // namespace pcbls
