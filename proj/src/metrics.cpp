#include "pcbls/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>

#include "pcbls/numerics.hpp"

namespace pcbls {

double accuracy(std::span<const int> predicted, std::span<const int> labels) {
  if (predicted.size() != labels.size()) {
    throw std::invalid_argument("accuracy: prediction and label counts differ");
  }
  if (labels.empty()) {
    return 0.0;
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    hits += predicted[i] == labels[i] ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double average_precision(std::span<const double> scores, std::span<const int> positives) {
  if (scores.size() != positives.size()) {
    throw std::invalid_argument("average_precision: score and label counts differ");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (positives[order[rank]] != 0) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
  }
  return hits > 0 ? sum / static_cast<double>(hits) : std::numeric_limits<double>::quiet_NaN();
}

double mean_average_precision(std::span<const std::vector<double>> scores, std::span<const std::vector<int>> labels) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("mean_average_precision: score and label counts differ");
  }
  if (scores.empty()) {
    return 0.0;
  }
  const std::size_t n_labels = labels.front().size();
  double sum = 0.0;
  std::size_t counted = 0;
  std::vector<double> column(scores.size());
  std::vector<int> truth(scores.size());
  for (std::size_t l = 0; l < n_labels; ++l) {
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i].size() != n_labels || labels[i].size() != n_labels) {
        throw std::invalid_argument("mean_average_precision: ragged label vectors");
      }
      column[i] = scores[i][l];
      truth[i] = labels[i][l];
    }
    const double ap = average_precision(column, truth);
    if (!std::isnan(ap)) {
      sum += ap;
      ++counted;
    }
  }
  return counted > 0 ? sum / static_cast<double>(counted) : 0.0;
}

SegmentationScores iou_dice(std::span<const LabelMap> predicted, std::span<const LabelMap> truth,
                            std::size_t num_classes, int background) {
  if (predicted.size() != truth.size()) {
    throw std::invalid_argument("iou_dice: prediction and ground-truth counts differ");
  }
  std::vector<std::size_t> inter(num_classes, 0);
  std::vector<std::size_t> pred_area(num_classes, 0);
  std::vector<std::size_t> true_area(num_classes, 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predicted[i].height() != truth[i].height() || predicted[i].width() != truth[i].width()) {
      throw std::invalid_argument("iou_dice: map shapes differ for frame " + std::to_string(i));
    }
    for (std::size_t p = 0; p < truth[i].pixel_count(); ++p) {
      const auto pc = static_cast<std::size_t>(predicted[i][p]);
      const auto tc = static_cast<std::size_t>(truth[i][p]);
      if (pc >= num_classes || tc >= num_classes) {
        throw std::invalid_argument("iou_dice: class index out of range");
      }
      ++pred_area[pc];
      ++true_area[tc];
      if (pc == tc) {
        ++inter[pc];
      }
    }
  }
  SegmentationScores out;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  out.iou.assign(num_classes, nan);
  out.dice.assign(num_classes, nan);
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (static_cast<int>(c) == background) {
      continue;
    }
    const std::size_t uni = pred_area[c] + true_area[c] - inter[c];
    if (uni == 0) {
      continue;
    }
    out.iou[c] = static_cast<double>(inter[c]) / static_cast<double>(uni);
    out.dice[c] = 2.0 * static_cast<double>(inter[c]) / static_cast<double>(pred_area[c] + true_area[c]);
    out.mean_iou += out.iou[c];
    out.mean_dice += out.dice[c];
    ++out.classes_counted;
  }
  if (out.classes_counted > 0) {
    out.mean_iou /= static_cast<double>(out.classes_counted);
    out.mean_dice /= static_cast<double>(out.classes_counted);
  }
  return out;
}

std::size_t calibration_bin(double confidence, std::size_t bins) {
  if (bins == 0) {
    throw std::invalid_argument("calibration: bin count must be positive");
  }
  if (!(confidence >= 0.0 && confidence <= 1.0)) {
    throw std::invalid_argument("calibration: confidence outside [0, 1]");
  }
  const auto b = static_cast<double>(bins);
  auto idx = std::min(static_cast<std::size_t>(confidence * b), bins - 1);
  // Settle rounding at edges against the exact edge values idx / B.
  while (idx > 0 && confidence < static_cast<double>(idx) / b) {
    --idx;
  }
  while (idx + 1 < bins && confidence >= static_cast<double>(idx + 1) / b) {
    ++idx;
  }
  return idx;
}

CalibrationReport ece(std::span<const double> confidences, std::span<const bool> correct, std::size_t bins) {
  if (confidences.size() != correct.size()) {
    throw std::invalid_argument("ece: confidence and correctness counts differ");
  }
  if (bins == 0) {
    throw std::invalid_argument("ece: bin count must be positive");
  }
  CalibrationReport report;
  report.bins.resize(bins);
  std::vector<double> conf_sum(bins, 0.0);
  std::vector<double> hit_sum(bins, 0.0);
  for (std::size_t i = 0; i < confidences.size(); ++i) {
    const std::size_t b = calibration_bin(confidences[i], bins);
    conf_sum[b] += confidences[i];
    hit_sum[b] += correct[i] ? 1.0 : 0.0;
    ++report.bins[b].count;
  }
  const auto n = static_cast<double>(confidences.size());
  for (std::size_t b = 0; b < bins; ++b) {
    auto& bin = report.bins[b];
    bin.lower = static_cast<double>(b) / static_cast<double>(bins);
    bin.upper = static_cast<double>(b + 1) / static_cast<double>(bins);
    if (bin.count == 0) {
      continue;
    }
    const auto count = static_cast<double>(bin.count);
    bin.confidence = conf_sum[b] / count;
    bin.accuracy = hit_sum[b] / count;
    report.ece += (count / n) * std::abs(bin.accuracy - bin.confidence);
  }
  return report;
}

double brier(std::span<const std::vector<double>> probs, std::span<const int> labels) {
  if (probs.size() != labels.size()) {
    throw std::invalid_argument("brier: probability and label counts differ");
  }
  if (probs.empty()) {
    return 0.0;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double sum = std::accumulate(probs[i].begin(), probs[i].end(), 0.0);
    if (std::abs(sum - 1.0) > 1e-6) {
      throw std::invalid_argument("brier: probabilities for sample " + std::to_string(i) + " are not normalized");
    }
    for (std::size_t k = 0; k < probs[i].size(); ++k) {
      const double target = static_cast<int>(k) == labels[i] ? 1.0 : 0.0;
      total += (probs[i][k] - target) * (probs[i][k] - target);
    }
  }
  return total / static_cast<double>(probs.size());
}

double nll(std::span<const std::vector<double>> logits, std::span<const int> labels, double temperature) {
  if (logits.size() != labels.size()) {
    throw std::invalid_argument("nll: logit and label counts differ");
  }
  if (logits.empty()) {
    throw std::invalid_argument("nll: empty set");
  }
  if (!(temperature > 0.0)) {
    throw std::invalid_argument("nll: temperature must be positive");
  }
  double total = 0.0;
  std::vector<double> scaled;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    scaled.resize(logits[i].size());
    for (std::size_t k = 0; k < scaled.size(); ++k) {
      scaled[k] = logits[i][k] / temperature;
    }
    total += log_sum_exp(scaled) - scaled.at(static_cast<std::size_t>(labels[i]));
  }
  return total / static_cast<double>(logits.size());
}

TemperatureModel fit_temperature(std::span<const std::vector<double>> logits, std::span<const int> labels) {
  if (logits.empty()) {
    throw std::invalid_argument("fit_temperature: empty validation set");
  }
  constexpr double kTolerance = 1e-4;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = std::log(0.05);
  double hi = std::log(20.0);
  auto objective = [&](double log_t) { return nll(logits, labels, std::exp(log_t)); };
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = objective(x1);
  double f2 = objective(x2);
  while (hi - lo > kTolerance) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = objective(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = objective(x2);
    }
  }
  const double best = std::exp(0.5 * (lo + hi));
  // Unimodality is not guaranteed; never return something worse than T = 1.
  if (nll(logits, labels, best) > nll(logits, labels, 1.0)) {
    return {1.0};
  }
  return {best};
}

ClassProbs apply_temperature(std::span<const double> logits, double temperature) {
  if (!(temperature > 0.0)) {
    throw std::invalid_argument("apply_temperature: temperature must be positive");
  }
  ClassProbs out{std::vector<double>(logits.size())};
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out.probs[k] = logits[k] / temperature;
  }
  softmax_inplace(out.probs);
  return out;
}

CalibrationReport calibration_report(std::span<const std::vector<double>> logits, std::span<const int> labels,
                                     double temperature, std::size_t bins) {
  if (logits.size() != labels.size()) {
    throw std::invalid_argument("calibration_report: logit and label counts differ");
  }
  std::vector<double> confidences(logits.size());
  auto correct = std::make_unique<bool[]>(logits.size());
  std::vector<std::vector<double>> probs(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = apply_temperature(logits[i], temperature).probs;
    const std::size_t top = argmax(probs[i]);
    confidences[i] = probs[i][top];
    correct[i] = static_cast<int>(top) == labels[i];
  }
  CalibrationReport report = ece(confidences, std::span<const bool>(correct.get(), logits.size()), bins);
  report.brier = brier(probs, labels);
  report.nll = nll(logits, labels, temperature);
  return report;
}

} // namespace pcbls
