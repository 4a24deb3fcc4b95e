#include "pcbls/evaluation.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "pcbls/metrics.hpp"
#include "pcbls/numerics.hpp"

namespace pcbls {

namespace {

double sigmoid(double z) { return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

SoftLabelMap probmap_from_logits(std::span<const double> logits, std::size_t classes, std::size_t height,
                                 std::size_t width, double temperature) {
  SoftLabelMap out(height, width, classes);
  const std::size_t hw = height * width;
  std::vector<double> lane(classes);
  for (std::size_t p = 0; p < hw; ++p) {
    for (std::size_t c = 0; c < classes; ++c) lane[c] = logits[c * hw + p] / temperature;
    softmax_inplace(lane);
    for (std::size_t c = 0; c < classes; ++c) out.channel(c)[p] = lane[c];
  }
  return out;
}

LabelMap argmax_map(const SoftLabelMap& probs) {
  const std::size_t hw = probs.height() * probs.width();
  std::vector<int> idx(hw, 0);
  for (std::size_t p = 0; p < hw; ++p) {
    double best = probs.channel(0)[p];
    for (std::size_t c = 1; c < probs.num_classes(); ++c) {
      if (probs.channel(c)[p] > best) {
        best = probs.channel(c)[p];
        idx[p] = static_cast<int>(c);
      }
    }
  }
  return LabelMap(probs.height(), probs.width(), probs.num_classes(), std::move(idx));
}

} // namespace

void check_compatible(const Model& model, const LabeledDataset& data) {
  const bool dense_task = data.task == TaskKind::segmentation;
  if (model.is_dense() != dense_task) {
    throw std::invalid_argument(std::string("model architecture ") + std::string(to_string(model.architecture())) +
                                " does not fit task " + std::string(to_string(data.task)));
  }
  const std::size_t expected_input = dense_task ? data.channels : data.input_size();
  if (model.input_size() != expected_input || model.output_count() != data.num_classes) {
    throw std::invalid_argument("model dims (input " + std::to_string(model.input_size()) + ", outputs " +
                                std::to_string(model.output_count()) + ") do not match the dataset (input " +
                                std::to_string(expected_input) + ", classes " + std::to_string(data.num_classes) + ")");
  }
}

std::vector<std::vector<double>> predict_logits(const Model& model, const LabeledDataset& data) {
  check_compatible(model, data);
  std::vector<std::vector<double>> out;
  out.reserve(data.size());
  const Spatial spatial{data.height, data.width};
  for (const auto& x : data.inputs) {
    out.push_back(forward(model, x, spatial));
  }
  return out;
}

std::vector<SoftLabelMap> predict_probmaps(const Model& model, const LabeledDataset& data, double temperature) {
  if (!(temperature > 0.0)) {
    throw std::invalid_argument("temperature must be positive");
  }
  const auto logits = predict_logits(model, data);
  std::vector<SoftLabelMap> out;
  out.reserve(logits.size());
  for (const auto& z : logits) {
    out.push_back(probmap_from_logits(z, data.num_classes, data.height, data.width, temperature));
  }
  return out;
}

std::pair<std::vector<std::vector<double>>, std::vector<int>> pixel_logits(const Model& model,
                                                                           const LabeledDataset& data) {
  const auto logits = predict_logits(model, data);
  const std::size_t hw = data.height * data.width;
  std::pair<std::vector<std::vector<double>>, std::vector<int>> out;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    for (std::size_t p = 0; p < hw; ++p) {
      std::vector<double> lane(data.num_classes);
      for (std::size_t c = 0; c < data.num_classes; ++c) lane[c] = logits[i][c * hw + p];
      out.first.push_back(std::move(lane));
      out.second.push_back(data.label_maps[i][p]);
    }
  }
  return out;
}

std::vector<std::pair<std::string, double>> evaluate(const Model& model, const LabeledDataset& data,
                                                     std::size_t ece_bins) {
  const auto logits = predict_logits(model, data);
  switch (data.task) {
  case TaskKind::multiclass: {
    std::vector<int> predicted;
    predicted.reserve(logits.size());
    for (const auto& z : logits) predicted.push_back(static_cast<int>(argmax(z)));
    const auto report = calibration_report(logits, data.labels, 1.0, ece_bins);
    return {{"val_accuracy", accuracy(predicted, data.labels)}, {"val_nll", report.nll}, {"val_ece", report.ece}};
  }
  case TaskKind::multilabel: {
    std::vector<std::vector<double>> scores = logits;
    for (auto& row : scores)
      for (auto& v : row) v = sigmoid(v);
    return {{"val_map", mean_average_precision(scores, data.multilabels)}};
  }
  case TaskKind::segmentation: {
    std::vector<LabelMap> predicted;
    predicted.reserve(logits.size());
    for (const auto& z : logits) {
      predicted.push_back(argmax_map(probmap_from_logits(z, data.num_classes, data.height, data.width, 1.0)));
    }
    const auto seg = iou_dice(predicted, data.label_maps, data.num_classes, 0);
    return {{"val_miou", seg.mean_iou}, {"val_mdice", seg.mean_dice}};
  }
  }
  return {};
}

SampleBank score_samples(const Model& model, const LabeledDataset& data, BankSource source, double temperature) {
  if (!(temperature > 0.0)) {
    throw std::invalid_argument("temperature must be positive");
  }
  switch (data.task) {
  case TaskKind::multiclass: {
    auto probs = predict_logits(model, data);
    for (auto& z : probs) {
      for (auto& v : z) v /= temperature;
      softmax_inplace(z);
    }
    return build_bank_multiclass(probs, data.labels, source);
  }
  case TaskKind::multilabel: {
    auto probs = predict_logits(model, data);
    for (auto& z : probs)
      for (auto& v : z) v = sigmoid(v / temperature);
    return build_bank_multilabel(probs, data.multilabels, source);
  }
  case TaskKind::segmentation: {
    const auto maps = predict_probmaps(model, data, temperature);
    return build_bank_segmentation(maps, data.label_maps, 0, source);
  }
  }
  throw std::invalid_argument("unknown task");
}

PixelBank score_pixels(const Model& model, const LabeledDataset& data, double temperature) {
  if (data.task != TaskKind::segmentation) {
    throw std::invalid_argument("pixel banks need a segmentation dataset");
  }
  const auto maps = predict_probmaps(model, data, temperature);
  return build_pixel_bank(maps, data.label_maps);
}

} // namespace pcbls
