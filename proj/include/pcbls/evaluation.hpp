#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "pcbls/data.hpp"
#include "pcbls/models.hpp"
#include "pcbls/pacing.hpp"
#include "pcbls/soft_labels.hpp"

namespace pcbls {

/// Raw model outputs for every sample.
std::vector<std::vector<double>> predict_logits(const Model& model, const LabeledDataset& data);

/// Per-pixel softmax(logits / T) maps for a segmentation set.
std::vector<SoftLabelMap> predict_probmaps(const Model& model, const LabeledDataset& data, double temperature = 1.0);

/// Per-pixel logit vectors flattened over all frames, with matching labels (for temperature fitting).
std::pair<std::vector<std::vector<double>>, std::vector<int>> pixel_logits(const Model& model,
                                                                           const LabeledDataset& data);

/// Task metrics on a dataset, named as they appear in metrics CSVs.
///   multiclass    val_accuracy, val_nll, val_ece
///   multilabel    val_map
///   segmentation  val_miou, val_mdice
std::vector<std::pair<std::string, double>> evaluate(const Model& model, const LabeledDataset& data,
                                                     std::size_t ece_bins = 10);

/// Checks that a model's input and output shapes fit a dataset's task.
void check_compatible(const Model& model, const LabeledDataset& data);

/// Sample bank scored by a frozen model, with probabilities computed at temperature T.
SampleBank score_samples(const Model& model, const LabeledDataset& data, BankSource source, double temperature = 1.0);

PixelBank score_pixels(const Model& model, const LabeledDataset& data, double temperature = 1.0);

} // namespace pcbls
