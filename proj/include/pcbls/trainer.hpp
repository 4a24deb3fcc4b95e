#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pcbls/data.hpp"
#include "pcbls/models.hpp"
#include "pcbls/pacing.hpp"
#include "pcbls/schedules.hpp"

namespace pcbls {

enum class OptimizerKind { sgd, adam };
enum class Granularity { sample, pixel };

std::string_view to_string(OptimizerKind kind);
OptimizerKind optimizer_from_string(std::string_view name);
std::string_view to_string(Granularity g);
Granularity granularity_from_string(std::string_view name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::sgd;
  double lr = 5e-3;
  double momentum = 0.9;
  double weight_decay = 5e-3;

  friend bool operator==(const OptimizerConfig&, const OptimizerConfig&) = default;
};

struct PaceConfig {
  double lambda = 1.0;
  double e_all = 1.0;

  friend bool operator==(const PaceConfig&, const PaceConfig&) = default;
};

struct ModelConfig {
  Architecture arch = Architecture::mlp;
  std::size_t hidden = 32; // mlp
  std::size_t width1 = 8;  // tiny_fcn
  std::size_t width2 = 8;  // tiny_fcn

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct TrainConfig {
  TaskKind task = TaskKind::multiclass;
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  OptimizerConfig optimizer;
  double lr_decay = 1.0;                      // multiplicative factor, applied once
  std::optional<std::size_t> lr_decay_epoch;  // defaults to floor(0.75 * epochs)
  std::uint64_t seed = 0;
  std::optional<SmoothingSchedule> uls_schedule;
  std::optional<SmoothingSchedule> svls_schedule;
  std::size_t svls_kernel = 3;
  std::optional<PaceConfig> pace;
  Granularity granularity = Granularity::sample;
  ModelConfig model;
  std::size_t ece_bins = 10;
  std::size_t threads = 1;

  /// Throws std::invalid_argument on inconsistent settings.
  void validate() const;
  std::size_t decay_epoch() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Named hyper-parameter presets.
///   workflow_cls  multiclass, SGD, exponential ULS 0.5 / 0.9, pace 0.6 / 0.4
///   tool_cls      multilabel, Adam 1e-4, same smoothing and pace
///   segmentation  Adam 1e-4, ULS 0.6 / 0.9, SVLS 0.9 / 0.5, pixel pace 0.8 / 0.4
///   anti, random, linear   workflow_cls smoothing ablations without pacing
///   baseline      plain cross-entropy; ls  constant smoothing 0.1
TrainConfig preset(std::string_view name);
std::vector<std::string> preset_names();

struct EpochRecord {
  std::size_t epoch = 0;
  std::size_t active_count = 0;
  double eps = 0.0;
  double sigma = 0.0;
  double train_loss = 0.0;
  std::vector<std::pair<std::string, double>> metrics;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainResult {
  Model model;
  std::vector<EpochRecord> records;
};

/// Frozen confidence banks consumed by pacing.
struct PacingBanks {
  std::optional<SampleBank> samples;
  std::optional<PixelBank> pixels;
};

struct TrainHooks {
  /// Called for every sample that took part in a batch, with the L2 norm of its gradient share.
  std::function<void(std::size_t epoch, std::size_t sample_id, double grad_norm)> on_sample_gradient;
};

/// Curriculum training loop.
///
/// Each epoch: smoothing factors from the schedules, active samples (or pixels) from the pace
/// plan, soft targets from the factors, one optimizer pass over the shuffled active set, then
/// validation on the full, unsmoothed validation set.
TrainResult train(const TrainConfig& config, const LabeledDataset& train_data, const LabeledDataset& val_data,
                  const PacingBanks& banks = {}, const TrainHooks& hooks = {});

/// Plain cross-entropy training: no smoothing, no pacing.
TrainResult train_baseline(TrainConfig config, const LabeledDataset& train_data, const LabeledDataset& val_data);

Model make_model(const ModelConfig& config, const LabeledDataset& data, std::uint64_t seed);

/// `epoch,active_count,eps,sigma,train_loss,<metrics...>`.
std::string metrics_csv(const std::vector<EpochRecord>& records);

} // namespace pcbls
