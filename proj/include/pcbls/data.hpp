#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "pcbls/soft_labels.hpp"

namespace pcbls {

enum class TaskKind { multiclass, multilabel, segmentation };
enum class Split { train, val };

std::string_view to_string(TaskKind task);
TaskKind task_from_string(std::string_view name);

/// Inputs are stored channel-major (C x H x W) as reals in [0, 1].
struct LabeledDataset {
  TaskKind task = TaskKind::multiclass;
  Split split = Split::train;
  std::size_t channels = 1;
  std::size_t height = 1;
  std::size_t width = 1;
  /// Classes for multiclass, labels for multilabel, classes including background for segmentation.
  std::size_t num_classes = 2;

  std::vector<std::vector<double>> inputs;
  std::vector<int> labels;                   // multiclass
  std::vector<std::vector<int>> multilabels; // multilabel, 0/1 per label
  std::vector<LabelMap> label_maps;          // segmentation

  std::size_t size() const noexcept { return inputs.size(); }
  std::size_t input_size() const noexcept { return channels * height * width; }

  /// Throws std::invalid_argument when counts or ranges are inconsistent.
  void validate() const;

  friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;
};

struct BlobsParams {
  std::size_t classes = 8;
  std::size_t per_class = 125;
  std::size_t dim = 16;
  double spread = 0.1;
  double label_noise = 0.0;
  std::uint64_t seed = 0;
};

/// Seeded Gaussian clusters clipped to [0, 1]; a label_noise fraction of labels is flipped
/// to a different class drawn uniformly.
LabeledDataset gen_blobs(const BlobsParams& params);

/// Moves exactly round(fraction * N) seeded-random labels to a different class.
void flip_labels(LabeledDataset& data, double fraction, std::uint64_t seed);

/// Each label is a seeded linear concept over uniform inputs; at least one all-negative
/// sample is guaranteed when n >= 50.
LabeledDataset gen_multilabel(std::size_t labels, std::size_t n, std::size_t dim, std::uint64_t seed);

/// Seeded rectangles and disks rendered into 3 channels with a matching label map
/// (background = 0). Every tenth frame is left empty.
LabeledDataset gen_shapes_seg(std::size_t height, std::size_t width, std::size_t foreground_classes, std::size_t n,
                              std::uint64_t seed);

/// CIFAR-10 binary records: 1 label byte then 3072 channel-major pixel bytes.
/// A directory loads data_batch_1..5.bin; a file loads that file.
LabeledDataset load_cifar10(const std::filesystem::path& path);

/// Parse CIFAR-10 records from memory.
LabeledDataset parse_cifar10(std::span<const std::uint8_t> bytes);

/// Rows picked by index, in the given order.
LabeledDataset subset(const LabeledDataset& data, std::span<const std::size_t> indices);

/// Seeded disjoint split; both halves keep ascending original order.
std::pair<LabeledDataset, LabeledDataset> split_dataset(const LabeledDataset& data, std::size_t val_count,
                                                        std::uint64_t seed);

} // namespace pcbls
