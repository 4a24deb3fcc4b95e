#include "pcbls/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <stdexcept>
#include <string>

#include "pcbls/errors.hpp"
#include "pcbls/rng.hpp"

namespace pcbls {

namespace {

constexpr std::size_t kCifarSide = 32;
constexpr std::size_t kCifarPixels = 3 * kCifarSide * kCifarSide;
constexpr std::size_t kCifarRecord = 1 + kCifarPixels;
constexpr std::size_t kShapesChannels = 3;

std::vector<std::size_t> permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    std::swap(idx[i - 1], idx[rng.below(i)]);
  }
  return idx;
}

} // namespace

std::string_view to_string(TaskKind task) {
  switch (task) {
  case TaskKind::multiclass: return "multiclass";
  case TaskKind::multilabel: return "multilabel";
  case TaskKind::segmentation: return "segmentation";
  }
  return "unknown";
}

TaskKind task_from_string(std::string_view name) {
  for (auto t : {TaskKind::multiclass, TaskKind::multilabel, TaskKind::segmentation}) {
    if (to_string(t) == name) {
      return t;
    }
  }
  throw std::invalid_argument("unknown task '" + std::string(name) + "'");
}

void LabeledDataset::validate() const {
  for (const auto& x : inputs) {
    if (x.size() != input_size()) {
      throw std::invalid_argument("dataset: input length does not match C x H x W");
    }
  }
  switch (task) {
  case TaskKind::multiclass:
    if (labels.size() != inputs.size()) {
      throw std::invalid_argument("dataset: label count does not match input count");
    }
    for (int y : labels) {
      if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
        throw std::invalid_argument("dataset: class index " + std::to_string(y) + " out of range");
      }
    }
    break;
  case TaskKind::multilabel:
    if (multilabels.size() != inputs.size()) {
      throw std::invalid_argument("dataset: label count does not match input count");
    }
    for (const auto& y : multilabels) {
      if (y.size() != num_classes) {
        throw std::invalid_argument("dataset: multi-label vector has wrong length");
      }
    }
    break;
  case TaskKind::segmentation:
    if (label_maps.size() != inputs.size()) {
      throw std::invalid_argument("dataset: label map count does not match input count");
    }
    for (const auto& m : label_maps) {
      if (m.height() != height || m.width() != width || m.num_classes() != num_classes) {
        throw std::invalid_argument("dataset: label map shape does not match inputs");
      }
    }
    break;
  }
}

void flip_labels(LabeledDataset& data, double fraction, std::uint64_t seed) {
  if (data.task != TaskKind::multiclass) {
    throw std::invalid_argument("flip_labels needs a multiclass dataset");
  }
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("flip_labels: fraction must be in [0, 1]");
  }
  const std::size_t n = data.size();
  const auto k = data.num_classes;
  Rng rng(seed);
  const auto flips = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  const auto order = permutation(n, rng);
  for (std::size_t j = 0; j < flips; ++j) {
    const std::size_t i = order[j];
    const auto shift = 1 + rng.below(k - 1);
    data.labels[i] = static_cast<int>((static_cast<std::size_t>(data.labels[i]) + shift) % k);
  }
}

LabeledDataset gen_blobs(const BlobsParams& p) {
  if (p.classes < 2 || p.per_class == 0 || p.dim == 0) {
    throw std::invalid_argument("gen_blobs: need classes >= 2, per_class >= 1, dim >= 1");
  }
  if (!(p.spread >= 0.0) || !(p.label_noise >= 0.0 && p.label_noise <= 1.0)) {
    throw std::invalid_argument("gen_blobs: spread must be >= 0 and label_noise in [0, 1]");
  }
  Rng center_rng(named_seed(p.seed, "centers"));
  std::vector<std::vector<double>> centers(p.classes, std::vector<double>(p.dim));
  for (auto& c : centers) {
    for (auto& v : c) {
      v = center_rng.uniform(0.25, 0.75);
    }
  }

  LabeledDataset out;
  out.task = TaskKind::multiclass;
  out.channels = 1;
  out.height = 1;
  out.width = p.dim;
  out.num_classes = p.classes;
  const std::size_t n = p.classes * p.per_class;
  Rng point_rng(named_seed(p.seed, "points"));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t cls = i % p.classes;
    std::vector<double> x(p.dim);
    for (std::size_t d = 0; d < p.dim; ++d) {
      x[d] = std::clamp(point_rng.normal(centers[cls][d], p.spread), 0.0, 1.0);
    }
    out.inputs.push_back(std::move(x));
    out.labels.push_back(static_cast<int>(cls));
  }

  flip_labels(out, p.label_noise, named_seed(p.seed, "label_noise"));
  return out;
}

LabeledDataset gen_multilabel(std::size_t labels, std::size_t n, std::size_t dim, std::uint64_t seed) {
  if (labels < 1 || n == 0 || dim == 0) {
    throw std::invalid_argument("gen_multilabel: need labels >= 1, n >= 1, dim >= 1");
  }
  Rng concept_rng(named_seed(seed, "concepts"));
  std::vector<std::vector<double>> weights(labels, std::vector<double>(dim));
  std::vector<double> thresholds(labels);
  for (std::size_t l = 0; l < labels; ++l) {
    double norm2 = 0.0;
    for (auto& w : weights[l]) {
      w = concept_rng.normal();
      norm2 += w * w;
    }
    // Margin std is |w| / sqrt(12); a 0.52-sigma threshold gives about 30% positives.
    thresholds[l] = 0.52 * std::sqrt(norm2 / 12.0);
  }

  LabeledDataset out;
  out.task = TaskKind::multilabel;
  out.channels = 1;
  out.height = 1;
  out.width = dim;
  out.num_classes = labels;
  Rng point_rng(named_seed(seed, "points"));
  std::vector<double> top_margin(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x(dim);
    for (auto& v : x) {
      v = point_rng.uniform();
    }
    std::vector<int> y(labels, 0);
    double best = -1e300;
    for (std::size_t l = 0; l < labels; ++l) {
      double m = -thresholds[l];
      for (std::size_t d = 0; d < dim; ++d) {
        m += weights[l][d] * (x[d] - 0.5);
      }
      y[l] = m > 0.0 ? 1 : 0;
      best = std::max(best, m);
    }
    top_margin[i] = best;
    out.inputs.push_back(std::move(x));
    out.multilabels.push_back(std::move(y));
  }
  const bool has_empty = std::any_of(out.multilabels.begin(), out.multilabels.end(),
                                     [](const auto& y) { return std::all_of(y.begin(), y.end(), [](int v) { return v == 0; }); });
  if (n >= 50 && !has_empty) {
    const auto weakest = static_cast<std::size_t>(std::min_element(top_margin.begin(), top_margin.end()) - top_margin.begin());
    std::fill(out.multilabels[weakest].begin(), out.multilabels[weakest].end(), 0);
  }
  return out;
}

LabeledDataset gen_shapes_seg(std::size_t height, std::size_t width, std::size_t foreground_classes, std::size_t n,
                              std::uint64_t seed) {
  if (height < 16 || width < 16) {
    throw std::invalid_argument("gen_shapes_seg: H and W must be at least 16");
  }
  if (foreground_classes < 1 || n == 0) {
    throw std::invalid_argument("gen_shapes_seg: need at least one foreground class and one frame");
  }
  Rng palette_rng(named_seed(seed, "palette"));
  std::vector<std::array<double, kShapesChannels>> colors(foreground_classes + 1);
  colors[0] = {0.1, 0.1, 0.1};
  for (std::size_t c = 1; c <= foreground_classes; ++c) {
    for (auto& v : colors[c]) {
      v = palette_rng.uniform(0.3, 1.0);
    }
    // Keep one dominant channel per class so classes stay separable.
    colors[c][(c - 1) % kShapesChannels] = 1.0;
  }

  LabeledDataset out;
  out.task = TaskKind::segmentation;
  out.channels = kShapesChannels;
  out.height = height;
  out.width = width;
  out.num_classes = foreground_classes + 1;
  Rng rng(named_seed(seed, "frames"));
  const std::size_t hw = height * width;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<int> labels(hw, 0);
    if (i % 10 != 9) {
      const std::size_t shapes = 1 + rng.below(2);
      for (std::size_t s = 0; s < shapes; ++s) {
        const auto cls = static_cast<int>(1 + rng.below(foreground_classes));
        const bool disk = rng.uniform() < 0.5;
        const std::size_t max_extent = std::min(height, width) / 2;
        const std::size_t extent = 4 + rng.below(max_extent - 3);
        const std::size_t y0 = rng.below(height - extent + 1);
        const std::size_t x0 = rng.below(width - extent + 1);
        const double r = static_cast<double>(extent) / 2.0;
        const double cy = static_cast<double>(y0) + r - 0.5;
        const double cx = static_cast<double>(x0) + r - 0.5;
        for (std::size_t y = y0; y < y0 + extent; ++y) {
          for (std::size_t x = x0; x < x0 + extent; ++x) {
            const double dy = static_cast<double>(y) - cy;
            const double dx = static_cast<double>(x) - cx;
            if (!disk || dy * dy + dx * dx <= r * r) {
              labels[y * width + x] = cls;
            }
          }
        }
      }
    }
    std::vector<double> image(kShapesChannels * hw);
    for (std::size_t p = 0; p < hw; ++p) {
      const auto& color = colors[static_cast<std::size_t>(labels[p])];
      for (std::size_t c = 0; c < kShapesChannels; ++c) {
        image[c * hw + p] = std::clamp(color[c] + rng.normal(0.0, 0.05), 0.0, 1.0);
      }
    }
    out.inputs.push_back(std::move(image));
    out.label_maps.emplace_back(height, width, foreground_classes + 1, std::move(labels));
  }
  return out;
}

LabeledDataset parse_cifar10(std::span<const std::uint8_t> bytes) {
  if (bytes.size() % kCifarRecord != 0) {
    throw FormatError("CIFAR-10: length " + std::to_string(bytes.size()) + " is not a multiple of " +
                      std::to_string(kCifarRecord));
  }
  LabeledDataset out;
  out.task = TaskKind::multiclass;
  out.channels = 3;
  out.height = kCifarSide;
  out.width = kCifarSide;
  out.num_classes = 10;
  const std::size_t records = bytes.size() / kCifarRecord;
  out.inputs.reserve(records);
  out.labels.reserve(records);
  for (std::size_t r = 0; r < records; ++r) {
    const auto record = bytes.subspan(r * kCifarRecord, kCifarRecord);
    if (record[0] > 9) {
      throw FormatError("CIFAR-10: record " + std::to_string(r) + " has label byte " + std::to_string(record[0]));
    }
    out.labels.push_back(record[0]);
    std::vector<double> pixels(kCifarPixels);
    for (std::size_t i = 0; i < kCifarPixels; ++i) {
      pixels[i] = static_cast<double>(record[1 + i]) / 255.0;
    }
    out.inputs.push_back(std::move(pixels));
  }
  return out;
}

namespace {

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

LabeledDataset load_cifar10(const std::filesystem::path& path) {
  if (!std::filesystem::is_directory(path)) {
    return parse_cifar10(read_bytes(path));
  }
  LabeledDataset all;
  bool any = false;
  for (int b = 1; b <= 5; ++b) {
    const auto file = path / ("data_batch_" + std::to_string(b) + ".bin");
    if (!std::filesystem::exists(file)) {
      continue;
    }
    auto part = parse_cifar10(read_bytes(file));
    if (!any) {
      all = std::move(part);
      any = true;
      continue;
    }
    std::move(part.inputs.begin(), part.inputs.end(), std::back_inserter(all.inputs));
    all.labels.insert(all.labels.end(), part.labels.begin(), part.labels.end());
  }
  if (!any) {
    throw std::runtime_error("no data_batch_*.bin files under " + path.string());
  }
  return all;
}

LabeledDataset subset(const LabeledDataset& data, std::span<const std::size_t> indices) {
  LabeledDataset out = data;
  out.inputs.clear();
  out.labels.clear();
  out.multilabels.clear();
  out.label_maps.clear();
  for (std::size_t i : indices) {
    out.inputs.push_back(data.inputs.at(i));
    switch (data.task) {
    case TaskKind::multiclass: out.labels.push_back(data.labels.at(i)); break;
    case TaskKind::multilabel: out.multilabels.push_back(data.multilabels.at(i)); break;
    case TaskKind::segmentation: out.label_maps.push_back(data.label_maps.at(i)); break;
    }
  }
  return out;
}

std::pair<LabeledDataset, LabeledDataset> split_dataset(const LabeledDataset& data, std::size_t val_count,
                                                        std::uint64_t seed) {
  if (val_count >= data.size()) {
    throw std::invalid_argument("split_dataset: validation count must be smaller than the dataset");
  }
  Rng rng(named_seed(seed, "split"));
  auto order = permutation(data.size(), rng);
  std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(val_count));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(val_count), order.end());
  std::sort(val.begin(), val.end());
  std::sort(train.begin(), train.end());
  auto train_set = subset(data, train);
  auto val_set = subset(data, val);
  train_set.split = Split::train;
  val_set.split = Split::val;
  return {std::move(train_set), std::move(val_set)};
}

} // namespace pcbls
