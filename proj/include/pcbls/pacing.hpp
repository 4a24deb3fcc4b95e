#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "pcbls/soft_labels.hpp"

namespace pcbls {

/// Which baseline produced the confidences in a bank.
enum class BankSource { plain, temperature_scaled, label_smoothed };

std::string_view to_string(BankSource source);
BankSource bank_source_from_string(std::string_view name);

struct BankEntry {
  std::size_t sample_id;
  double score;

  friend bool operator==(const BankEntry&, const BankEntry&) = default;
};

/// Samples sorted from easy (high confidence) to hard (low confidence).
class SampleBank {
public:
  /// Sorts scores[i] for sample i descending; ties keep index order.
  static SampleBank from_scores(std::span<const double> scores, BankSource source);

  /// Wraps entries that are already sorted; validates order and id uniqueness.
  static SampleBank from_sorted(std::vector<BankEntry> entries, BankSource source);

  std::span<const BankEntry> entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  BankSource source() const noexcept { return source_; }

private:
  SampleBank(std::vector<BankEntry> entries, BankSource source)
      : entries_(std::move(entries)), source_(source) {}

  std::vector<BankEntry> entries_;
  BankSource source_;
};

/// Per-pixel true-class confidences for one sample.
struct PixelScores {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> scores;

  friend bool operator==(const PixelScores&, const PixelScores&) = default;
};

/// Pixel confidences over the whole training set with one global easy-to-hard ranking.
class PixelBank {
public:
  explicit PixelBank(std::vector<PixelScores> maps);

  std::span<const PixelScores> maps() const noexcept { return maps_; }
  std::size_t sample_count() const noexcept { return maps_.size(); }
  std::size_t pixel_count() const noexcept { return order_.size(); }

  struct PixelRef {
    std::uint32_t sample;
    std::uint32_t pixel;
  };
  /// Pixels sorted by descending score; ties keep (sample, pixel) order.
  std::span<const PixelRef> ranking() const noexcept { return order_; }

private:
  std::vector<PixelScores> maps_;
  std::vector<PixelRef> order_;
};

/// Sample-introduction plan: L = floor((lambda + mu * e) * N) before epoch E_all * E, N after.
struct PacePlan {
  double lambda = 1.0;
  double e_all = 1.0;
  std::size_t epochs = 1;
  std::size_t total = 1;
  double mu = 0.0;

  static PacePlan create(double lambda, double e_all, std::size_t epochs, std::size_t total);
};

/// mu = (1 - lambda) / (E_all * E).
double pace_parameter(double lambda, double e_all, std::size_t epochs);

std::size_t active_count(const PacePlan& plan, std::size_t epoch);

SampleBank build_bank_multiclass(std::span<const std::vector<double>> probs, std::span<const int> labels,
                                 BankSource source = BankSource::plain);

/// Mean probability over positive labels; all labels when a sample has none.
SampleBank build_bank_multilabel(std::span<const std::vector<double>> probs,
                                 std::span<const std::vector<int>> labels,
                                 BankSource source = BankSource::plain);

/// Mean true-class probability over foreground pixels; frames with no foreground score 0.
SampleBank build_bank_segmentation(std::span<const SoftLabelMap> probmaps, std::span<const LabelMap> labelmaps,
                                   int background = 0, BankSource source = BankSource::plain);

PixelBank build_pixel_bank(std::span<const SoftLabelMap> probmaps, std::span<const LabelMap> labelmaps);

/// First active_count ids of the bank, in bank order.
std::vector<std::size_t> active_set(const SampleBank& bank, const PacePlan& plan, std::size_t epoch);

/// Binary masks keeping the globally top active_count pixels.
std::vector<std::vector<std::uint8_t>> pixel_mask_at(const PixelBank& bank, const PacePlan& plan,
                                                     std::size_t epoch);

} // namespace pcbls
