#include "pcbls/pacing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace pcbls {

namespace {

// Slack for products like (0.6 + 0.02 * 10) * 1000 that land a hair below an integer.
constexpr double kCountSlack = 1e-9;

void check_probs(std::span<const double> p, std::size_t expected, const char* what) {
  if (p.size() != expected) {
    throw std::invalid_argument(std::string(what) + ": probability vector has wrong length");
  }
}

} // namespace

std::string_view to_string(BankSource source) {
  switch (source) {
  case BankSource::plain: return "plain";
  case BankSource::temperature_scaled: return "ts";
  case BankSource::label_smoothed: return "ls";
  }
  return "unknown";
}

BankSource bank_source_from_string(std::string_view name) {
  if (name == "plain") return BankSource::plain;
  if (name == "temperature_scaled" || name == "ts") return BankSource::temperature_scaled;
  if (name == "label_smoothed" || name == "ls") return BankSource::label_smoothed;
  throw std::invalid_argument("unknown bank source '" + std::string(name) + "'");
}

SampleBank SampleBank::from_scores(std::span<const double> scores, BankSource source) {
  std::vector<BankEntry> entries(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!(scores[i] >= 0.0 && scores[i] <= 1.0)) {
      throw std::invalid_argument("bank score outside [0, 1] for sample " + std::to_string(i));
    }
    entries[i] = {i, scores[i]};
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const BankEntry& a, const BankEntry& b) { return a.score > b.score; });
  return SampleBank(std::move(entries), source);
}

SampleBank SampleBank::from_sorted(std::vector<BankEntry> entries, BankSource source) {
  std::unordered_set<std::size_t> seen;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i > 0 && entries[i].score > entries[i - 1].score) {
      throw std::invalid_argument("bank entries are not sorted by descending score");
    }
    if (!seen.insert(entries[i].sample_id).second) {
      throw std::invalid_argument("duplicate sample id " + std::to_string(entries[i].sample_id) + " in bank");
    }
  }
  return SampleBank(std::move(entries), source);
}

PixelBank::PixelBank(std::vector<PixelScores> maps) : maps_(std::move(maps)) {
  std::vector<double> flat;
  for (std::size_t s = 0; s < maps_.size(); ++s) {
    const auto& m = maps_[s];
    if (m.scores.size() != m.height * m.width) {
      throw std::invalid_argument("pixel bank: score count does not match HxW");
    }
    for (std::size_t p = 0; p < m.scores.size(); ++p) {
      order_.push_back({static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(p)});
      flat.push_back(m.scores[p]);
    }
  }
  std::vector<std::size_t> idx(flat.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return flat[a] > flat[b]; });
  std::vector<PixelRef> sorted(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    sorted[i] = order_[idx[i]];
  }
  order_ = std::move(sorted);
}

double pace_parameter(double lambda, double e_all, std::size_t epochs) {
  if (!(lambda > 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("initial sample ratio lambda must lie in (0, 1]");
  }
  if (!(e_all > 0.0 && e_all <= 1.0)) {
    throw std::invalid_argument("epoch ratio E_all must lie in (0, 1]");
  }
  if (epochs < 1) {
    throw std::invalid_argument("total epochs must be at least 1");
  }
  return (1.0 - lambda) / (e_all * static_cast<double>(epochs));
}

PacePlan PacePlan::create(double lambda, double e_all, std::size_t epochs, std::size_t total) {
  if (total < 1) {
    throw std::invalid_argument("pace plan needs at least one sample");
  }
  return PacePlan{lambda, e_all, epochs, total, pace_parameter(lambda, e_all, epochs)};
}

std::size_t active_count(const PacePlan& plan, std::size_t epoch) {
  const auto e = static_cast<double>(epoch);
  if (e >= plan.e_all * static_cast<double>(plan.epochs) - kCountSlack) {
    return plan.total;
  }
  const double raw = (plan.lambda + plan.mu * e) * static_cast<double>(plan.total);
  const auto count = static_cast<std::size_t>(std::floor(raw + kCountSlack));
  return std::clamp<std::size_t>(count, 1, plan.total);
}

SampleBank build_bank_multiclass(std::span<const std::vector<double>> probs, std::span<const int> labels,
                                 BankSource source) {
  if (probs.size() != labels.size()) {
    throw std::invalid_argument("bank: probability and label counts differ");
  }
  std::vector<double> scores(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= probs[i].size()) {
      throw std::invalid_argument("bank: label out of range for sample " + std::to_string(i));
    }
    scores[i] = probs[i][static_cast<std::size_t>(labels[i])];
  }
  return SampleBank::from_scores(scores, source);
}

SampleBank build_bank_multilabel(std::span<const std::vector<double>> probs,
                                 std::span<const std::vector<int>> labels, BankSource source) {
  if (probs.size() != labels.size()) {
    throw std::invalid_argument("bank: probability and label counts differ");
  }
  std::vector<double> scores(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    check_probs(probs[i], labels[i].size(), "multilabel bank");
    double pos_sum = 0.0;
    std::size_t pos = 0;
    double all_sum = 0.0;
    for (std::size_t l = 0; l < probs[i].size(); ++l) {
      all_sum += probs[i][l];
      if (labels[i][l] != 0) {
        pos_sum += probs[i][l];
        ++pos;
      }
    }
    scores[i] = pos > 0 ? pos_sum / static_cast<double>(pos)
                        : all_sum / static_cast<double>(std::max<std::size_t>(probs[i].size(), 1));
  }
  return SampleBank::from_scores(scores, source);
}

namespace {

void check_maps(const SoftLabelMap& probmap, const LabelMap& labels) {
  if (probmap.height() != labels.height() || probmap.width() != labels.width() ||
      probmap.num_classes() != labels.num_classes()) {
    throw std::invalid_argument("bank: probability map and label map shapes differ");
  }
}

} // namespace

SampleBank build_bank_segmentation(std::span<const SoftLabelMap> probmaps, std::span<const LabelMap> labelmaps,
                                   int background, BankSource source) {
  if (probmaps.size() != labelmaps.size()) {
    throw std::invalid_argument("bank: probability map and label map counts differ");
  }
  std::vector<double> scores(probmaps.size(), 0.0);
  for (std::size_t i = 0; i < probmaps.size(); ++i) {
    check_maps(probmaps[i], labelmaps[i]);
    const auto& lm = labelmaps[i];
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t y = 0; y < lm.height(); ++y) {
      for (std::size_t x = 0; x < lm.width(); ++x) {
        const int c = lm(y, x);
        if (c == background) {
          continue;
        }
        sum += probmaps[i](static_cast<std::size_t>(c), y, x);
        ++count;
      }
    }
    scores[i] = count > 0 ? sum / static_cast<double>(count) : 0.0;
  }
  return SampleBank::from_scores(scores, source);
}

PixelBank build_pixel_bank(std::span<const SoftLabelMap> probmaps, std::span<const LabelMap> labelmaps) {
  if (probmaps.size() != labelmaps.size()) {
    throw std::invalid_argument("pixel bank: probability map and label map counts differ");
  }
  std::vector<PixelScores> maps;
  maps.reserve(probmaps.size());
  for (std::size_t i = 0; i < probmaps.size(); ++i) {
    check_maps(probmaps[i], labelmaps[i]);
    const auto& lm = labelmaps[i];
    PixelScores ps{lm.height(), lm.width(), std::vector<double>(lm.pixel_count())};
    for (std::size_t y = 0; y < lm.height(); ++y) {
      for (std::size_t x = 0; x < lm.width(); ++x) {
        ps.scores[y * lm.width() + x] = probmaps[i](static_cast<std::size_t>(lm(y, x)), y, x);
      }
    }
    maps.push_back(std::move(ps));
  }
  return PixelBank(std::move(maps));
}

std::vector<std::size_t> active_set(const SampleBank& bank, const PacePlan& plan, std::size_t epoch) {
  if (bank.size() != plan.total) {
    throw std::invalid_argument("active_set: bank size " + std::to_string(bank.size()) +
                                " does not match plan N " + std::to_string(plan.total));
  }
  const std::size_t count = active_count(plan, epoch);
  std::vector<std::size_t> ids(count);
  for (std::size_t i = 0; i < count; ++i) {
    ids[i] = bank.entries()[i].sample_id;
  }
  return ids;
}

std::vector<std::vector<std::uint8_t>> pixel_mask_at(const PixelBank& bank, const PacePlan& plan,
                                                     std::size_t epoch) {
  if (bank.pixel_count() != plan.total) {
    throw std::invalid_argument("pixel_mask_at: pixel bank holds " + std::to_string(bank.pixel_count()) +
                                " pixels but plan N is " + std::to_string(plan.total));
  }
  std::vector<std::vector<std::uint8_t>> masks;
  masks.reserve(bank.sample_count());
  for (const auto& m : bank.maps()) {
    masks.emplace_back(m.scores.size(), std::uint8_t{0});
  }
  const std::size_t count = active_count(plan, epoch);
  const auto ranking = bank.ranking();
  for (std::size_t i = 0; i < count; ++i) {
    masks[ranking[i].sample][ranking[i].pixel] = 1;
  }
  return masks;
}

} // namespace pcbls
