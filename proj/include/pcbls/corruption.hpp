#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pcbls/data.hpp"
#include "pcbls/image_io.hpp"
#include "pcbls/models.hpp"

namespace pcbls {

enum class CorruptionKind {
  gaussian_noise,
  shot_noise,
  impulse_noise,
  defocus_blur,
  glass_blur,
  motion_blur,
  zoom_blur,
  fog,
  brightness,
  contrast,
  pixelate,
  jpeg_like,
};

inline constexpr std::size_t kCorruptionKinds = 12;
inline constexpr int kSeverityLevels = 5;

std::string_view to_string(CorruptionKind kind);
CorruptionKind corruption_kind_from_string(std::string_view name);
std::span<const CorruptionKind> all_corruption_kinds();

/// One parameter row. Meaning per kind:
///   gaussian_noise  primary = noise sigma
///   shot_noise      primary = photon count lambda (variance x / lambda)
///   impulse_noise   primary = fraction of values set to 0 or 1
///   defocus_blur    primary = disk radius in pixels
///   glass_blur      primary = swap rounds, secondary = swap radius
///   motion_blur     primary = line length in pixels (odd)
///   zoom_blur       primary = number of zoomed copies, secondary = largest zoom factor
///   fog             primary = haze blend weight
///   brightness      primary = additive offset
///   contrast        primary = scale about the image mean
///   pixelate        primary = block size
///   jpeg_like       primary = quantization-table scale (0 disables quantization)
struct CorruptionParams {
  double primary = 0.0;
  double secondary = 0.0;

  friend bool operator==(const CorruptionParams&, const CorruptionParams&) = default;
};

struct CorruptionSpec {
  CorruptionKind kind = CorruptionKind::gaussian_noise;
  int severity = 1;
  std::uint64_t seed = 0;
};

using SeverityTable = std::array<std::array<CorruptionParams, kSeverityLevels>, kCorruptionKinds>;

const SeverityTable& severity_table();
CorruptionParams severity_params(CorruptionKind kind, int severity);

/// Parameters that leave every image unchanged.
CorruptionParams identity_params(CorruptionKind kind);

/// Scalar that grows with corruption strength; used to check table monotonicity.
double corruption_strength(CorruptionKind kind, const CorruptionParams& params);

Image corrupt(const Image& image, const CorruptionSpec& spec);
Image corrupt_with(const Image& image, CorruptionKind kind, const CorruptionParams& params, std::uint64_t seed);

/// Seed for image i under (kind, severity).
std::uint64_t corruption_seed(std::uint64_t base_seed, CorruptionKind kind, int severity, std::size_t image_index);

struct ManifestRow {
  std::size_t orig_id = 0;
  CorruptionKind kind = CorruptionKind::gaussian_noise;
  int severity = 1;
  std::string path; // relative to the manifest directory

  friend bool operator==(const ManifestRow&, const ManifestRow&) = default;
};

/// Writes <out>/<kind>/<severity>/<id>.pgm|ppm and <out>/manifest.csv.
std::vector<ManifestRow> corrupt_dataset(const LabeledDataset& data, std::span<const CorruptionKind> kinds,
                                         std::span<const int> severities, std::uint64_t base_seed,
                                         const std::filesystem::path& out_dir);

struct RobustnessRow {
  CorruptionKind kind;
  std::array<double, kSeverityLevels> per_severity{}; // accuracy in percent
  double mean = 0.0;
};

struct RobustnessTable {
  std::vector<RobustnessRow> rows;
  double clean_accuracy = 0.0; // percent
};

/// Accuracy per (kind, severity) from manifest images; kinds follow enum order.
RobustnessTable robustness_report(const Model& model, std::span<const ManifestRow> manifest,
                                  const std::filesystem::path& manifest_dir, const LabeledDataset& clean);

/// Same table computed in memory with the corrupt_dataset seed derivation.
RobustnessTable robustness_report(const Model& model, const LabeledDataset& clean,
                                  std::span<const CorruptionKind> kinds, std::uint64_t base_seed);

/// CSV: kind,severity_1..severity_5,mean then a final `clean` row.
std::string robustness_csv(const RobustnessTable& table);

} // namespace pcbls
