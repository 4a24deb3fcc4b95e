#include "pcbls/corruption.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "pcbls/numerics.hpp"
#include "pcbls/persistence.hpp"
#include "pcbls/rng.hpp"

namespace pcbls {

namespace {

constexpr std::array<CorruptionKind, kCorruptionKinds> kAllKinds = {
    CorruptionKind::gaussian_noise, CorruptionKind::shot_noise,  CorruptionKind::impulse_noise,
    CorruptionKind::defocus_blur,   CorruptionKind::glass_blur,  CorruptionKind::motion_blur,
    CorruptionKind::zoom_blur,      CorruptionKind::fog,         CorruptionKind::brightness,
    CorruptionKind::contrast,       CorruptionKind::pixelate,    CorruptionKind::jpeg_like,
};

// Rows follow kAllKinds; columns are severities 1..5.
const SeverityTable kSeverityTable = {{
    {{{0.08}, {0.12}, {0.18}, {0.26}, {0.38}}},
    {{{60.0}, {25.0}, {12.0}, {5.0}, {3.0}}},
    {{{0.03}, {0.06}, {0.09}, {0.17}, {0.27}}},
    {{{1.0}, {2.0}, {3.0}, {4.0}, {6.0}}},
    {{{1.0, 1.0}, {2.0, 1.0}, {3.0, 2.0}, {4.0, 2.0}, {5.0, 3.0}}},
    {{{3.0}, {5.0}, {7.0}, {9.0}, {11.0}}},
    {{{3.0, 1.06}, {4.0, 1.11}, {5.0, 1.16}, {6.0, 1.21}, {7.0, 1.26}}},
    {{{0.15}, {0.25}, {0.35}, {0.45}, {0.55}}},
    {{{0.1}, {0.2}, {0.3}, {0.4}, {0.5}}},
    {{{0.4}, {0.3}, {0.2}, {0.1}, {0.05}}},
    {{{2.0}, {3.0}, {4.0}, {6.0}, {8.0}}},
    {{{2.0}, {2.78}, {3.33}, {5.0}, {7.14}}},
}};

// Standard JPEG luminance quantization table.
constexpr std::array<double, 64> kLumaQuant = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,  14, 13, 16, 24, 40,  57,
    69, 56, 14, 17, 22,  29,  51,  87,  80, 62, 18, 22, 37,  56,  68,  109, 103, 77, 24, 35, 55, 64,
    81, 104, 113, 92, 49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99,
};

std::size_t kind_index(CorruptionKind kind) { return static_cast<std::size_t>(kind); }

void clip(Image& img) {
  for (auto& v : img.pixels) {
    v = std::clamp(v, 0.0, 1.0);
  }
}

std::size_t clamp_coord(long long v, std::size_t n) {
  if (v < 0) return 0;
  return std::min(static_cast<std::size_t>(v), n - 1);
}

Image convolve(const Image& img, const Kernel2D& kernel) {
  Image out = img;
  const std::size_t hw = img.height * img.width;
  std::vector<double> plane(hw);
  std::vector<double> result(hw);
  for (std::size_t c = 0; c < img.channels; ++c) {
    for (std::size_t p = 0; p < hw; ++p) plane[p] = img.pixels[p * img.channels + c];
    conv2d_same(plane, result, img.height, img.width, kernel);
    for (std::size_t p = 0; p < hw; ++p) out.pixels[p * img.channels + c] = result[p];
  }
  return out;
}

Kernel2D disk_kernel(std::size_t radius) {
  const std::size_t size = 2 * radius + 1;
  std::vector<double> w(size * size, 0.0);
  const auto r = static_cast<double>(radius);
  double total = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    for (std::size_t j = 0; j < size; ++j) {
      const double di = static_cast<double>(i) - r;
      const double dj = static_cast<double>(j) - r;
      if (di * di + dj * dj <= r * r) {
        w[i * size + j] = 1.0;
        total += 1.0;
      }
    }
  }
  for (auto& v : w) v /= total;
  return Kernel2D(size, std::move(w));
}

Kernel2D line_kernel(std::size_t length, double angle) {
  const std::size_t size = length % 2 == 1 ? length : length + 1;
  const auto half = static_cast<double>(size / 2);
  std::vector<double> w(size * size, 0.0);
  for (std::size_t t = 0; t < length; ++t) {
    const double offset = static_cast<double>(t) - static_cast<double>(length - 1) / 2.0;
    const auto i = static_cast<std::size_t>(std::lround(half + offset * std::sin(angle)));
    const auto j = static_cast<std::size_t>(std::lround(half + offset * std::cos(angle)));
    w[i * size + j] = 1.0;
  }
  double total = 0.0;
  for (double v : w) total += v;
  for (auto& v : w) v /= total;
  return Kernel2D(size, std::move(w));
}

double bilinear(const Image& img, double y, double x, std::size_t c) {
  y = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
  x = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
  const auto y0 = static_cast<std::size_t>(std::floor(y));
  const auto x0 = static_cast<std::size_t>(std::floor(x));
  const std::size_t y1 = std::min(y0 + 1, img.height - 1);
  const std::size_t x1 = std::min(x0 + 1, img.width - 1);
  const double fy = y - static_cast<double>(y0);
  const double fx = x - static_cast<double>(x0);
  return (1 - fy) * ((1 - fx) * img.at(y0, x0, c) + fx * img.at(y0, x1, c)) +
         fy * ((1 - fx) * img.at(y1, x0, c) + fx * img.at(y1, x1, c));
}

Image zoom_blur(const Image& img, std::size_t copies, double max_zoom) {
  if (copies <= 1) {
    return img;
  }
  Image out = img;
  std::fill(out.pixels.begin(), out.pixels.end(), 0.0);
  const double cy = static_cast<double>(img.height - 1) / 2.0;
  const double cx = static_cast<double>(img.width - 1) / 2.0;
  for (std::size_t j = 0; j < copies; ++j) {
    const double zoom = 1.0 + (max_zoom - 1.0) * static_cast<double>(j) / static_cast<double>(copies - 1);
    for (std::size_t y = 0; y < img.height; ++y) {
      for (std::size_t x = 0; x < img.width; ++x) {
        const double sy = cy + (static_cast<double>(y) - cy) / zoom;
        const double sx = cx + (static_cast<double>(x) - cx) / zoom;
        for (std::size_t c = 0; c < img.channels; ++c) {
          out.at(y, x, c) += bilinear(img, sy, sx, c);
        }
      }
    }
  }
  for (auto& v : out.pixels) v /= static_cast<double>(copies);
  return out;
}

Image glass_blur(const Image& img, std::size_t rounds, std::size_t radius, Rng& rng) {
  Image out = img;
  if (radius == 0) {
    return out;
  }
  const auto span = static_cast<std::uint64_t>(2 * radius + 1);
  const auto r = static_cast<long long>(radius);
  for (std::size_t round = 0; round < rounds; ++round) {
    for (std::size_t y = 0; y < img.height; ++y) {
      for (std::size_t x = 0; x < img.width; ++x) {
        const long long dy = static_cast<long long>(rng.below(span)) - r;
        const long long dx = static_cast<long long>(rng.below(span)) - r;
        const std::size_t ny = clamp_coord(static_cast<long long>(y) + dy, img.height);
        const std::size_t nx = clamp_coord(static_cast<long long>(x) + dx, img.width);
        for (std::size_t c = 0; c < img.channels; ++c) {
          std::swap(out.at(y, x, c), out.at(ny, nx, c));
        }
      }
    }
  }
  return out;
}

Image fog(const Image& img, double weight, Rng& rng) {
  constexpr std::size_t kGrid = 4;
  Image haze{kGrid, kGrid, 1, std::vector<double>(kGrid * kGrid)};
  for (auto& v : haze.pixels) v = rng.uniform(0.5, 1.0);
  Image out = img;
  const double sy = img.height > 1 ? static_cast<double>(kGrid - 1) / static_cast<double>(img.height - 1) : 0.0;
  const double sx = img.width > 1 ? static_cast<double>(kGrid - 1) / static_cast<double>(img.width - 1) : 0.0;
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      const double h = bilinear(haze, static_cast<double>(y) * sy, static_cast<double>(x) * sx, 0);
      for (std::size_t c = 0; c < img.channels; ++c) {
        out.at(y, x, c) = (1.0 - weight) * img.at(y, x, c) + weight * h;
      }
    }
  }
  return out;
}

Image pixelate(const Image& img, std::size_t block) {
  Image out = img;
  if (block <= 1) {
    return out;
  }
  for (std::size_t by = 0; by < img.height; by += block) {
    for (std::size_t bx = 0; bx < img.width; bx += block) {
      const std::size_t ey = std::min(by + block, img.height);
      const std::size_t ex = std::min(bx + block, img.width);
      const auto area = static_cast<double>((ey - by) * (ex - bx));
      for (std::size_t c = 0; c < img.channels; ++c) {
        double sum = 0.0;
        for (std::size_t y = by; y < ey; ++y)
          for (std::size_t x = bx; x < ex; ++x) sum += img.at(y, x, c);
        for (std::size_t y = by; y < ey; ++y)
          for (std::size_t x = bx; x < ex; ++x) out.at(y, x, c) = sum / area;
      }
    }
  }
  return out;
}

// Orthonormal 8-point DCT-II basis.
std::array<double, 64> dct_basis() {
  std::array<double, 64> basis{};
  for (std::size_t u = 0; u < 8; ++u) {
    const double scale = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
    for (std::size_t x = 0; x < 8; ++x) {
      basis[u * 8 + x] = scale * std::cos((2.0 * static_cast<double>(x) + 1.0) * static_cast<double>(u) *
                                          std::numbers::pi / 16.0);
    }
  }
  return basis;
}

Image jpeg_like(const Image& img, double quant_scale) {
  Image out = img;
  if (quant_scale <= 0.0) {
    return out;
  }
  static const std::array<double, 64> basis = dct_basis();
  std::array<double, 64> quant{};
  for (std::size_t i = 0; i < 64; ++i) {
    quant[i] = std::max(1.0, std::round(kLumaQuant[i] * quant_scale));
  }
  std::array<double, 64> block{};
  std::array<double, 64> tmp{};
  std::array<double, 64> coef{};
  for (std::size_t c = 0; c < img.channels; ++c) {
    for (std::size_t by = 0; by < img.height; by += 8) {
      for (std::size_t bx = 0; bx < img.width; bx += 8) {
        for (std::size_t y = 0; y < 8; ++y) {
          for (std::size_t x = 0; x < 8; ++x) {
            const std::size_t sy = std::min(by + y, img.height - 1);
            const std::size_t sx = std::min(bx + x, img.width - 1);
            block[y * 8 + x] = img.at(sy, sx, c) * 255.0 - 128.0;
          }
        }
        // coef = B * block * B^T
        for (std::size_t u = 0; u < 8; ++u)
          for (std::size_t x = 0; x < 8; ++x) {
            double s = 0.0;
            for (std::size_t y = 0; y < 8; ++y) s += basis[u * 8 + y] * block[y * 8 + x];
            tmp[u * 8 + x] = s;
          }
        for (std::size_t u = 0; u < 8; ++u)
          for (std::size_t v = 0; v < 8; ++v) {
            double s = 0.0;
            for (std::size_t x = 0; x < 8; ++x) s += tmp[u * 8 + x] * basis[v * 8 + x];
            coef[u * 8 + v] = std::round(s / quant[u * 8 + v]) * quant[u * 8 + v];
          }
        // block = B^T * coef * B
        for (std::size_t y = 0; y < 8; ++y)
          for (std::size_t v = 0; v < 8; ++v) {
            double s = 0.0;
            for (std::size_t u = 0; u < 8; ++u) s += basis[u * 8 + y] * coef[u * 8 + v];
            tmp[y * 8 + v] = s;
          }
        for (std::size_t y = 0; y < 8; ++y)
          for (std::size_t x = 0; x < 8; ++x) {
            double s = 0.0;
            for (std::size_t v = 0; v < 8; ++v) s += tmp[y * 8 + v] * basis[v * 8 + x];
            if (by + y < img.height && bx + x < img.width) {
              out.at(by + y, bx + x, c) = (s + 128.0) / 255.0;
            }
          }
      }
    }
  }
  return out;
}

std::vector<int> predict_classes(const Model& model, std::span<const std::vector<double>> inputs, Spatial spatial) {
  std::vector<int> out;
  out.reserve(inputs.size());
  for (const auto& x : inputs) {
    out.push_back(static_cast<int>(argmax(forward(model, x, spatial))));
  }
  return out;
}

double percent_correct(const Model& model, std::span<const std::vector<double>> inputs, std::span<const int> labels,
                       Spatial spatial) {
  const auto predicted = predict_classes(model, inputs, spatial);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predicted[i] == labels[i] ? 1 : 0;
  return labels.empty() ? 0.0 : 100.0 * static_cast<double>(hits) / static_cast<double>(labels.size());
}

void require_multiclass(const Model& model, const LabeledDataset& clean) {
  if (clean.task != TaskKind::multiclass) {
    throw std::invalid_argument("robustness report needs a multiclass dataset");
  }
  if (model.is_dense() || model.output_count() != clean.num_classes || model.input_size() != clean.input_size()) {
    throw std::invalid_argument("robustness report: model does not match the dataset");
  }
}

} // namespace

std::string_view to_string(CorruptionKind kind) {
  switch (kind) {
  case CorruptionKind::gaussian_noise: return "gaussian_noise";
  case CorruptionKind::shot_noise: return "shot_noise";
  case CorruptionKind::impulse_noise: return "impulse_noise";
  case CorruptionKind::defocus_blur: return "defocus_blur";
  case CorruptionKind::glass_blur: return "glass_blur";
  case CorruptionKind::motion_blur: return "motion_blur";
  case CorruptionKind::zoom_blur: return "zoom_blur";
  case CorruptionKind::fog: return "fog";
  case CorruptionKind::brightness: return "brightness";
  case CorruptionKind::contrast: return "contrast";
  case CorruptionKind::pixelate: return "pixelate";
  case CorruptionKind::jpeg_like: return "jpeg_like";
  }
  return "unknown";
}

CorruptionKind corruption_kind_from_string(std::string_view name) {
  for (auto k : kAllKinds) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown corruption kind '" + std::string(name) + "'");
}

std::span<const CorruptionKind> all_corruption_kinds() { return kAllKinds; }

const SeverityTable& severity_table() { return kSeverityTable; }

CorruptionParams severity_params(CorruptionKind kind, int severity) {
  if (severity < 1 || severity > kSeverityLevels) {
    throw std::invalid_argument("corruption severity must be in 1..5, got " + std::to_string(severity));
  }
  return kSeverityTable.at(kind_index(kind))[static_cast<std::size_t>(severity - 1)];
}

CorruptionParams identity_params(CorruptionKind kind) {
  switch (kind) {
  case CorruptionKind::gaussian_noise: return {0.0};
  case CorruptionKind::shot_noise: return {0.0}; // lambda = 0 means no photon noise
  case CorruptionKind::impulse_noise: return {0.0};
  case CorruptionKind::defocus_blur: return {0.0};
  case CorruptionKind::glass_blur: return {0.0, 0.0};
  case CorruptionKind::motion_blur: return {1.0};
  case CorruptionKind::zoom_blur: return {1.0, 1.0};
  case CorruptionKind::fog: return {0.0};
  case CorruptionKind::brightness: return {0.0};
  case CorruptionKind::contrast: return {1.0};
  case CorruptionKind::pixelate: return {1.0};
  case CorruptionKind::jpeg_like: return {0.0};
  }
  return {};
}

double corruption_strength(CorruptionKind kind, const CorruptionParams& p) {
  switch (kind) {
  case CorruptionKind::shot_noise: return p.primary > 0.0 ? 1.0 / p.primary : 0.0;
  case CorruptionKind::glass_blur: return p.primary * p.secondary;
  case CorruptionKind::zoom_blur: return p.primary * (p.secondary - 1.0);
  case CorruptionKind::contrast: return 1.0 - p.primary;
  default: return p.primary;
  }
}

Image corrupt_with(const Image& image, CorruptionKind kind, const CorruptionParams& params, std::uint64_t seed) {
  if (image.pixels.size() != image.height * image.width * image.channels || image.pixels.empty()) {
    throw std::invalid_argument("corrupt: image buffer does not match H x W x C");
  }
  Rng rng(seed);
  Image out = image;
  switch (kind) {
  case CorruptionKind::gaussian_noise:
    if (params.primary > 0.0) {
      for (auto& v : out.pixels) v += rng.normal(0.0, params.primary);
    }
    break;
  case CorruptionKind::shot_noise:
    if (params.primary > 0.0) {
      for (auto& v : out.pixels) v += rng.normal() * std::sqrt(std::max(v, 0.0) / params.primary);
    }
    break;
  case CorruptionKind::impulse_noise:
    for (auto& v : out.pixels) {
      if (rng.uniform() < params.primary) {
        v = rng.uniform() < 0.5 ? 0.0 : 1.0;
      }
    }
    break;
  case CorruptionKind::defocus_blur:
    if (params.primary >= 1.0) {
      out = convolve(image, disk_kernel(static_cast<std::size_t>(params.primary)));
    }
    break;
  case CorruptionKind::glass_blur:
    out = glass_blur(image, static_cast<std::size_t>(params.primary), static_cast<std::size_t>(params.secondary), rng);
    break;
  case CorruptionKind::motion_blur:
    if (params.primary > 1.0) {
      const double angle = rng.uniform(-std::numbers::pi / 4.0, std::numbers::pi / 4.0);
      out = convolve(image, line_kernel(static_cast<std::size_t>(params.primary), angle));
    }
    break;
  case CorruptionKind::zoom_blur:
    out = zoom_blur(image, static_cast<std::size_t>(params.primary), params.secondary);
    break;
  case CorruptionKind::fog:
    if (params.primary > 0.0) {
      out = fog(image, params.primary, rng);
    }
    break;
  case CorruptionKind::brightness:
    for (auto& v : out.pixels) v += params.primary;
    break;
  case CorruptionKind::contrast: {
    if (params.primary != 1.0) {
      double mean = 0.0;
      for (double v : image.pixels) mean += v;
      mean /= static_cast<double>(image.pixels.size());
      for (auto& v : out.pixels) v = (v - mean) * params.primary + mean;
    }
    break;
  }
  case CorruptionKind::pixelate:
    out = pixelate(image, static_cast<std::size_t>(params.primary));
    break;
  case CorruptionKind::jpeg_like:
    out = jpeg_like(image, params.primary);
    break;
  }
  clip(out);
  return out;
}

Image corrupt(const Image& image, const CorruptionSpec& spec) {
  return corrupt_with(image, spec.kind, severity_params(spec.kind, spec.severity), spec.seed);
}

std::uint64_t corruption_seed(std::uint64_t base_seed, CorruptionKind kind, int severity, std::size_t image_index) {
  std::uint64_t s = mix_seed(base_seed, kind_index(kind));
  s = mix_seed(s, static_cast<std::uint64_t>(severity));
  return mix_seed(s, image_index);
}

std::vector<ManifestRow> corrupt_dataset(const LabeledDataset& data, std::span<const CorruptionKind> kinds,
                                         std::span<const int> severities, std::uint64_t base_seed,
                                         const std::filesystem::path& out_dir) {
  for (int s : severities) {
    if (s < 1 || s > kSeverityLevels) {
      throw std::invalid_argument("corrupt_dataset: severity " + std::to_string(s) + " outside 1..5");
    }
  }
  std::filesystem::create_directories(out_dir);
  const char* extension = data.channels == 1 ? ".pgm" : ".ppm";
  std::vector<ManifestRow> rows;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Image clean = image_from_planes(data.inputs[i], data.channels, data.height, data.width);
    for (CorruptionKind kind : kinds) {
      for (int severity : severities) {
        const Image img = corrupt(clean, {kind, severity, corruption_seed(base_seed, kind, severity, i)});
        char name[32];
        std::snprintf(name, sizeof(name), "%06zu", i);
        const std::filesystem::path rel =
            std::filesystem::path(std::string(to_string(kind))) / std::to_string(severity) / (std::string(name) + extension);
        std::filesystem::create_directories((out_dir / rel).parent_path());
        write_pnm(out_dir / rel, img);
        rows.push_back({i, kind, severity, rel.generic_string()});
      }
    }
  }
  write_manifest(out_dir / "manifest.csv", rows);
  return rows;
}

RobustnessTable robustness_report(const Model& model, std::span<const ManifestRow> manifest,
                                  const std::filesystem::path& manifest_dir, const LabeledDataset& clean) {
  require_multiclass(model, clean);
  // (kind, severity) -> (hits, count)
  std::map<std::pair<std::size_t, int>, std::pair<std::size_t, std::size_t>> cells;
  const Spatial spatial{clean.height, clean.width};
  for (const auto& row : manifest) {
    if (row.orig_id >= clean.size()) {
      throw std::invalid_argument("manifest row refers to image " + std::to_string(row.orig_id) +
                                  " beyond the clean set");
    }
    const Image img = read_pnm(manifest_dir / row.path);
    if (img.channels != clean.channels || img.height != clean.height || img.width != clean.width) {
      throw std::invalid_argument("manifest image " + row.path + " does not match the clean set's shape");
    }
    const auto predicted = static_cast<int>(argmax(forward(model, planes_from_image(img), spatial)));
    auto& cell = cells[{kind_index(row.kind), row.severity}];
    cell.first += predicted == clean.labels[row.orig_id] ? 1 : 0;
    cell.second += 1;
  }
  RobustnessTable table;
  for (CorruptionKind kind : kAllKinds) {
    const bool present = std::any_of(cells.begin(), cells.end(), [&](const auto& c) { return c.first.first == kind_index(kind); });
    if (!present) {
      continue;
    }
    RobustnessRow row{kind, {}, 0.0};
    for (int s = 1; s <= kSeverityLevels; ++s) {
      const auto it = cells.find({kind_index(kind), s});
      if (it == cells.end()) {
        throw std::invalid_argument("manifest is missing severity " + std::to_string(s) + " for " +
                                    std::string(to_string(kind)));
      }
      row.per_severity[static_cast<std::size_t>(s - 1)] =
          100.0 * static_cast<double>(it->second.first) / static_cast<double>(it->second.second);
      row.mean += row.per_severity[static_cast<std::size_t>(s - 1)];
    }
    row.mean /= kSeverityLevels;
    table.rows.push_back(row);
  }
  table.clean_accuracy = percent_correct(model, clean.inputs, clean.labels, spatial);
  return table;
}

RobustnessTable robustness_report(const Model& model, const LabeledDataset& clean,
                                  std::span<const CorruptionKind> kinds, std::uint64_t base_seed) {
  require_multiclass(model, clean);
  const Spatial spatial{clean.height, clean.width};
  RobustnessTable table;
  for (CorruptionKind kind : kinds) {
    RobustnessRow row{kind, {}, 0.0};
    for (int s = 1; s <= kSeverityLevels; ++s) {
      std::vector<std::vector<double>> inputs;
      inputs.reserve(clean.size());
      for (std::size_t i = 0; i < clean.size(); ++i) {
        const Image img = image_from_planes(clean.inputs[i], clean.channels, clean.height, clean.width);
        inputs.push_back(planes_from_image(corrupt(img, {kind, s, corruption_seed(base_seed, kind, s, i)})));
      }
      row.per_severity[static_cast<std::size_t>(s - 1)] = percent_correct(model, inputs, clean.labels, spatial);
      row.mean += row.per_severity[static_cast<std::size_t>(s - 1)];
    }
    row.mean /= kSeverityLevels;
    table.rows.push_back(row);
  }
  table.clean_accuracy = percent_correct(model, clean.inputs, clean.labels, spatial);
  return table;
}

std::string robustness_csv(const RobustnessTable& table) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(4);
  out << "kind";
  for (int s = 1; s <= kSeverityLevels; ++s) out << ",severity_" << s;
  out << ",mean\n";
  for (const auto& row : table.rows) {
    out << to_string(row.kind);
    for (double v : row.per_severity) out << ',' << v;
    out << ',' << row.mean << '\n';
  }
  out << "clean";
  for (int s = 1; s <= kSeverityLevels; ++s) out << ",NA";
  out << ',' << table.clean_accuracy << '\n';
  return out.str();
}

} // namespace pcbls
