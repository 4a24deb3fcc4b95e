#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace pcbls {

/// Interleaved H x W x C image with values in [0, 1].
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 1;
  std::vector<double> pixels;

  double& at(std::size_t y, std::size_t x, std::size_t c) { return pixels[(y * width + x) * channels + c]; }
  double at(std::size_t y, std::size_t x, std::size_t c) const { return pixels[(y * width + x) * channels + c]; }

  friend bool operator==(const Image&, const Image&) = default;
};

/// Channel-major model input (C x H x W) to an interleaved image, and back.
Image image_from_planes(std::span<const double> planes, std::size_t channels, std::size_t height, std::size_t width);
std::vector<double> planes_from_image(const Image& image);

/// Binary PGM (P5, 1 channel) or PPM (P6, 3 channels), 8-bit, maxval 255.
std::vector<std::uint8_t> encode_pnm(const Image& image);
Image decode_pnm(std::span<const std::uint8_t> bytes);

void write_pnm(const std::filesystem::path& path, const Image& image);
Image read_pnm(const std::filesystem::path& path);

} // namespace pcbls
