#include "pcbls/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>

#include "pcbls/errors.hpp"
#include "pcbls/persistence.hpp"

namespace pcbls {

Image image_from_planes(std::span<const double> planes, std::size_t channels, std::size_t height, std::size_t width) {
  const std::size_t hw = height * width;
  if (planes.size() != channels * hw) {
    throw std::invalid_argument("image_from_planes: plane buffer does not match C x H x W");
  }
  Image img{height, width, channels, std::vector<double>(planes.size())};
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t p = 0; p < hw; ++p) {
      img.pixels[p * channels + c] = planes[c * hw + p];
    }
  }
  return img;
}

std::vector<double> planes_from_image(const Image& image) {
  const std::size_t hw = image.height * image.width;
  std::vector<double> planes(image.pixels.size());
  for (std::size_t c = 0; c < image.channels; ++c) {
    for (std::size_t p = 0; p < hw; ++p) {
      planes[c * hw + p] = image.pixels[p * image.channels + c];
    }
  }
  return planes;
}

std::vector<std::uint8_t> encode_pnm(const Image& image) {
  if (image.channels != 1 && image.channels != 3) {
    throw std::invalid_argument("PNM output supports 1 or 3 channels");
  }
  const std::string header = std::string(image.channels == 1 ? "P5" : "P6") + "\n" + std::to_string(image.width) +
                             " " + std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(header.size() + image.pixels.size());
  for (double v : image.pixels) {
    out.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  }
  return out;
}

namespace {

std::size_t read_header_number(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    if (bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(bytes[pos]) != 0) {
      ++pos;
    } else {
      break;
    }
  }
  std::size_t value = 0;
  std::size_t digits = 0;
  while (pos < bytes.size() && std::isdigit(bytes[pos]) != 0) {
    value = value * 10 + static_cast<std::size_t>(bytes[pos] - '0');
    ++pos;
    ++digits;
  }
  if (digits == 0) {
    throw FormatError("PNM: malformed header");
  }
  return value;
}

} // namespace

Image decode_pnm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw FormatError("PNM: expected P5 or P6 magic");
  }
  Image img;
  img.channels = bytes[1] == '5' ? 1 : 3;
  std::size_t pos = 2;
  img.width = read_header_number(bytes, pos);
  img.height = read_header_number(bytes, pos);
  const std::size_t maxval = read_header_number(bytes, pos);
  if (maxval != 255) {
    throw FormatError("PNM: only maxval 255 is supported");
  }
  if (pos >= bytes.size() || std::isspace(bytes[pos]) == 0) {
    throw FormatError("PNM: missing separator after header");
  }
  ++pos;
  const std::size_t count = img.height * img.width * img.channels;
  if (bytes.size() - pos != count) {
    throw FormatError("PNM: pixel payload has " + std::to_string(bytes.size() - pos) + " bytes, expected " +
                      std::to_string(count));
  }
  img.pixels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    img.pixels[i] = static_cast<double>(bytes[pos + i]) / 255.0;
  }
  return img;
}

void write_pnm(const std::filesystem::path& path, const Image& image) { write_file_atomic(path, encode_pnm(image)); }

Image read_pnm(const std::filesystem::path& path) { return decode_pnm(read_file(path)); }

} // namespace pcbls
