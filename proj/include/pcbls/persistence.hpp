#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pcbls/models.hpp"
#include "pcbls/pacing.hpp"

namespace pcbls {

struct ManifestRow;

/// Writes to a sibling temp file, then renames over the target.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);

/// `PCKPT1`, architecture byte, u32 dim count, u32 dims, f64 parameters, u64 epoch; little-endian.
struct Checkpoint {
  Model model;
  std::uint64_t epoch = 0;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// CSV `sample_id,score,source`, descending by score, 9 decimal digits.
std::string encode_bank_csv(const SampleBank& bank);
SampleBank decode_bank_csv(std::string_view text);
void save_bank(const std::filesystem::path& path, const SampleBank& bank);
SampleBank load_bank(const std::filesystem::path& path);

/// `PCBL`, u32 H, u32 W, H*W f32 scores; one sidecar per sample.
std::vector<std::uint8_t> encode_pixel_scores(const PixelScores& scores);
PixelScores decode_pixel_scores(std::span<const std::uint8_t> bytes);
void save_pixel_bank(const std::filesystem::path& dir, const PixelBank& bank);
PixelBank load_pixel_bank(const std::filesystem::path& dir);

/// CSV `orig_id,kind,severity,path`.
std::string encode_manifest(std::span<const ManifestRow> rows);
std::vector<ManifestRow> decode_manifest(std::string_view text);
void write_manifest(const std::filesystem::path& path, std::span<const ManifestRow> rows);
std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);

/// Split one CSV line on commas (no quoting; none of the formats here need it).
std::vector<std::string> split_csv_line(std::string_view line);

} // namespace pcbls
