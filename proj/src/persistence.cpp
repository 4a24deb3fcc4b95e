#include "pcbls/persistence.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include "pcbls/corruption.hpp"
#include "pcbls/errors.hpp"

namespace pcbls {

namespace {

constexpr std::string_view kCheckpointMagic = "PCKPT1";
constexpr std::string_view kPixelMagic = "PCBL";
constexpr std::string_view kBankHeader = "sample_id,score,source";
constexpr std::string_view kManifestHeader = "orig_id,kind,severity,path";

class Writer {
public:
  void bytes(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

private:
  std::vector<std::uint8_t> out_;
};

class Reader {
public:
  Reader(std::span<const std::uint8_t> in, const char* what) : in_(in), what_(what) {}

  void expect(std::string_view magic) {
    need(magic.size());
    if (std::memcmp(in_.data() + pos_, magic.data(), magic.size()) != 0) {
      throw FormatError(std::string(what_) + ": bad magic or unsupported format version");
    }
    pos_ += magic.size();
  }
  std::uint8_t u8() {
    need(1);
    return in_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  float f32() { return std::bit_cast<float>(u32()); }
  void finish() const {
    if (pos_ != in_.size()) {
      throw FormatError(std::string(what_) + ": trailing bytes");
    }
  }

private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) {
      throw FormatError(std::string(what_) + ": truncated");
    }
  }

  std::span<const std::uint8_t> in_;
  const char* what_;
  std::size_t pos_ = 0;
};

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

template <typename T>
T parse_number(std::string_view field, const char* what) {
  T value{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw FormatError(std::string(what) + ": cannot parse number '" + std::string(field) + "'");
  }
  return value;
}

} // namespace

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot write " + tmp.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      throw std::runtime_error("write failed for " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string read_text(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return {bytes.begin(), bytes.end()};
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.bytes(kCheckpointMagic);
  w.u8(static_cast<std::uint8_t>(ckpt.model.architecture()));
  w.u32(static_cast<std::uint32_t>(ckpt.model.dims().size()));
  for (auto d : ckpt.model.dims()) w.u32(static_cast<std::uint32_t>(d));
  for (double p : ckpt.model.params()) w.f64(p);
  w.u64(ckpt.epoch);
  return w.take();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes, "checkpoint");
  r.expect(kCheckpointMagic);
  const std::uint8_t tag = r.u8();
  if (tag < 1 || tag > 3) {
    throw FormatError("checkpoint: unknown architecture tag " + std::to_string(tag));
  }
  const auto arch = static_cast<Architecture>(tag);
  const std::uint32_t ndims = r.u32();
  if (ndims > 16) {
    throw FormatError("checkpoint: implausible dimension count");
  }
  std::vector<std::size_t> dims(ndims);
  for (auto& d : dims) d = r.u32();
  std::size_t count = 0;
  try {
    count = Model::parameter_count(arch, dims);
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  const std::size_t header = kCheckpointMagic.size() + 1 + 4 + 4 * static_cast<std::size_t>(ndims);
  if (bytes.size() != header + 8 * count + 8) {
    throw FormatError("checkpoint: length does not match the declared architecture");
  }
  std::vector<double> params(count);
  for (auto& p : params) p = r.f64();
  const std::uint64_t epoch = r.u64();
  r.finish();
  return {Model(arch, std::move(dims), std::move(params)), epoch};
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file_atomic(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

std::string encode_bank_csv(const SampleBank& bank) {
  std::string out(kBankHeader);
  out += '\n';
  char line[96];
  const std::string source(to_string(bank.source()));
  for (const auto& e : bank.entries()) {
    std::snprintf(line, sizeof(line), "%zu,%.9f,", e.sample_id, e.score);
    out += line;
    out += source;
    out += '\n';
  }
  return out;
}

SampleBank decode_bank_csv(std::string_view text) {
  const auto lines = lines_of(text);
  if (lines.empty() || lines.front() != kBankHeader) {
    throw FormatError("bank: missing header '" + std::string(kBankHeader) + "'");
  }
  std::vector<BankEntry> entries;
  BankSource source = BankSource::plain;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split_csv_line(lines[i]);
    if (fields.size() != 3) {
      throw FormatError("bank: row " + std::to_string(i) + " does not have 3 fields");
    }
    const BankSource row_source = bank_source_from_string(fields[2]);
    if (i > 1 && row_source != source) {
      throw FormatError("bank: mixed source tags");
    }
    source = row_source;
    entries.push_back({parse_number<std::size_t>(fields[0], "bank"), parse_number<double>(fields[1], "bank")});
  }
  try {
    return SampleBank::from_sorted(std::move(entries), source);
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("bank: ") + e.what());
  }
}

void save_bank(const std::filesystem::path& path, const SampleBank& bank) {
  write_file_atomic(path, encode_bank_csv(bank));
}

SampleBank load_bank(const std::filesystem::path& path) { return decode_bank_csv(read_text(path)); }

std::vector<std::uint8_t> encode_pixel_scores(const PixelScores& scores) {
  Writer w;
  w.bytes(kPixelMagic);
  w.u32(static_cast<std::uint32_t>(scores.height));
  w.u32(static_cast<std::uint32_t>(scores.width));
  for (double s : scores.scores) w.f32(static_cast<float>(s));
  return w.take();
}

PixelScores decode_pixel_scores(std::span<const std::uint8_t> bytes) {
  Reader r(bytes, "pixel bank");
  r.expect(kPixelMagic);
  PixelScores out;
  out.height = r.u32();
  out.width = r.u32();
  if (bytes.size() != 12 + 4 * out.height * out.width) {
    throw FormatError("pixel bank: payload length does not match H x W");
  }
  out.scores.resize(out.height * out.width);
  for (auto& s : out.scores) s = static_cast<double>(r.f32());
  r.finish();
  return out;
}

void save_pixel_bank(const std::filesystem::path& dir, const PixelBank& bank) {
  std::filesystem::create_directories(dir);
  char name[32];
  for (std::size_t i = 0; i < bank.sample_count(); ++i) {
    std::snprintf(name, sizeof(name), "sample_%06zu.pcbl", i);
    write_file_atomic(dir / name, encode_pixel_scores(bank.maps()[i]));
  }
}

PixelBank load_pixel_bank(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw std::runtime_error("pixel bank directory " + dir.string() + " does not exist");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".pcbl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<PixelScores> maps;
  maps.reserve(files.size());
  for (const auto& f : files) maps.push_back(decode_pixel_scores(read_file(f)));
  return PixelBank(std::move(maps));
}

std::string encode_manifest(std::span<const ManifestRow> rows) {
  std::ostringstream out;
  out << kManifestHeader << '\n';
  for (const auto& r : rows) {
    out << r.orig_id << ',' << to_string(r.kind) << ',' << r.severity << ',' << r.path << '\n';
  }
  return out.str();
}

std::vector<ManifestRow> decode_manifest(std::string_view text) {
  const auto lines = lines_of(text);
  if (lines.empty() || lines.front() != kManifestHeader) {
    throw FormatError("manifest: missing header '" + std::string(kManifestHeader) + "'");
  }
  std::vector<ManifestRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split_csv_line(lines[i]);
    if (f.size() != 4) {
      throw FormatError("manifest: row " + std::to_string(i) + " does not have 4 fields");
    }
    rows.push_back({parse_number<std::size_t>(f[0], "manifest"), corruption_kind_from_string(f[1]),
                    parse_number<int>(f[2], "manifest"), f[3]});
  }
  return rows;
}

void write_manifest(const std::filesystem::path& path, std::span<const ManifestRow> rows) {
  write_file_atomic(path, encode_manifest(rows));
}

std::vector<ManifestRow> read_manifest(const std::filesystem::path& path) { return decode_manifest(read_text(path)); }

} // namespace pcbls
