#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "pcbls/corruption.hpp"
#include "pcbls/data.hpp"
#include "pcbls/errors.hpp"
#include "pcbls/image_io.hpp"
#include "pcbls/persistence.hpp"
#include "pcbls/rng.hpp"

using namespace pcbls;
namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> cifar_record(std::uint8_t label, std::uint8_t offset = 0) {
  std::vector<std::uint8_t> rec(3073);
  rec[0] = label;
  for (std::size_t i = 0; i < 3072; ++i) rec[1 + i] = static_cast<std::uint8_t>((i + offset) % 256);
  return rec;
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

template <class Decode>
void rejects_magic_flips(const std::vector<std::uint8_t>& bytes, std::size_t magic_len, Decode decode) {
  for (std::size_t i = 0; i < magic_len; ++i) {
    auto bad = bytes;
    bad[i] ^= 0x20;
    CHECK_THROWS_AS(decode(bad), FormatError);
  }
}

std::vector<std::uint8_t> as_bytes(const std::string& s) { return {s.begin(), s.end()}; }

} // namespace

TEST_SUITE("data_io") {
  TEST_CASE("blobs size, range and replay") {
    BlobsParams p;
    p.seed = 3;
    const auto a = gen_blobs(p);
    CHECK(a.size() == 1000);
    CHECK(a.input_size() == 16);
    CHECK_NOTHROW(a.validate());
    CHECK(a == gen_blobs(p));
    for (const auto& x : a.inputs)
      for (double v : x) CHECK((v >= 0.0 && v <= 1.0));
    p.seed = 4;
    CHECK_FALSE(a == gen_blobs(p));
  }

  TEST_CASE("noise-free tight blobs are separable") {
    BlobsParams p;
    p.spread = 0.0;
    p.per_class = 5;
    const auto d = gen_blobs(p);
    for (std::size_t i = 0; i < d.size(); ++i) {
      for (std::size_t j = 0; j < d.size(); ++j) {
        CHECK((d.inputs[i] == d.inputs[j]) == (d.labels[i] == d.labels[j]));
      }
    }
  }

  TEST_CASE("label noise flips the stated fraction") {
    BlobsParams p;
    p.seed = 9;
    const auto clean = gen_blobs(p);
    p.label_noise = 0.2;
    const auto noisy = gen_blobs(p);
    std::size_t changed = 0;
    for (std::size_t i = 0; i < clean.size(); ++i) changed += clean.labels[i] != noisy.labels[i];
    CHECK(changed == 200);
    auto copy = clean;
    flip_labels(copy, 0.1, 5);
    changed = 0;
    for (std::size_t i = 0; i < clean.size(); ++i) changed += clean.labels[i] != copy.labels[i];
    CHECK(changed == 100);
  }

  TEST_CASE("multilabel generator") {
    const auto d = gen_multilabel(5, 200, 8, 7);
    CHECK_NOTHROW(d.validate());
    bool all_negative = false;
    for (const auto& y : d.multilabels) {
      CHECK(y.size() == 5);
      const auto count = std::count(y.begin(), y.end(), 1);
      CHECK(count >= 0);
      CHECK(count <= 5);
      if (count == 0) all_negative = true;
    }
    CHECK(all_negative);
    CHECK(d == gen_multilabel(5, 200, 8, 7));
  }

  TEST_CASE("shapes generator") {
    const auto d = gen_shapes_seg(16, 16, 3, 40, 2);
    CHECK_NOTHROW(d.validate());
    CHECK(d.channels == 3);
    CHECK(d.num_classes == 4);
    std::size_t empty = 0;
    for (const auto& m : d.label_maps) {
      const auto idx = m.indices();
      CHECK(*std::max_element(idx.begin(), idx.end()) < 4);
      if (std::all_of(idx.begin(), idx.end(), [](int v) { return v == 0; })) ++empty;
    }
    CHECK(empty >= 1);
    CHECK(d == gen_shapes_seg(16, 16, 3, 40, 2));
  }

  TEST_CASE("cifar fixture") {
    const auto dir = fixture::temp_dir("cifar");
    const auto rec = cifar_record(7);
    write_bytes(dir / "one.bin", rec);
    const auto d = load_cifar10(dir / "one.bin");
    REQUIRE(d.size() == 1);
    CHECK(d.labels[0] == 7);
    CHECK(d.channels == 3);
    CHECK(d.height == 32);
    CHECK(d.width == 32);
    for (std::size_t i = 0; i < 3072; ++i) CHECK(d.inputs[0][i] == static_cast<double>(rec[1 + i]) / 255.0);

    write_bytes(dir / "empty.bin", {});
    CHECK(load_cifar10(dir / "empty.bin").size() == 0);

    std::vector<std::uint8_t> truncated(rec.begin(), rec.end() - 1);
    write_bytes(dir / "short.bin", truncated);
    CHECK_THROWS_AS(load_cifar10(dir / "short.bin"), FormatError);
    CHECK_THROWS_AS(parse_cifar10(cifar_record(10)), FormatError);
  }

  TEST_CASE("cifar directory loads the five training batches in order") {
    const auto dir = fixture::temp_dir("cifar_dir");
    for (int b = 1; b <= 5; ++b) {
      auto bytes = cifar_record(static_cast<std::uint8_t>(b));
      const auto second = cifar_record(static_cast<std::uint8_t>(b + 1), 3);
      bytes.insert(bytes.end(), second.begin(), second.end());
      write_bytes(dir / ("data_batch_" + std::to_string(b) + ".bin"), bytes);
    }
    write_bytes(dir / "test_batch.bin", cifar_record(0));
    const auto d = load_cifar10(dir);
    CHECK(d.size() == 10);
    CHECK(d.labels == std::vector<int>{1, 2, 2, 3, 3, 4, 4, 5, 5, 6});
  }

  TEST_CASE("split is disjoint, exhaustive and sorted") {
    BlobsParams p;
    p.per_class = 10;
    const auto d = gen_blobs(p);
    const auto [train, val] = split_dataset(d, 20, 4);
    CHECK(train.size() == 60);
    CHECK(val.size() == 20);
    std::multiset<std::vector<double>> seen;
    for (const auto& x : train.inputs) seen.insert(x);
    for (const auto& x : val.inputs) seen.insert(x);
    CHECK(seen == std::multiset<std::vector<double>>(d.inputs.begin(), d.inputs.end()));
    CHECK(split_dataset(d, 20, 4).second == val);
    CHECK_THROWS_AS(split_dataset(d, 80, 4), std::invalid_argument);
  }

  TEST_CASE("pnm round trip and rejection") {
    Rng rng(60);
    for (std::size_t channels : {1u, 3u}) {
      Image img{5, 7, channels, std::vector<double>(35 * channels)};
      for (double& v : img.pixels) v = static_cast<double>(rng.below(256)) / 255.0;
      const auto bytes = encode_pnm(img);
      CHECK(decode_pnm(bytes) == img);
      rejects_magic_flips(bytes, 2, [](const std::vector<std::uint8_t>& b) { return decode_pnm(b); });
      auto truncated = bytes;
      truncated.pop_back();
      CHECK_THROWS_AS(decode_pnm(truncated), FormatError);
    }
    const std::string commented = "P5\n# note\n2 1\n255\n\x10\x20";
    const auto img = decode_pnm(as_bytes(commented));
    CHECK(img.width == 2);
    CHECK(img.pixels[1] == 32.0 / 255.0);
  }

  TEST_CASE("planes and images convert both ways") {
    Rng rng(61);
    std::vector<double> planes(3 * 4 * 2);
    for (double& v : planes) v = rng.uniform();
    const auto img = image_from_planes(planes, 3, 4, 2);
    CHECK(img.at(1, 0, 2) == planes[2 * 8 + 1 * 2 + 0]);
    CHECK(planes_from_image(img) == planes);
  }

  TEST_CASE("checkpoint round trip") {
    const Checkpoint ckpt{Model::tiny_fcn(3, 4, 5, 2, 8), 17};
    const auto bytes = encode_checkpoint(ckpt);
    const auto back = decode_checkpoint(bytes);
    CHECK(back.model == ckpt.model);
    CHECK(back.epoch == 17);
    CHECK(encode_checkpoint(back) == bytes);
    rejects_magic_flips(bytes, 6, [](const std::vector<std::uint8_t>& b) { return decode_checkpoint(b); });
    auto truncated = bytes;
    truncated.pop_back();
    CHECK_THROWS_AS(decode_checkpoint(truncated), FormatError);
    auto bad_arch = bytes;
    bad_arch[6] = 9;
    CHECK_THROWS_AS(decode_checkpoint(bad_arch), FormatError);

    const auto dir = fixture::temp_dir("ckpt");
    save_checkpoint(dir / "m.ckpt", ckpt);
    CHECK(read_file(dir / "m.ckpt") == bytes);
    CHECK(load_checkpoint(dir / "m.ckpt").model == ckpt.model);
  }

  TEST_CASE("bank csv round trip") {
    const std::vector<double> scores{0.123456789123, 0.9, 0.5, 0.9};
    const auto bank = SampleBank::from_scores(scores, BankSource::temperature_scaled);
    const auto text = encode_bank_csv(bank);
    CHECK(text.rfind("sample_id,score,source\n", 0) == 0);
    CHECK(text.find("0.123456789,ts") != std::string::npos);
    const auto back = decode_bank_csv(text);
    CHECK(back.source() == BankSource::temperature_scaled);
    REQUIRE(back.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(back.entries()[i].sample_id == bank.entries()[i].sample_id);
    CHECK(back.entries()[3].score == 0.123456789);
    CHECK(encode_bank_csv(back) == text);
    rejects_magic_flips(as_bytes(text), 9, [](const std::vector<std::uint8_t>& b) {
      return decode_bank_csv(std::string(b.begin(), b.end()));
    });
    CHECK_THROWS_AS(decode_bank_csv("sample_id,score,source\n0,0.2,plain\n1,0.5,plain\n"), FormatError);
  }

  TEST_CASE("pixel score sidecars") {
    const PixelScores scores{2, 3, {0.1, 0.25, 0.5, 0.75, 1.0, 0.0}};
    const auto bytes = encode_pixel_scores(scores);
    CHECK(bytes.size() == 4 + 8 + 6 * 4);
    const auto back = decode_pixel_scores(bytes);
    CHECK(back.height == 2);
    CHECK(back.width == 3);
    for (std::size_t i = 0; i < 6; ++i) CHECK(back.scores[i] == static_cast<double>(static_cast<float>(scores.scores[i])));
    rejects_magic_flips(bytes, 4, [](const std::vector<std::uint8_t>& b) { return decode_pixel_scores(b); });

    const auto dir = fixture::temp_dir("pixel_bank");
    const PixelBank bank({scores, PixelScores{2, 3, {0.5, 0.5, 0.5, 0.5, 0.5, 0.5}}});
    save_pixel_bank(dir, bank);
    CHECK(fs::exists(dir / "sample_000001.pcbl"));
    const auto loaded = load_pixel_bank(dir);
    CHECK(loaded.sample_count() == 2);
    CHECK(loaded.maps()[0] == back);
  }

  TEST_CASE("manifest round trip") {
    const std::vector<ManifestRow> rows{{0, CorruptionKind::fog, 2, "fog/2/000000.pgm"},
                                        {5, CorruptionKind::jpeg_like, 5, "jpeg_like/5/000005.pgm"}};
    const auto text = encode_manifest(rows);
    CHECK(decode_manifest(text) == rows);
    rejects_magic_flips(as_bytes(text), 7, [](const std::vector<std::uint8_t>& b) {
      return decode_manifest(std::string(b.begin(), b.end()));
    });
  }

  TEST_CASE("atomic writes replace files") {
    const auto dir = fixture::temp_dir("atomic");
    write_file_atomic(dir / "a.txt", std::string_view("first"));
    write_file_atomic(dir / "a.txt", std::string_view("second"));
    CHECK(read_text(dir / "a.txt") == "second");
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++files;
    CHECK(files == 1);
  }
}
