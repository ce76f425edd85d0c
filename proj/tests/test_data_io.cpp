#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "siman/data_io.hpp"
#include "siman/train.hpp"

using namespace siman;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "siman_test_data_io";
  fs::create_directories(dir);
  return dir / name;
}

void write_bytes(const fs::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

std::vector<unsigned char> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("load_cifar10 parses a crafted record") {
  std::vector<unsigned char> rec(3073, 0);
  rec[0] = 7;            // label
  rec[1] = 255;          // first red pixel
  rec[2] = 51;           // 51 / 255 = 0.2
  rec[3072] = 128;       // last blue pixel
  fs::path p = temp_file("one_record.bin");
  write_bytes(p, rec);

  auto samples = load_cifar10(p.string());
  REQUIRE(samples.size() == 1);
  CHECK(samples[0].label == 7);
  REQUIRE(samples[0].values.size() == 3072);
  CHECK(samples[0].values[0] == doctest::Approx(1.0));
  CHECK(samples[0].values[1] == doctest::Approx(0.2));
  CHECK(samples[0].values[3071] == doctest::Approx(128.0 / 255.0));

  // Two records round-trip as two samples.
  std::vector<unsigned char> two = rec;
  two.insert(two.end(), rec.begin(), rec.end());
  two[3073] = 3;
  write_bytes(p, two);
  auto both = load_cifar10(p.string());
  REQUIRE(both.size() == 2);
  CHECK(both[1].label == 3);
}

TEST_CASE("load_cifar10 rejects malformed files") {
  fs::path trunc = temp_file("truncated.bin");
  write_bytes(trunc, std::vector<unsigned char>(3072, 0));  // one byte short
  CHECK_THROWS_AS(load_cifar10(trunc.string()), error);
  try {
    load_cifar10(trunc.string());
  } catch (const error& e) {
    CHECK(e.code() == errc::bad_magnitude);
  }

  std::vector<unsigned char> bad(3073, 0);
  bad[0] = 10;
  fs::path badp = temp_file("bad_label.bin");
  write_bytes(badp, bad);
  try {
    load_cifar10(badp.string());
  } catch (const error& e) {
    CHECK(e.code() == errc::bad_label);
  }

  CHECK_THROWS_AS(load_cifar10("/nonexistent/nowhere.bin"), error);
}

TEST_CASE("normalize_per_channel applies per-channel statistics") {
  Dataset ds;
  ds.channels = 3;
  ds.height = 1;
  ds.width = 2;
  Sample s;
  s.values = {0.5, 0.5, 0.5, 0.5, 0.5, 0.5};
  ds.samples.push_back(s);
  normalize_per_channel(ds, kCifar10Mean, kCifar10Std);
  for (std::size_t c = 0; c < 3; ++c) {
    double expect = (0.5 - kCifar10Mean[c]) / kCifar10Std[c];
    CHECK(ds.samples[0].values[2 * c] == doctest::Approx(expect));
    CHECK(ds.samples[0].values[2 * c + 1] == doctest::Approx(expect));
  }
}

TEST_CASE("synth_blobs determinism and structure") {
  auto a = synth_blobs(3, 12, 10, 5.0, 42);
  auto b = synth_blobs(3, 12, 10, 5.0, 42);
  REQUIRE(a.size() == 30);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].label == b[i].label);
    CHECK(a[i].values == b[i].values);
  }
  auto c = synth_blobs(3, 12, 10, 5.0, 43);
  CHECK(a[0].values != c[0].values);

  CHECK(synth_blobs(2, 4, 0, 1.0, 0).empty());
  CHECK_THROWS_AS(synth_blobs(1, 4, 5, 1.0, 0), error);
  CHECK_THROWS_AS(synth_blobs(5, 4, 5, 1.0, 0), error);
  CHECK_THROWS_AS(synth_blobs(2, 4, 5, 0.0, 0), error);
}

TEST_CASE("synth_blobs at high separation is nearest-centroid separable") {
  // With centers 10 * e_c and unit Gaussian noise, assigning each point to
  // the axis with the largest coordinate should almost never miss.
  auto samples = synth_blobs(4, 16, 500, 10.0, 7);
  std::size_t hits = 0;
  for (const Sample& s : samples) {
    std::size_t arg = 0;
    for (std::size_t d = 1; d < 4; ++d) {
      if (s.values[d] > s.values[arg]) arg = d;
    }
    if (static_cast<int>(arg) == s.label) ++hits;
  }
  CHECK(static_cast<double>(hits) / static_cast<double>(samples.size()) >= 0.999);
}

TEST_CASE("flip_horizontal is an involution and mirrors columns") {
  Sample s;
  s.label = 2;
  s.values = {1, 2, 3, 4, 5, 6};  // one channel, 2x3
  Sample f = flip_horizontal(s, 1, 2, 3);
  CHECK(f.values == std::vector<double>{3, 2, 1, 6, 5, 4});
  CHECK(f.label == 2);
  Sample ff = flip_horizontal(f, 1, 2, 3);
  CHECK(ff.values == s.values);
}

TEST_CASE("augment basics") {
  Sample s;
  s.label = 1;
  s.values.resize(3 * 8 * 8);
  for (std::size_t i = 0; i < s.values.size(); ++i) s.values[i] = static_cast<double>(i);

  // Deterministic given the stream state.
  Rng r1(5), r2(5);
  Sample a1 = augment(s, 3, 8, 8, r1);
  Sample a2 = augment(s, 3, 8, 8, r2);
  CHECK(a1.values == a2.values);
  CHECK(a1.label == s.label);
  CHECK(a1.values.size() == s.values.size());

  // A centered crop with no flip is the identity; find a stream that draws
  // (4, 4, no-flip) and verify, otherwise at least verify values come from s.
  for (std::uint64_t seed = 0; seed < 20000; ++seed) {
    Rng probe(seed);
    std::size_t oy = probe.next_below(9);
    std::size_t ox = probe.next_below(9);
    bool flip = probe.next_double() < 0.5;
    if (oy == 4 && ox == 4 && !flip) {
      Rng replay(seed);
      Sample centered = augment(s, 3, 8, 8, replay);
      CHECK(centered.values == s.values);
      break;
    }
  }

  // Non-image samples pass through untouched without consuming draws.
  Sample vec;
  vec.values = {1.0, 2.0, 3.0};
  Rng r3(9);
  std::uint64_t before = Rng(9).next_u64();
  Sample out = augment(vec, 3, 8, 8, r3);
  CHECK(out.values == vec.values);
  CHECK(r3.next_u64() == before);
}

TEST_CASE("checkpoint round-trips bit-identically") {
  ModelSpec spec;
  spec.in_c = 3;
  spec.in_h = 4;
  spec.in_w = 4;
  spec.classes = 4;
  spec.widths = {4, 6, 8, 8};
  spec.bin_mode = BinMode::siman;
  ConvNetS model(spec);
  model.init_params(13);
  model.bn2.running_mean.data[0] = 0.25;  // non-default state must survive

  CheckpointMeta meta;
  meta.learning_rate = 0.05;
  meta.epochs = 17;
  meta.seed = 99;

  fs::path p = temp_file("model.ckpt");
  save_checkpoint(model, meta, p.string());
  LoadedCheckpoint lc = load_checkpoint(p.string());

  CHECK(lc.meta.learning_rate == 0.05);
  CHECK(lc.meta.epochs == 17);
  CHECK(lc.meta.seed == 99);
  CHECK(lc.model.spec().classes == 4);
  CHECK(lc.model.spec().bin_mode == BinMode::siman);
  CHECK(lc.model.conv1.weight.data == model.conv1.weight.data);
  CHECK(lc.model.conv4.weight.data == model.conv4.weight.data);
  CHECK(lc.model.bn2.running_mean.data == model.bn2.running_mean.data);
  CHECK(lc.model.fc.bias.data == model.fc.bias.data);

  // Saving the loaded model again reproduces the file byte for byte.
  fs::path p2 = temp_file("model2.ckpt");
  save_checkpoint(lc.model, lc.meta, p2.string());
  CHECK(read_bytes(p) == read_bytes(p2));

  // The loaded model is usable: same logits as the original.
  Tensor x({1, 3, 4, 4});
  for (std::size_t i = 0; i < x.size(); ++i) x.data[i] = 0.01 * static_cast<double>(i);
  Tensor y1 = model.forward(x, false);
  Tensor y2 = lc.model.forward(x, false);
  CHECK(y1.data == y2.data);
}

TEST_CASE("checkpoint corruption paths") {
  ModelSpec spec;
  spec.in_c = 3;
  spec.in_h = 4;
  spec.in_w = 4;
  spec.classes = 3;
  spec.widths = {4, 6, 8, 8};
  ConvNetS model(spec);
  model.init_params(1);
  fs::path p = temp_file("corrupt.ckpt");
  save_checkpoint(model, CheckpointMeta{}, p.string());
  auto good = read_bytes(p);

  auto check_code = [&](std::vector<unsigned char> bytes, errc expected) {
    fs::path q = temp_file("mutated.ckpt");
    write_bytes(q, bytes);
    try {
      load_checkpoint(q.string());
      FAIL("expected a throw");
    } catch (const error& e) {
      CHECK(e.code() == expected);
    }
  };

  auto bad_magic = good;
  bad_magic[0] = 'X';
  check_code(bad_magic, errc::bad_magic);

  auto bad_version = good;
  bad_version[4] += 1;
  check_code(bad_version, errc::bad_version);

  auto flipped = good;
  flipped[good.size() / 2] ^= 0xff;  // payload byte -> CRC mismatch
  check_code(flipped, errc::corrupt);

  auto truncated = good;
  truncated.resize(10);
  check_code(truncated, errc::corrupt);

  CHECK_THROWS_AS(load_checkpoint("/nonexistent/nowhere.ckpt"), error);
}

TEST_CASE("a trained-then-reloaded model evaluates identically") {
  ModelSpec spec;
  spec.in_c = 3;
  spec.in_h = 2;
  spec.in_w = 2;
  spec.classes = 3;
  spec.widths = {4, 6, 8, 8};
  ConvNetS model(spec);
  model.init_params(3);

  Dataset ds;
  ds.samples = synth_blobs(3, 12, 20, 6.0, 11);
  ds.channels = 3;
  ds.height = 2;
  ds.width = 2;
  ds.classes = 3;

  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.epochs = 2;
  cfg.batch_size = 16;
  train(model, ds, ds, cfg, false);

  fs::path p = temp_file("trained.ckpt");
  save_checkpoint(model, CheckpointMeta{}, p.string());
  LoadedCheckpoint lc = load_checkpoint(p.string());
  CHECK(evaluate(lc.model, ds) == evaluate(model, ds));
}
