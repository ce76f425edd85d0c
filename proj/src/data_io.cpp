#include "siman/data_io.hpp"

#include <zlib.h>

#include <cstring>
#include <filesystem>
#include <fstream>

namespace siman {

namespace {

constexpr std::size_t kCifarRecord = 3073;
constexpr std::size_t kCifarPixels = 3072;

std::vector<char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error(errc::io, "cannot open " + path);
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return buf;
}

}  // namespace

std::vector<Sample> load_cifar10(const std::string& path) {
  std::vector<char> buf = read_file(path);
  if (buf.empty() || buf.size() % kCifarRecord != 0)
    throw error(errc::bad_magnitude, path + ": size is not a multiple of 3073 bytes");

  std::vector<Sample> samples;
  samples.reserve(buf.size() / kCifarRecord);
  for (std::size_t off = 0; off < buf.size(); off += kCifarRecord) {
    Sample s;
    s.label = static_cast<unsigned char>(buf[off]);
    if (s.label > 9) throw error(errc::bad_label, path + ": label byte > 9");
    s.values.resize(kCifarPixels);
    for (std::size_t i = 0; i < kCifarPixels; ++i) {
      s.values[i] = static_cast<unsigned char>(buf[off + 1 + i]) / 255.0;
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

namespace {

Dataset cifar_dataset(std::vector<Sample> samples) {
  Dataset ds;
  ds.samples = std::move(samples);
  ds.channels = 3;
  ds.height = 32;
  ds.width = 32;
  ds.classes = 10;
  ds.image = true;
  return ds;
}

}  // namespace

Dataset load_cifar10_train_dir(const std::string& dir) {
  std::vector<Sample> all;
  for (int i = 1; i <= 5; ++i) {
    auto path = (std::filesystem::path(dir) / ("data_batch_" + std::to_string(i) + ".bin")).string();
    auto batch = load_cifar10(path);
    all.insert(all.end(), batch.begin(), batch.end());
  }
  return cifar_dataset(std::move(all));
}

Dataset load_cifar10_test_dir(const std::string& dir) {
  auto path = (std::filesystem::path(dir) / "test_batch.bin").string();
  return cifar_dataset(load_cifar10(path));
}

void normalize_per_channel(Dataset& ds, std::array<double, 3> mean, std::array<double, 3> std) {
  const std::size_t plane = ds.height * ds.width;
  for (Sample& s : ds.samples) {
    for (std::size_t c = 0; c < ds.channels; ++c) {
      for (std::size_t i = 0; i < plane; ++i) {
        s.values[c * plane + i] = (s.values[c * plane + i] - mean[c]) / std[c];
      }
    }
  }
}

std::vector<Sample> synth_blobs(std::size_t classes, std::size_t dim, std::size_t per_class,
                                double separation, std::uint64_t seed) {
  if (classes < 2 || dim < classes || !(separation > 0.0))
    throw error(errc::invalid_args, "synth_blobs: need classes >= 2, dim >= classes, separation > 0");
  Rng rng(seed);
  std::vector<Sample> samples;
  samples.reserve(classes * per_class);
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      Sample s;
      s.label = static_cast<int>(c);
      s.values.resize(dim);
      for (std::size_t d = 0; d < dim; ++d) s.values[d] = rng.next_gauss();
      s.values[c] += separation;
      samples.push_back(std::move(s));
    }
  }
  return samples;
}

Sample flip_horizontal(const Sample& s, std::size_t c, std::size_t h, std::size_t w) {
  Sample out;
  out.label = s.label;
  out.values.resize(s.values.size());
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        out.values[(ch * h + y) * w + x] = s.values[(ch * h + y) * w + (w - 1 - x)];
      }
    }
  }
  return out;
}

Sample augment(const Sample& s, std::size_t c, std::size_t h, std::size_t w, Rng& stream) {
  if (s.values.size() != c * h * w) return s;  // non-image: identity

  constexpr std::size_t kPad = 4;
  std::size_t off_y = stream.next_below(2 * kPad + 1);
  std::size_t off_x = stream.next_below(2 * kPad + 1);
  bool flip = stream.next_double() < 0.5;

  Sample out;
  out.label = s.label;
  out.values.assign(c * h * w, 0.0);
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < h; ++y) {
      std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y + off_y) - static_cast<std::ptrdiff_t>(kPad);
      if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
      for (std::size_t x = 0; x < w; ++x) {
        std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(x + off_x) - static_cast<std::ptrdiff_t>(kPad);
        if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
        out.values[(ch * h + y) * w + x] =
            s.values[(ch * h + static_cast<std::size_t>(iy)) * w + static_cast<std::size_t>(ix)];
      }
    }
  }
  return flip ? flip_horizontal(out, c, h, w) : out;
}

// ---------------------------------------------------------------------------
// Checkpoint

namespace {

class Writer {
 public:
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void tensor(const Tensor& t) {
    u64(t.shape.size());
    for (std::size_t d : t.shape) u64(d);
    raw(t.data.data(), t.data.size() * sizeof(double));
  }
  const std::vector<char>& bytes() const { return buf_; }

 private:
  void raw(const void* p, std::size_t n) {
    const char* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  std::vector<char> buf_;
};

class Reader {
 public:
  Reader(const char* p, std::size_t n) : p_(p), end_(p + n) {}
  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  double f64() { return get<double>(); }
  void tensor(Tensor& t) {
    std::uint64_t ndims = u64();
    if (ndims > 8) throw error(errc::corrupt, "checkpoint: implausible tensor rank");
    std::vector<std::size_t> shape(ndims);
    for (auto& d : shape) d = u64();
    if (shape != t.shape) throw error(errc::corrupt, "checkpoint: tensor shape mismatch");
    raw(t.data.data(), t.data.size() * sizeof(double));
  }
  bool done() const { return p_ == end_; }

 private:
  template <typename T>
  T get() {
    T v;
    raw(&v, sizeof v);
    return v;
  }
  void raw(void* out, std::size_t n) {
    if (static_cast<std::size_t>(end_ - p_) < n)
      throw error(errc::corrupt, "checkpoint: truncated payload");
    std::memcpy(out, p_, n);
    p_ += n;
  }
  const char* p_;
  const char* end_;
};

void write_meta(Writer& w, const CheckpointMeta& m) {
  w.f64(m.learning_rate);
  w.f64(m.momentum);
  w.f64(m.weight_decay_other);
  w.f64(m.weight_decay_binarized);
  w.u64(m.epochs);
  w.u64(m.batch_size);
  w.u64(m.seed);
}

CheckpointMeta read_meta(Reader& r) {
  CheckpointMeta m;
  m.learning_rate = r.f64();
  m.momentum = r.f64();
  m.weight_decay_other = r.f64();
  m.weight_decay_binarized = r.f64();
  m.epochs = r.u64();
  m.batch_size = r.u64();
  m.seed = r.u64();
  return m;
}

void for_each_state_tensor(ConvNetS& model, auto&& fn) {
  auto conv = [&fn](Conv2d& c) { fn(c.weight); };
  auto bn = [&fn](BatchNorm2d& b) {
    fn(b.gamma);
    fn(b.beta);
    fn(b.running_mean);
    fn(b.running_var);
  };
  conv(model.conv1);
  bn(model.bn1);
  conv(model.conv2);
  bn(model.bn2);
  conv(model.conv3);
  bn(model.bn3);
  conv(model.conv4);
  bn(model.bn4);
  fn(model.fc.weight);
  fn(model.fc.bias);
}

std::uint32_t payload_crc(const std::vector<char>& payload) {
  return static_cast<std::uint32_t>(
      crc32(0, reinterpret_cast<const Bytef*>(payload.data()),
            static_cast<uInt>(payload.size())));
}

}  // namespace

void save_checkpoint(const ConvNetS& model, const CheckpointMeta& meta, const std::string& path) {
  Writer payload;
  write_meta(payload, meta);
  const ModelSpec& spec = model.spec();
  payload.u64(spec.in_c);
  payload.u64(spec.in_h);
  payload.u64(spec.in_w);
  payload.u64(spec.classes);
  for (std::size_t wdt : spec.widths) payload.u64(wdt);
  payload.u32(static_cast<std::uint32_t>(spec.bin_mode));
  for_each_state_tensor(const_cast<ConvNetS&>(model),
                        [&payload](Tensor& t) { payload.tensor(t); });

  std::ofstream out(path, std::ios::binary);
  if (!out) throw error(errc::io, "cannot write " + path);
  out.write("SIMN", 4);
  std::uint32_t version = kCheckpointVersion;
  out.write(reinterpret_cast<const char*>(&version), sizeof version);
  out.write(payload.bytes().data(), static_cast<std::streamsize>(payload.bytes().size()));
  std::uint32_t crc = payload_crc(payload.bytes());
  out.write(reinterpret_cast<const char*>(&crc), sizeof crc);
  if (!out) throw error(errc::io, "write failed: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::vector<char> buf = read_file(path);
  if (buf.size() < 12) throw error(errc::corrupt, "checkpoint: file too short");
  if (std::memcmp(buf.data(), "SIMN", 4) != 0)
    throw error(errc::bad_magic, "checkpoint: bad magic");
  std::uint32_t version;
  std::memcpy(&version, buf.data() + 4, sizeof version);
  if (version != kCheckpointVersion)
    throw error(errc::bad_version, "checkpoint: unsupported version");

  std::vector<char> payload(buf.begin() + 8, buf.end() - 4);
  std::uint32_t stored_crc;
  std::memcpy(&stored_crc, buf.data() + buf.size() - 4, sizeof stored_crc);
  if (payload_crc(payload) != stored_crc)
    throw error(errc::corrupt, "checkpoint: CRC mismatch");

  Reader r(payload.data(), payload.size());
  CheckpointMeta meta = read_meta(r);
  ModelSpec spec;
  spec.in_c = r.u64();
  spec.in_h = r.u64();
  spec.in_w = r.u64();
  spec.classes = r.u64();
  for (std::size_t& w : spec.widths) w = r.u64();
  spec.bin_mode = static_cast<BinMode>(r.u32());

  LoadedCheckpoint out{ConvNetS(spec), meta};
  for_each_state_tensor(out.model, [&r](Tensor& t) { r.tensor(t); });
  if (!r.done()) throw error(errc::corrupt, "checkpoint: trailing bytes");
  return out;
}

}  // namespace siman
