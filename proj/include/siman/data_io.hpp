#ifndef SIMAN_DATA_IO_HPP
#define SIMAN_DATA_IO_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "siman/nn.hpp"
#include "siman/rng.hpp"

namespace siman {

struct Sample {
  int label = 0;
  std::vector<double> values;
};

struct Dataset {
  std::vector<Sample> samples;
  std::size_t channels = 0, height = 0, width = 0;
  std::size_t classes = 0;
  bool image = false;
};

// CIFAR-10 binary batch file: records of 3073 bytes, 1 label byte then
// 3072 channel-major pixel bytes. Pixels come back scaled to [0,1];
// normalization happens later in the training pipeline.
std::vector<Sample> load_cifar10(const std::string& path);

// Loads data_batch_1..5.bin and test_batch.bin from a directory.
Dataset load_cifar10_train_dir(const std::string& dir);
Dataset load_cifar10_test_dir(const std::string& dir);

// Widely used CIFAR-10 per-channel statistics (R, G, B).
inline constexpr std::array<double, 3> kCifar10Mean = {0.4914, 0.4822, 0.4465};
inline constexpr std::array<double, 3> kCifar10Std = {0.2470, 0.2435, 0.2616};

// In-place per-channel (x - mean) / std.
void normalize_per_channel(Dataset& ds, std::array<double, 3> mean, std::array<double, 3> std);

// Gaussian blobs (sigma = 1) at centers separation * e_c on the first
// `classes` axes; deterministic per seed. classes <= dim required.
std::vector<Sample> synth_blobs(std::size_t classes, std::size_t dim, std::size_t per_class,
                                double separation, std::uint64_t seed);

// Horizontal mirror of a (c, h, w) image sample.
Sample flip_horizontal(const Sample& s, std::size_t c, std::size_t h, std::size_t w);

// Standard CIFAR augmentation: zero pad by 4, random crop back to (h, w),
// horizontal flip with probability 1/2. Draw order per call: crop offset y,
// offset x, flip coin; deterministic given the stream.
Sample augment(const Sample& s, std::size_t c, std::size_t h, std::size_t w, Rng& stream);

// Checkpoint layout: "SIMN" magic, u32 LE version, payload (config echo,
// model spec, parameter and batch-norm tensors as LE f64), u32 LE CRC-32 of
// the payload.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
  double learning_rate = 0.1;
  double momentum = 0.9;
  double weight_decay_other = 5e-4;
  double weight_decay_binarized = 0.0;
  std::uint64_t epochs = 0;
  std::uint64_t batch_size = 64;
  std::uint64_t seed = 0;
};

void save_checkpoint(const ConvNetS& model, const CheckpointMeta& meta, const std::string& path);

struct LoadedCheckpoint {
  ConvNetS model;
  CheckpointMeta meta;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace siman

#endif
