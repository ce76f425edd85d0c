#ifndef SIMAN_BITKERNEL_HPP
#define SIMAN_BITKERNEL_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "siman/errors.hpp"

namespace siman {

// Word-packed bit vector, LSB-first within each 64-bit word. Pad bits (at
// indices >= n) are kept zero by the constructors; every kernel re-masks the
// final word, so garbage pads can never leak into a result.
struct BitVector {
  std::size_t n = 0;
  std::vector<std::uint64_t> words;

  static std::size_t words_for(std::size_t bits) { return (bits + 63) / 64; }

  // Mask selecting the live bits of the final word.
  static std::uint64_t tail_mask(std::size_t bits) {
    std::size_t rem = bits % 64;
    return rem == 0 ? ~std::uint64_t{0} : (std::uint64_t{1} << rem) - 1;
  }
};

// Row-major stack of bit rows; each row independently padded.
struct PackedMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint64_t> row_words;

  std::size_t words_per_row() const { return BitVector::words_for(cols); }
  std::span<const std::uint64_t> row(std::size_t r) const {
    return {row_words.data() + r * words_per_row(), words_per_row()};
  }
  std::span<std::uint64_t> row(std::size_t r) {
    return {row_words.data() + r * words_per_row(), words_per_row()};
  }
};

struct ScaledOutput {
  std::vector<double> values;
  std::vector<double> beta;
};

struct ConvGeometry {
  std::size_t in_c = 0, in_h = 0, in_w = 0;
  std::size_t kh = 0, kw = 0;
  std::size_t stride = 1;
  std::size_t pad = 0;

  std::size_t out_h() const { return (in_h + 2 * pad - kh) / stride + 1; }
  std::size_t out_w() const { return (in_w + 2 * pad - kw) / stride + 1; }
  std::size_t patch_bits() const { return in_c * kh * kw; }
};

// Pack a {0,1} sequence; round-trips exactly with unpack.
BitVector pack(std::span<const std::uint8_t> bits);
std::vector<std::uint8_t> unpack(const BitVector& v);

// Pack a +/-1 sequence via the {0,1} transform bit_i = (x_i + 1) / 2.
BitVector pack_signs(std::span<const double> signs);

// Pack each {0,1} row of length cols.
PackedMatrix pack_rows(std::span<const std::uint8_t> bits, std::size_t rows, std::size_t cols);

// Number of agreeing positions: popcount(~(a ^ b)) over the live bits.
std::int64_t xnor_popcount(const BitVector& a, const BitVector& b);

// Dot product of the corresponding +/-1 vectors: 2 * xnor_popcount - n.
std::int64_t binary_dot(const BitVector& a, const BitVector& b);

// Per-row +/-1 dot products against x, as exact integers (beta excluded).
std::vector<std::int64_t> matvec_counts(const PackedMatrix& w, const BitVector& x);

// output_j = beta_j * (2 * xnor_popcount(row_j, x) - n).
ScaledOutput binary_matvec(const PackedMatrix& w, const BitVector& x,
                           std::span<const double> betas);

// Convolution lowered to patch packing + matvec_counts. activations holds
// +/-1 entries, channel-major (c, h, w). Padding positions enter as bit 0,
// i.e. as -1 under +/-1 semantics. Output is (filter, out_h, out_w) row-major
// exact integers.
std::vector<std::int64_t> binary_conv2d_counts(const PackedMatrix& weights,
                                               std::span<const double> activations,
                                               const ConvGeometry& geom);

// Same, scaled per output filter by beta.
ScaledOutput binary_conv2d(const PackedMatrix& weights, std::span<const double> activations,
                           std::span<const double> betas, const ConvGeometry& geom);

}  // namespace siman

#endif
