#include "siman/bitkernel.hpp"

#include <bit>

namespace siman {

namespace {

// Agreement count between two word spans of logical length n, masking the
// tail so pad garbage cannot contribute.
std::int64_t agree_count(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b,
                         std::size_t n) {
  std::size_t nwords = BitVector::words_for(n);
  std::int64_t count = 0;
  for (std::size_t i = 0; i + 1 < nwords; ++i) {
    count += std::popcount(~(a[i] ^ b[i]));
  }
  if (nwords > 0) {
    std::uint64_t last = ~(a[nwords - 1] ^ b[nwords - 1]) & BitVector::tail_mask(n);
    count += std::popcount(last);
  }
  return count;
}

void check_same_length(const BitVector& a, const BitVector& b) {
  if (a.n != b.n) throw error(errc::length_mismatch, "bit vectors differ in length");
  if (a.n == 0) throw error(errc::invalid_args, "empty bit vector");
}

}  // namespace

BitVector pack(std::span<const std::uint8_t> bits) {
  if (bits.empty()) throw error(errc::invalid_args, "pack: empty bit sequence");
  BitVector v;
  v.n = bits.size();
  v.words.assign(BitVector::words_for(v.n), 0);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) v.words[i / 64] |= std::uint64_t{1} << (i % 64);
  }
  return v;
}

std::vector<std::uint8_t> unpack(const BitVector& v) {
  std::vector<std::uint8_t> bits(v.n);
  for (std::size_t i = 0; i < v.n; ++i) {
    bits[i] = static_cast<std::uint8_t>((v.words[i / 64] >> (i % 64)) & 1);
  }
  return bits;
}

BitVector pack_signs(std::span<const double> signs) {
  if (signs.empty()) throw error(errc::invalid_args, "pack_signs: empty sequence");
  BitVector v;
  v.n = signs.size();
  v.words.assign(BitVector::words_for(v.n), 0);
  for (std::size_t i = 0; i < signs.size(); ++i) {
    if (signs[i] > 0.0) v.words[i / 64] |= std::uint64_t{1} << (i % 64);
  }
  return v;
}

PackedMatrix pack_rows(std::span<const std::uint8_t> bits, std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) throw error(errc::shape_mismatch, "pack_rows: empty shape");
  if (bits.size() != rows * cols)
    throw error(errc::shape_mismatch, "pack_rows: bit count does not match shape");
  PackedMatrix m;
  m.rows = rows;
  m.cols = cols;
  m.row_words.assign(rows * m.words_per_row(), 0);
  for (std::size_t r = 0; r < rows; ++r) {
    auto dst = m.row(r);
    for (std::size_t c = 0; c < cols; ++c) {
      if (bits[r * cols + c]) dst[c / 64] |= std::uint64_t{1} << (c % 64);
    }
  }
  return m;
}

std::int64_t xnor_popcount(const BitVector& a, const BitVector& b) {
  check_same_length(a, b);
  return agree_count(a.words, b.words, a.n);
}

std::int64_t binary_dot(const BitVector& a, const BitVector& b) {
  return 2 * xnor_popcount(a, b) - static_cast<std::int64_t>(a.n);
}

std::vector<std::int64_t> matvec_counts(const PackedMatrix& w, const BitVector& x) {
  if (w.cols != x.n) throw error(errc::shape_mismatch, "matvec: cols != x.n");
  std::vector<std::int64_t> out(w.rows);
  const auto n = static_cast<std::int64_t>(w.cols);
  for (std::size_t r = 0; r < w.rows; ++r) {
    out[r] = 2 * agree_count(w.row(r), x.words, w.cols) - n;
  }
  return out;
}

ScaledOutput binary_matvec(const PackedMatrix& w, const BitVector& x,
                           std::span<const double> betas) {
  if (betas.size() != w.rows) throw error(errc::shape_mismatch, "matvec: betas != rows");
  auto counts = matvec_counts(w, x);
  ScaledOutput out;
  out.beta.assign(betas.begin(), betas.end());
  out.values.resize(w.rows);
  for (std::size_t r = 0; r < w.rows; ++r) {
    out.values[r] = betas[r] * static_cast<double>(counts[r]);
  }
  return out;
}

std::vector<std::int64_t> binary_conv2d_counts(const PackedMatrix& weights,
                                               std::span<const double> activations,
                                               const ConvGeometry& geom) {
  if (geom.in_c == 0 || geom.kh == 0 || geom.kw == 0 || geom.stride == 0)
    throw error(errc::bad_geometry, "conv2d: degenerate geometry");
  if (geom.in_h + 2 * geom.pad < geom.kh || geom.in_w + 2 * geom.pad < geom.kw)
    throw error(errc::bad_geometry, "conv2d: kernel larger than padded input");
  if (weights.cols != geom.patch_bits())
    throw error(errc::shape_mismatch, "conv2d: weight cols != in_c*kh*kw");
  if (activations.size() != geom.in_c * geom.in_h * geom.in_w)
    throw error(errc::shape_mismatch, "conv2d: activation size mismatch");

  const std::size_t oh = geom.out_h(), ow = geom.out_w();
  std::vector<std::int64_t> out(weights.rows * oh * ow);

  BitVector patch;
  patch.n = geom.patch_bits();
  for (std::size_t oy = 0; oy < oh; ++oy) {
    for (std::size_t ox = 0; ox < ow; ++ox) {
      patch.words.assign(BitVector::words_for(patch.n), 0);
      std::size_t bit = 0;
      for (std::size_t c = 0; c < geom.in_c; ++c) {
        for (std::size_t ky = 0; ky < geom.kh; ++ky) {
          std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * geom.stride + ky) -
                              static_cast<std::ptrdiff_t>(geom.pad);
          for (std::size_t kx = 0; kx < geom.kw; ++kx, ++bit) {
            std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * geom.stride + kx) -
                                static_cast<std::ptrdiff_t>(geom.pad);
            if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(geom.in_h) ||
                ix >= static_cast<std::ptrdiff_t>(geom.in_w)) {
              continue;  // out of bounds packs as bit 0 (-1)
            }
            double a = activations[(c * geom.in_h + static_cast<std::size_t>(iy)) * geom.in_w +
                                   static_cast<std::size_t>(ix)];
            if (a > 0.0) patch.words[bit / 64] |= std::uint64_t{1} << (bit % 64);
          }
        }
      }
      auto counts = matvec_counts(weights, patch);
      for (std::size_t f = 0; f < weights.rows; ++f) {
        out[(f * oh + oy) * ow + ox] = counts[f];
      }
    }
  }
  return out;
}

ScaledOutput binary_conv2d(const PackedMatrix& weights, std::span<const double> activations,
                           std::span<const double> betas, const ConvGeometry& geom) {
  if (betas.size() != weights.rows)
    throw error(errc::shape_mismatch, "conv2d: betas != filters");
  auto counts = binary_conv2d_counts(weights, activations, geom);
  const std::size_t plane = geom.out_h() * geom.out_w();
  ScaledOutput out;
  out.beta.assign(betas.begin(), betas.end());
  out.values.resize(counts.size());
  for (std::size_t f = 0; f < weights.rows; ++f) {
    for (std::size_t p = 0; p < plane; ++p) {
      out.values[f * plane + p] = betas[f] * static_cast<double>(counts[f * plane + p]);
    }
  }
  return out;
}

}  // namespace siman
