#ifndef SIMAN_RNG_HPP
#define SIMAN_RNG_HPP

#include <cmath>
#include <cstdint>

namespace siman {

// SplitMix64 (Steele, Lea, Flood 2014). Chosen over std:: engines because the
// output stream is fully pinned by the algorithm, so results reproduce
// bit-exactly on any platform. Distribution transforms below are likewise
// fixed: inverse CDF for Laplace, Box-Muller for Gauss.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1]; safe as a log() argument.
  double next_double_open() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller (the cosine branch only, one draw per
  // two uniforms, so the stream layout is unambiguous).
  double next_gauss() {
    double u1 = next_double_open();
    double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  // Zero-mean Laplace with scale b, by inverse CDF.
  double next_laplace(double b) {
    double u = next_double() - 0.5;
    double s = u < 0.0 ? -1.0 : 1.0;
    return -b * s * std::log(1.0 - 2.0 * std::fabs(u));
  }

  // Uniform integer in [0, bound) by rejection; bound > 0.
  std::uint64_t next_below(std::uint64_t bound) {
    std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace siman

#endif
