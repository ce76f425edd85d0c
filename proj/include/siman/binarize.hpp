#ifndef SIMAN_BINARIZE_HPP
#define SIMAN_BINARIZE_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "siman/errors.hpp"

namespace siman {

// A real-valued filter weight vector.
using WeightVector = std::vector<double>;

// A {0,1} code over the weight positions together with its ones-count.
// The +/-1 training code is derived as 2*bit - 1 when needed.
struct BinaryCode {
  std::vector<std::uint8_t> bits;
  std::size_t ones = 0;
};

// Sign-based baseline code: +/-1 bits with a single positive scale.
struct SignCode {
  std::vector<std::int8_t> bits;
  double scale = 0.0;
};

struct AngleBounds {
  double lo_deg = 0.0;
  double hi_deg = 0.0;
};

// Globally optimal {0,1} code maximizing cos(code, |w|): sort |w|
// descending, scan prefix sums S_k / sqrt(k), keep the best k (smallest k on
// exact ties) and set the top-k magnitude positions. O(n log n).
// Throws errc::all_zero when every entry is zero.
BinaryCode optimal_binarize(const WeightVector& w);

// Exactly ceil(n/2) ones at the largest-magnitude positions; magnitude ties
// go to the lower index. Median selection, expected O(n), no full sort.
BinaryCode half_half_binarize(const WeightVector& w);

// Exhaustive maximizer over all 2^n - 1 nonzero codes; test oracle only.
// Throws errc::too_large for n > 20, errc::all_zero as above.
BinaryCode brute_force_binarize(const WeightVector& w);

// cos of the angle between the code and |w|; in [0, 1].
double objective_value(const WeightVector& w, const BinaryCode& code);

// Scaled sign baseline: bits = sign(w) with sign(0) := +1, scale = mean|w|.
SignCode sign_binarize_scaled(const WeightVector& w);

// min over lambda of ||lambda*v - w||^2 = ||w||^2 sin^2(angle(w, v)).
double quantization_error(std::span<const double> w, std::span<const double> v);

// Angle range, in degrees, between a k-ones code and any code differing from
// it in r bits: [arccos sqrt(k/(k+r)), arccos sqrt((k-r)/k)].
AngleBounds angle_bounds(std::size_t k, std::size_t r);

// L_k*(sqrt(k+1) - sqrt(k)) - w~_{k+1}, where w~_i is the i-th largest
// magnitude and L_k its prefix sum over sqrt(k). Positive iff the objective
// stops growing past k.
double inequality_margin(const WeightVector& w, std::size_t k);

// Positions of the m largest magnitudes, ties to the lower index.
// Shared by half_half_binarize and the ranking paths; expected O(n).
std::vector<std::size_t> top_magnitude_indices(const WeightVector& w, std::size_t m);

}  // namespace siman

#endif
