#ifndef SIMAN_DIST_HPP
#define SIMAN_DIST_HPP

#include <cstdint>

#include "siman/binarize.hpp"

namespace siman {

// Zero-mean weight model: Laplace(scale b) or Gauss(sigma).
struct DistributionModel {
  enum class Kind { laplace, gauss };
  Kind kind = Kind::laplace;
  double scale = 1.0;
};

struct ThresholdResult {
  double t_star = 0.0;       // magnitude threshold
  double p_plus = 0.0;       // proportion of weights encoded as +1
  double objective_at_t = 0.0;
};

// (b + t) * exp(-t / (2b)): the angle objective under a Laplace(b) model as a
// function of the encoding threshold t. Maximized exactly at t = b.
double laplace_objective(double t, double b);

// exp(-m^2) / sqrt(erfc(m)) with m = t / (sqrt(2) * sigma); the constant
// sigma/sqrt(pi) prefactor is dropped since it does not move the maximizer.
double gauss_objective(double m);

// Complementary error function, rational-polynomial approximation
// (Abramowitz & Stegun 7.1.26), |error| <= 1.5e-7, with erfc(-x) = 2 - erfc(x).
double erfc(double x);

// Closed-form threshold for Laplace (t* = b); golden-section search on
// gauss_objective over [0, 3] (to |dm| < 1e-9) for Gauss.
ThresholdResult optimal_threshold(const DistributionModel& model);

// Deterministic i.i.d. draws; same (model, n, seed) always gives the same
// vector. See rng.hpp for the pinned generator and transforms.
WeightVector sample_weights(const DistributionModel& model, std::size_t n, std::uint64_t seed);

// ones(optimal_binarize(w)) / n.
double empirical_plus_fraction(const WeightVector& w);

// Zero-mean moment fit: Laplace b = mean|w|, Gauss sigma = rms(w).
DistributionModel fit_scale(DistributionModel::Kind kind, const WeightVector& w);

}  // namespace siman

#endif
