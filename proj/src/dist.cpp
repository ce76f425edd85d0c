#include "siman/dist.hpp"

#include <cmath>

#include "siman/rng.hpp"

namespace siman {

double laplace_objective(double t, double b) {
  if (!(b > 0.0)) throw error(errc::invalid_scale, "laplace_objective: scale must be positive");
  if (t < 0.0) throw error(errc::invalid_args, "laplace_objective: t must be nonnegative");
  return (b + t) * std::exp(-t / (2.0 * b));
}

double gauss_objective(double m) {
  if (m < 0.0) throw error(errc::invalid_args, "gauss_objective: m must be nonnegative");
  return std::exp(-m * m) / std::sqrt(erfc(m));
}

double erfc(double x) {
  // Abramowitz & Stegun 7.1.26 on x >= 0, reflected for x < 0.
  double ax = std::fabs(x);
  double t = 1.0 / (1.0 + 0.3275911 * ax);
  double poly = t * (0.254829592 +
               t * (-0.284496736 +
               t * (1.421413741 +
               t * (-1.453152027 +
               t * 1.061405429))));
  double val = poly * std::exp(-ax * ax);
  return x >= 0.0 ? val : 2.0 - val;
}

namespace {

// Golden-section maximization of f on [lo, hi]; f unimodal there.
template <typename F>
double golden_max(F f, double lo, double hi, double tol) {
  constexpr double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

ThresholdResult optimal_threshold(const DistributionModel& model) {
  if (!(model.scale > 0.0))
    throw error(errc::invalid_scale, "optimal_threshold: scale must be positive");

  ThresholdResult r;
  if (model.kind == DistributionModel::Kind::laplace) {
    r.t_star = model.scale;
    r.p_plus = std::exp(-1.0);
    r.objective_at_t = laplace_objective(r.t_star, model.scale);
  } else {
    double m_star = golden_max(gauss_objective, 0.0, 3.0, 1e-9);
    r.t_star = m_star * std::sqrt(2.0) * model.scale;
    r.p_plus = erfc(m_star);
    r.objective_at_t = gauss_objective(m_star);
  }
  return r;
}

WeightVector sample_weights(const DistributionModel& model, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw error(errc::invalid_args, "sample_weights: n must be >= 1");
  if (!(model.scale > 0.0))
    throw error(errc::invalid_scale, "sample_weights: scale must be positive");
  Rng rng(seed);
  WeightVector w(n);
  if (model.kind == DistributionModel::Kind::laplace) {
    for (double& x : w) x = rng.next_laplace(model.scale);
  } else {
    for (double& x : w) x = model.scale * rng.next_gauss();
  }
  return w;
}

double empirical_plus_fraction(const WeightVector& w) {
  BinaryCode code = optimal_binarize(w);
  return static_cast<double>(code.ones) / static_cast<double>(w.size());
}

DistributionModel fit_scale(DistributionModel::Kind kind, const WeightVector& w) {
  if (w.size() < 2) throw error(errc::invalid_args, "fit_scale: need n >= 2");
  double sum_abs = 0.0, sum_sq = 0.0;
  for (double x : w) {
    sum_abs += std::fabs(x);
    sum_sq += x * x;
  }
  if (sum_abs == 0.0) throw error(errc::degenerate, "fit_scale: all-zero weights");
  DistributionModel m;
  m.kind = kind;
  double n = static_cast<double>(w.size());
  m.scale = kind == DistributionModel::Kind::laplace ? sum_abs / n : std::sqrt(sum_sq / n);
  return m;
}

}  // namespace siman
