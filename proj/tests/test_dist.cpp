#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "siman/dist.hpp"

using namespace siman;
using Kind = DistributionModel::Kind;

TEST_CASE("erfc approximation against the library function") {
  // The A&S 7.1.26 form promises |error| <= 1.5e-7 everywhere.
  for (double x = -6.0; x <= 6.0; x += 0.01) {
    CHECK(std::fabs(siman::erfc(x) - std::erfc(x)) <= 1.5e-7);
  }
  CHECK(siman::erfc(0.0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(siman::erfc(30.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(siman::erfc(-30.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(siman::erfc(0.43) == doctest::Approx(std::erfc(0.43)).epsilon(1e-6));
}

TEST_CASE("erfc reflection symmetry") {
  for (double x = 0.0; x <= 5.0; x += 0.037) {
    CHECK(std::fabs(siman::erfc(x) + siman::erfc(-x) - 2.0) <= 1e-7);
  }
}

TEST_CASE("laplace_objective values and maximizer") {
  CHECK(laplace_objective(0.0, 1.0) == doctest::Approx(1.0));
  CHECK(laplace_objective(1.0, 1.0) == doctest::Approx(2.0 * std::exp(-0.5)));
  CHECK_THROWS_AS(laplace_objective(1.0, 0.0), error);

  // Derivative changes sign inside [b - 1e-6, b + 1e-6]: unimodal max at t = b.
  const double b = 1.0, h = 1e-6;
  CHECK(laplace_objective(b - h, b) < laplace_objective(b, b));
  CHECK(laplace_objective(b + h, b) < laplace_objective(b, b));
  double grid_best = 0.0, grid_arg = 0.0;
  for (double t = 0.0; t <= 5.0; t += 1e-3) {
    double v = laplace_objective(t, b);
    if (v > grid_best) {
      grid_best = v;
      grid_arg = t;
    }
  }
  CHECK(grid_arg == doctest::Approx(b).epsilon(2e-3));
}

TEST_CASE("gauss_objective values") {
  CHECK(gauss_objective(0.0) == doctest::Approx(1.0));
  // exp(-1) / sqrt(erfc(1)); erfc(1) = 0.15729920...
  CHECK(gauss_objective(1.0) ==
        doctest::Approx(std::exp(-1.0) / std::sqrt(std::erfc(1.0))).epsilon(1e-6));
  CHECK(gauss_objective(1.0) == doctest::Approx(0.927624).epsilon(1e-4));
}

TEST_CASE("optimal_threshold closed forms") {
  ThresholdResult lap = optimal_threshold({Kind::laplace, 1.0});
  CHECK(lap.t_star == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(lap.p_plus == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));

  ThresholdResult g = optimal_threshold({Kind::gauss, 1.0});
  CHECK(g.t_star / std::sqrt(2.0) == doctest::Approx(0.43).epsilon(0.012));
  CHECK(g.p_plus == doctest::Approx(0.54).epsilon(0.02));

  // p_plus is scale-free for Laplace.
  CHECK(optimal_threshold({Kind::laplace, 0.25}).p_plus ==
        doctest::Approx(lap.p_plus).epsilon(1e-12));
  CHECK(optimal_threshold({Kind::laplace, 40.0}).t_star == doctest::Approx(40.0));
}

TEST_CASE("gauss maximizer is stable across restarts") {
  double m1 = optimal_threshold({Kind::gauss, 1.0}).t_star / std::sqrt(2.0);
  double m2 = optimal_threshold({Kind::gauss, 2.0}).t_star / (2.0 * std::sqrt(2.0));
  CHECK(std::fabs(m1 - m2) <= 1e-6);

  // Independent quadratic-free oracle: fine grid scan.
  double best = -1.0, arg = 0.0;
  for (double m = 0.0; m <= 1.0; m += 1e-6) {
    double v = gauss_objective(m);
    if (v > best) {
      best = v;
      arg = m;
    }
  }
  CHECK(std::fabs(m1 - arg) <= 2e-6);
}

TEST_CASE("sample_weights determinism and moments") {
  DistributionModel lap{Kind::laplace, 1.0};
  auto a = sample_weights(lap, 1000, 42);
  auto b = sample_weights(lap, 1000, 42);
  CHECK(a == b);
  auto c = sample_weights(lap, 1000, 43);
  CHECK(a != c);

  auto big = sample_weights(lap, 1000000, 7);
  double mean_abs = 0.0;
  for (double x : big) mean_abs += std::fabs(x);
  mean_abs /= static_cast<double>(big.size());
  CHECK(mean_abs > 0.99);
  CHECK(mean_abs < 1.01);

  auto gauss = sample_weights({Kind::gauss, 1.0}, 1000000, 9);
  double var = 0.0;
  for (double x : gauss) var += x * x;
  var /= static_cast<double>(gauss.size());
  CHECK(var > 0.995);
  CHECK(var < 1.005);
}

TEST_CASE("empirical_plus_fraction converges to the closed form") {
  auto lap = sample_weights({Kind::laplace, 1.0}, 1000000, 1);
  double p_lap = empirical_plus_fraction(lap);
  CHECK(p_lap > 0.365);
  CHECK(p_lap < 0.372);

  auto gauss = sample_weights({Kind::gauss, 1.0}, 1000000, 2);
  double p_gauss = empirical_plus_fraction(gauss);
  CHECK(p_gauss > 0.535);
  CHECK(p_gauss < 0.550);

  WeightVector flat(100, 3.0);
  CHECK(empirical_plus_fraction(flat) == doctest::Approx(1.0));
}

TEST_CASE("empirical_plus_fraction error band shrinks roughly like 1/sqrt(n)") {
  double target = std::exp(-1.0);
  auto spread = [&](std::size_t n) {
    double worst = 0.0;
    for (std::uint64_t seed = 100; seed < 110; ++seed) {
      auto w = sample_weights({Kind::laplace, 1.0}, n, seed);
      worst = std::max(worst, std::fabs(empirical_plus_fraction(w) - target));
    }
    return worst;
  };
  // Quadrupling n should roughly halve the band; allow generous noise.
  CHECK(spread(256000) < 0.75 * spread(16000));
}

TEST_CASE("fit_scale") {
  CHECK(fit_scale(Kind::laplace, {1.0, -1.0}).scale == doctest::Approx(1.0));
  CHECK(fit_scale(Kind::gauss, {2.0, -2.0}).scale == doctest::Approx(2.0));
  CHECK_THROWS_AS(fit_scale(Kind::laplace, {0.0, 0.0}), error);
  CHECK_THROWS_AS(fit_scale(Kind::laplace, {1.0}), error);

  auto w = sample_weights({Kind::laplace, 0.5}, 1000000, 5);
  double b_hat = fit_scale(Kind::laplace, w).scale;
  CHECK(b_hat > 0.498);
  CHECK(b_hat < 0.502);
}
