#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "siman/binarize.hpp"
#include "siman/rng.hpp"

using namespace siman;

namespace {

std::vector<std::uint8_t> bits(std::initializer_list<int> v) {
  std::vector<std::uint8_t> out;
  for (int x : v) out.push_back(static_cast<std::uint8_t>(x));
  return out;
}

}  // namespace

TEST_CASE("optimal_binarize picks the single large entry of [3, 1]") {
  // Enumerating both nonzero codes: L over {1,0} = 3, over {1,1} = 4/sqrt(2).
  BinaryCode c = optimal_binarize({3.0, 1.0});
  CHECK(c.bits == bits({1, 0}));
  CHECK(c.ones == 1);
}

TEST_CASE("optimal_binarize on a constant vector is all-ones") {
  for (std::size_t n : {1u, 2u, 7u, 33u}) {
    WeightVector w(n, -2.5);
    BinaryCode c = optimal_binarize(w);
    CHECK(c.ones == n);
  }
}

TEST_CASE("optimal_binarize rejects the all-zero vector") {
  CHECK_THROWS_WITH_AS(optimal_binarize({0.0, 0.0, 0.0}), doctest::Contains("all-zero"), error);
  try {
    optimal_binarize({0.0});
  } catch (const error& e) {
    CHECK(e.code() == errc::all_zero);
  }
}

TEST_CASE("optimal_binarize matches brute force on 1000 random vectors") {
  Rng rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    std::size_t n = 1 + rng.next_below(16);
    WeightVector w(n);
    for (double& x : w) x = rng.next_laplace(1.0);
    BinaryCode fast = optimal_binarize(w);
    BinaryCode slow = brute_force_binarize(w);
    CHECK(std::fabs(objective_value(w, fast) - objective_value(w, slow)) <= 1e-12);
  }
}

TEST_CASE("optimal_binarize is invariant under scaling") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t n = 1 + rng.next_below(24);
    WeightVector w(n), scaled(n);
    double alpha = (rng.next_double() - 0.5) * 10.0;
    if (alpha == 0.0) alpha = 0.5;
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = rng.next_gauss();
      scaled[i] = alpha * w[i];
    }
    if (std::all_of(w.begin(), w.end(), [](double x) { return x == 0.0; })) continue;
    CHECK(optimal_binarize(w).bits == optimal_binarize(scaled).bits);
  }
}

TEST_CASE("optimal_binarize is permutation-equivariant on distinct magnitudes") {
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t n = 2 + rng.next_below(20);
    WeightVector w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = rng.next_gauss() + 1e-6 * static_cast<double>(i);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.next_below(i)]);

    WeightVector pw(n);
    for (std::size_t i = 0; i < n; ++i) pw[i] = w[perm[i]];
    BinaryCode base = optimal_binarize(w);
    BinaryCode permuted = optimal_binarize(pw);
    for (std::size_t i = 0; i < n; ++i) CHECK(permuted.bits[i] == base.bits[perm[i]]);
  }
}

TEST_CASE("half_half_binarize hand cases") {
  CHECK(half_half_binarize({5.0, -1.0, 2.0, -4.0}).bits == bits({1, 0, 0, 1}));
  CHECK(half_half_binarize({0.0, 0.0}).bits == bits({1, 0}));  // tie -> lower index
  CHECK(half_half_binarize({-7.0}).bits == bits({1}));
}

TEST_CASE("half_half_binarize always places ceil(n/2) ones at the top magnitudes") {
  Rng rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    std::size_t n = 1 + rng.next_below(65);
    WeightVector w(n);
    for (double& x : w) x = rng.next_laplace(1.0);
    BinaryCode c = half_half_binarize(w);
    CHECK(c.ones == (n + 1) / 2);
    CHECK(std::accumulate(c.bits.begin(), c.bits.end(), std::size_t{0}) == c.ones);

    // Against a full-sort oracle (distinct magnitudes w.p. 1).
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&w](std::size_t a, std::size_t b) {
      return std::fabs(w[a]) > std::fabs(w[b]);
    });
    for (std::size_t i = 0; i < c.ones; ++i) CHECK(c.bits[order[i]] == 1);
  }
}

TEST_CASE("brute_force_binarize basics") {
  CHECK(brute_force_binarize({3.0, 1.0}).bits == bits({1, 0}));
  CHECK(brute_force_binarize({1.0, 1.0, 1.0}).bits == bits({1, 1, 1}));
  CHECK_THROWS_AS(brute_force_binarize(WeightVector(21, 1.0)), error);
}

TEST_CASE("brute_force_binarize dominates every enumerated code") {
  WeightVector w = {0.3, -2.0, 1.1, 0.05, -0.7};
  BinaryCode best = brute_force_binarize(w);
  double best_obj = objective_value(w, best);
  for (std::uint32_t mask = 1; mask < 32; ++mask) {
    BinaryCode c;
    c.bits.assign(5, 0);
    for (std::size_t i = 0; i < 5; ++i) {
      if (mask & (1u << i)) {
        c.bits[i] = 1;
        ++c.ones;
      }
    }
    CHECK(best_obj >= objective_value(w, c) - 1e-15);
  }
}

TEST_CASE("objective_value hand cases") {
  BinaryCode ones2{bits({1, 1}), 2};
  CHECK(objective_value({4.0, 4.0}, ones2) == doctest::Approx(1.0).epsilon(1e-12));
  BinaryCode first{bits({1, 0}), 1};
  CHECK(objective_value({3.0, 1.0}, first) == doctest::Approx(3.0 / std::sqrt(10.0)));
  CHECK(objective_value({1.0, -1.0}, first) == doctest::Approx(1.0 / std::sqrt(2.0)));
}

TEST_CASE("objective_value error paths") {
  BinaryCode empty{bits({0, 0}), 0};
  CHECK_THROWS_AS(objective_value({1.0, 2.0}, empty), error);
  BinaryCode one{bits({1, 0}), 1};
  CHECK_THROWS_AS(objective_value({0.0, 0.0}, one), error);
}

TEST_CASE("sign_binarize_scaled") {
  SignCode c = sign_binarize_scaled({2.0, -2.0});
  CHECK(c.bits[0] == 1);
  CHECK(c.bits[1] == -1);
  CHECK(c.scale == doctest::Approx(2.0));

  SignCode z = sign_binarize_scaled({0.0, 0.0});
  CHECK(z.bits[0] == 1);  // sign(0) := +1
  CHECK(z.bits[1] == 1);
  CHECK(z.scale == 0.0);

  CHECK(sign_binarize_scaled({1.0, -3.0}).scale == doctest::Approx(2.0));
}

TEST_CASE("quantization_error") {
  std::vector<double> w = {3.0, 4.0};
  std::vector<double> parallel = {6.0, 8.0};
  std::vector<double> ortho = {-4.0, 3.0};
  std::vector<double> e1 = {1.0, 0.0};
  CHECK(quantization_error(w, parallel) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(quantization_error(w, ortho) == doctest::Approx(25.0));
  CHECK(quantization_error(w, e1) == doctest::Approx(16.0));
  std::vector<double> zero = {0.0, 0.0};
  CHECK_THROWS_AS(quantization_error(w, zero), error);
}

TEST_CASE("angle_bounds reproduces the half-half deviation cases") {
  AngleBounds wide = angle_bounds(37, 13);
  CHECK(wide.lo_deg == doctest::Approx(30.66).epsilon(0.0004));
  CHECK(wide.hi_deg == doctest::Approx(36.35).epsilon(0.0004));

  AngleBounds narrow = angle_bounds(51, 1);
  CHECK(narrow.lo_deg == doctest::Approx(7.97).epsilon(0.002));
  CHECK(narrow.hi_deg == doctest::Approx(8.05).epsilon(0.002));

  AngleBounds same = angle_bounds(10, 0);
  CHECK(same.lo_deg == 0.0);
  CHECK(same.hi_deg == 0.0);

  CHECK_THROWS_AS(angle_bounds(5, 6), error);
}

TEST_CASE("angle_bounds are nondecreasing in r") {
  for (std::size_t k : {3u, 10u, 37u}) {
    double prev_lo = -1.0, prev_hi = -1.0;
    for (std::size_t r = 0; r <= k; ++r) {
      AngleBounds b = angle_bounds(k, r);
      CHECK(b.lo_deg <= b.hi_deg + 1e-12);
      CHECK(b.lo_deg >= prev_lo);
      CHECK(b.hi_deg >= prev_hi);
      prev_lo = b.lo_deg;
      prev_hi = b.hi_deg;
    }
  }
}

TEST_CASE("inequality_margin") {
  // L_1 = 3, so margin = 3 (sqrt 2 - 1) - 1.
  CHECK(inequality_margin({3.0, 1.0}, 1) ==
        doctest::Approx(3.0 * (std::sqrt(2.0) - 1.0) - 1.0));

  // At the optimal k the objective stops growing, so the margin is positive.
  Rng rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t n = 3 + rng.next_below(30);
    WeightVector w(n);
    for (double& x : w) x = rng.next_laplace(1.0);
    BinaryCode c = optimal_binarize(w);
    if (c.ones < n) CHECK(inequality_margin(w, c.ones) > 0.0);
  }

  // On a constant vector the objective keeps growing: margin < 0 for k < n.
  WeightVector flat(12, 1.7);
  for (std::size_t k = 1; k < flat.size(); ++k) CHECK(inequality_margin(flat, k) < 0.0);

  CHECK_THROWS_AS(inequality_margin({1.0, 2.0}, 2), error);
  CHECK_THROWS_AS(inequality_margin({1.0, 2.0}, 0), error);
}
