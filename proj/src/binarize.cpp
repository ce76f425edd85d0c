#include "siman/binarize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace siman {

namespace {

void require_nonempty(const WeightVector& w) {
  if (w.empty()) throw error(errc::invalid_args, "weight vector must be nonempty");
}

bool all_zero(const WeightVector& w) {
  return std::all_of(w.begin(), w.end(), [](double x) { return x == 0.0; });
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

BinaryCode code_from_indices(std::size_t n, std::span<const std::size_t> idx) {
  BinaryCode code;
  code.bits.assign(n, 0);
  for (std::size_t i : idx) code.bits[i] = 1;
  code.ones = idx.size();
  return code;
}

}  // namespace

std::vector<std::size_t> top_magnitude_indices(const WeightVector& w, std::size_t m) {
  std::vector<std::size_t> idx(w.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto before = [&w](std::size_t a, std::size_t b) {
    double ma = std::fabs(w[a]), mb = std::fabs(w[b]);
    if (ma != mb) return ma > mb;
    return a < b;
  };
  if (m < idx.size()) {
    std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(m), idx.end(), before);
    idx.resize(m);
  }
  return idx;
}

BinaryCode optimal_binarize(const WeightVector& w) {
  require_nonempty(w);
  if (all_zero(w)) throw error(errc::all_zero, "optimal_binarize: all-zero weight vector");

  const std::size_t n = w.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&w](std::size_t a, std::size_t b) {
    double ma = std::fabs(w[a]), mb = std::fabs(w[b]);
    if (ma != mb) return ma > mb;
    return a < b;
  });

  // L_k = S_k / sqrt(k); smallest k wins exact ties.
  double prefix = 0.0;
  double best = -1.0;
  std::size_t best_k = 1;
  for (std::size_t k = 1; k <= n; ++k) {
    prefix += std::fabs(w[order[k - 1]]);
    double lk = prefix / std::sqrt(static_cast<double>(k));
    if (lk > best) {
      best = lk;
      best_k = k;
    }
  }
  return code_from_indices(n, std::span(order.data(), best_k));
}

BinaryCode half_half_binarize(const WeightVector& w) {
  require_nonempty(w);
  const std::size_t m = (w.size() + 1) / 2;
  auto idx = top_magnitude_indices(w, m);
  return code_from_indices(w.size(), idx);
}

BinaryCode brute_force_binarize(const WeightVector& w) {
  require_nonempty(w);
  if (w.size() > 20) throw error(errc::too_large, "brute_force_binarize: n > 20");
  if (all_zero(w)) throw error(errc::all_zero, "brute_force_binarize: all-zero weight vector");

  const std::size_t n = w.size();
  std::vector<double> mag(n);
  for (std::size_t i = 0; i < n; ++i) mag[i] = std::fabs(w[i]);

  double best = -1.0;
  std::size_t best_ones = n + 1;
  std::uint32_t best_mask = 0;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    double dot = 0.0;
    std::size_t ones = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        dot += mag[i];
        ++ones;
      }
    }
    double value = dot / std::sqrt(static_cast<double>(ones));
    if (value > best || (value == best && ones < best_ones)) {
      best = value;
      best_ones = ones;
      best_mask = mask;
    }
  }

  BinaryCode code;
  code.bits.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (best_mask & (1u << i)) code.bits[i] = 1;
  }
  code.ones = best_ones;
  return code;
}

double objective_value(const WeightVector& w, const BinaryCode& code) {
  require_nonempty(w);
  if (code.bits.size() != w.size())
    throw error(errc::length_mismatch, "objective_value: code/weight length mismatch");
  if (code.ones == 0) throw error(errc::empty_code, "objective_value: empty code");
  if (all_zero(w)) throw error(errc::all_zero, "objective_value: all-zero weight vector");

  double dot = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (code.bits[i]) dot += std::fabs(w[i]);
  }
  return dot / (std::sqrt(static_cast<double>(code.ones)) * norm2(w));
}

SignCode sign_binarize_scaled(const WeightVector& w) {
  require_nonempty(w);
  SignCode out;
  out.bits.resize(w.size());
  double sum_abs = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    out.bits[i] = w[i] >= 0.0 ? 1 : -1;
    sum_abs += std::fabs(w[i]);
  }
  out.scale = sum_abs / static_cast<double>(w.size());
  return out;
}

double quantization_error(std::span<const double> w, std::span<const double> v) {
  if (w.size() != v.size())
    throw error(errc::length_mismatch, "quantization_error: length mismatch");
  double vv = 0.0, wv = 0.0, ww = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    vv += v[i] * v[i];
    wv += w[i] * v[i];
    ww += w[i] * w[i];
  }
  if (vv == 0.0) throw error(errc::zero_direction, "quantization_error: zero direction");
  double err = ww - wv * wv / vv;
  return err < 0.0 ? 0.0 : err;
}

AngleBounds angle_bounds(std::size_t k, std::size_t r) {
  if (k == 0 || r > k) throw error(errc::invalid_args, "angle_bounds: need 0 <= r <= k, k >= 1");
  constexpr double kRad2Deg = 57.29577951308232;
  double kk = static_cast<double>(k), rr = static_cast<double>(r);
  AngleBounds b;
  b.lo_deg = std::acos(std::sqrt(kk / (kk + rr))) * kRad2Deg;
  b.hi_deg = std::acos(std::sqrt((kk - rr) / kk)) * kRad2Deg;
  return b;
}

double inequality_margin(const WeightVector& w, std::size_t k) {
  require_nonempty(w);
  if (k < 1 || k >= w.size())
    throw error(errc::out_of_range, "inequality_margin: need 1 <= k < n");

  std::vector<double> mag(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) mag[i] = std::fabs(w[i]);
  std::sort(mag.begin(), mag.end(), std::greater<>());

  double prefix = std::accumulate(mag.begin(), mag.begin() + static_cast<std::ptrdiff_t>(k), 0.0);
  double lk = prefix / std::sqrt(static_cast<double>(k));
  double step = std::sqrt(static_cast<double>(k + 1)) - std::sqrt(static_cast<double>(k));
  return lk * step - mag[k];
}

}  // namespace siman
