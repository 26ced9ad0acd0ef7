//
// Copyright 2026 The ldpmean Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "ldp/errors.hpp"
#include "ldp/normal_math.hpp"
#include "ldp/rng.hpp"
#include "ldp/user_pool.hpp"

namespace ldp {

// Per-invocation privacy budget. delta = 0 means pure epsilon-LDP.
struct PrivacyParams {
  double epsilon = 1.0;
  double delta = 0.0;

  void validate() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
      throw ConfigError("PrivacyParams: epsilon must be positive and finite");
    }
    if (!(delta >= 0.0 && delta < 1.0)) {
      throw ConfigError("PrivacyParams: delta must lie in [0, 1)");
    }
  }
};

// Debiased per-bin frequency estimates. Entries are raw (unclamped): they may
// be negative or exceed n; callers clamp only where an inverse CDF needs an
// argument in (0,1).
struct HistogramEstimate {
  std::vector<double> estimates;
  std::size_t n = 0;
};

// Probability that randomized response keeps the input bit: e^eps/(1+e^eps).
inline double rr_keep_probability(double epsilon) {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw ConfigError("rr_keep_probability: epsilon must be nonnegative and finite");
  }
  return 1.0 / (1.0 + std::exp(-epsilon));
}

// Debiasing coefficient (e^eps+1)/(e^eps-1), in an overflow-safe form.
inline double rr_coefficient(double epsilon) {
  return 1.0 + 2.0 / std::expm1(epsilon);
}

namespace internal {

// Integer threshold such that (next_u64() < threshold) fires with
// probability p (up to one part in 2^53).
inline std::uint64_t ProbabilityToThreshold(double p) {
  if (p <= 0.0) return 0;
  const double scaled = p * 0x1.0p64;
  if (scaled >= 0x1.0p64) return ~0ULL;
  return static_cast<std::uint64_t>(scaled);
}

// Precomputed keep threshold for a run of randomized-response flips.
struct RrFlipper {
  std::uint64_t keep_threshold;

  explicit RrFlipper(double epsilon)
      : keep_threshold(ProbabilityToThreshold(rr_keep_probability(epsilon))) {}

  // Branchless: flip events are unpredictable, so a conditional here would
  // mispredict a large fraction of the time on the histogram hot path.
  int flip(int bit, RngStream& rng) const {
    return bit ^ static_cast<int>(rng.next_u64() >= keep_threshold);
  }
};

}  // namespace internal

// Randomized response: return the input bit with probability
// e^eps/(1+e^eps), the opposite bit otherwise. epsilon = 0 is the uniform
// limit (output independent of input).
inline int rr_flip(int bit, double epsilon, RngStream& rng) {
  if (bit != 0 && bit != 1) throw ConfigError("rr_flip: bit must be 0 or 1");
  return internal::RrFlipper(epsilon).flip(bit, rng);
}

// Debiased count-of-ones estimator:
//   ((e^eps+1)/(e^eps-1)) * report_sum - n/(e^eps-1).
// report_sum may be real-valued so that exact expectations invert exactly.
inline double rr_debias(double report_sum, std::size_t n, double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ConfigError("rr_debias: epsilon must be positive and finite");
  }
  if (!(report_sum >= 0.0 && report_sum <= static_cast<double>(n))) {
    throw ConfigError("rr_debias: report_sum must lie in [0, n]");
  }
  return rr_coefficient(epsilon) * report_sum - static_cast<double>(n) / std::expm1(epsilon);
}

// Debiased estimate of P[phi(X) = 1] from one randomized-response report per
// user in `users`. The raw value may fall outside [0,1]; clamping is the
// caller's decision.
template <class Predicate>
double rr_estimate_fraction(std::span<const double> users, Predicate&& phi, double epsilon,
                            RngStream& rng) {
  if (users.empty()) throw ConfigError("rr_estimate_fraction: empty user slice");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ConfigError("rr_estimate_fraction: epsilon must be positive and finite");
  }
  const internal::RrFlipper flipper(epsilon);
  std::int64_t report_sum = 0;
  for (double x : users) {
    report_sum += flipper.flip(phi(x) ? 1 : 0, rng);
  }
  return rr_debias(static_cast<double>(report_sum), users.size(), epsilon) /
         static_cast<double>(users.size());
}

// Users needed so the randomized-response fraction estimate is alpha-accurate
// with probability 1-beta: ceil((2/alpha^2) ((e^eps+1)/(e^eps-1))^2 ln(4/beta)).
inline std::size_t rr_sample_size(double alpha, double beta, double epsilon) {
  if (!(alpha > 0.0 && alpha < 0.5) || !(beta > 0.0 && beta < 0.5)) {
    throw ConfigError("rr_sample_size: alpha and beta must lie in (0, 1/2)");
  }
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ConfigError("rr_sample_size: epsilon must be positive and finite");
  }
  const double coef = rr_coefficient(epsilon);
  return static_cast<std::size_t>(
      std::ceil(2.0 / (alpha * alpha) * coef * coef * std::log(4.0 / beta)));
}

// Half-open interval [lo, hi).
using Bin = std::pair<double, double>;

// One-hot encoding of x over d disjoint half-open bins, all-zero if x lies in
// no bin. Bins must be sorted left to right and pairwise disjoint.
inline std::vector<std::uint8_t> bf_encode(double x, std::span<const Bin> bins) {
  for (std::size_t i = 0; i < bins.size(); ++i) {
    if (!(bins[i].first < bins[i].second)) {
      throw ConfigError("bf_encode: bin with nonpositive width");
    }
    if (i + 1 < bins.size() && !(bins[i].second <= bins[i + 1].first)) {
      throw ConfigError("bf_encode: bins overlap or are unsorted");
    }
  }
  std::vector<std::uint8_t> onehot(bins.size(), 0);
  for (std::size_t i = 0; i < bins.size(); ++i) {
    if (x >= bins[i].first && x < bins[i].second) {
      onehot[i] = 1;
      break;
    }
  }
  return onehot;
}

// Bit flipping: independent randomized response on every coordinate at budget
// eps/2 per coordinate (eps-LDP in total for one-hot inputs).
inline std::vector<std::uint8_t> bf_flip(std::span<const std::uint8_t> onehot, double epsilon,
                                         RngStream& rng) {
  const internal::RrFlipper flipper(epsilon / 2.0);
  std::vector<std::uint8_t> out(onehot.size());
  for (std::size_t j = 0; j < onehot.size(); ++j) {
    if (onehot[j] > 1) throw ConfigError("bf_flip: vector entries must be 0 or 1");
    out[j] = static_cast<std::uint8_t>(flipper.flip(onehot[j], rng));
  }
  return out;
}

// Debiased histogram from per-coordinate sums of 1-reports:
//   theta_j = ((e^{eps/2}+1)/(e^{eps/2}-1)) (S_j - n/(1+e^{eps/2})).
// Sums may be real-valued so exact expectations invert exactly.
inline HistogramEstimate bf_debias_sums(std::span<const double> one_sums, std::size_t n,
                                        double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ConfigError("bf_debias: epsilon must be positive and finite");
  }
  if (n < 1) throw ConfigError("bf_debias: need at least one report");
  const double half = epsilon / 2.0;
  const double coef = rr_coefficient(half);
  const double baseline = static_cast<double>(n) / (1.0 + std::exp(half));
  HistogramEstimate est;
  est.n = n;
  est.estimates.reserve(one_sums.size());
  for (double s : one_sums) {
    est.estimates.push_back(coef * (s - baseline));
  }
  return est;
}

// Debiased histogram from n flipped reports of equal dimension d.
inline HistogramEstimate bf_debias(std::span<const std::vector<std::uint8_t>> reports,
                                   double epsilon) {
  if (reports.empty()) throw ConfigError("bf_debias: need at least one report");
  const std::size_t d = reports.front().size();
  std::vector<double> sums(d, 0.0);
  for (const auto& report : reports) {
    if (report.size() != d) throw ConfigError("bf_debias: report dimension mismatch");
    for (std::size_t j = 0; j < d; ++j) sums[j] += report[j];
  }
  return bf_debias_sums(sums, reports.size(), epsilon);
}

// Users needed so the debiased histogram is alpha-accurate in every one of d
// coordinates with probability 1-beta.
inline std::size_t bf_sample_size(double alpha, double beta, double epsilon, std::size_t d) {
  if (d < 1) throw ConfigError("bf_sample_size: d must be at least 1");
  if (!(alpha > 0.0 && alpha < 0.5) || !(beta > 0.0 && beta < 0.5)) {
    throw ConfigError("bf_sample_size: alpha and beta must lie in (0, 1/2)");
  }
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ConfigError("bf_sample_size: epsilon must be positive and finite");
  }
  const double half = epsilon / 2.0;
  const double coef = rr_coefficient(half);
  return static_cast<std::size_t>(std::ceil(2.0 / (alpha * alpha) * coef * coef *
                                            std::log(4.0 * static_cast<double>(d) / beta)));
}

// Noise standard deviation of the clamp-and-noise mechanism on an interval of
// length `len`: variance 2 len^2 ln(2/delta) / eps^2.
inline double gaussian_mechanism_sigma(double len, double epsilon, double delta) {
  return len * std::sqrt(2.0 * std::log(2.0 / delta)) / epsilon;
}

// Project x onto [s1, s2], then add N(0, 2 (s2-s1)^2 ln(2/delta) / eps^2).
inline double gaussian_mechanism(double x, double s1, double s2, double epsilon, double delta,
                                 RngStream& rng) {
  if (!(s1 < s2)) throw ConfigError("gaussian_mechanism: need s1 < s2");
  if (!(delta > 0.0 && delta < 1.0)) {
    throw ConfigError("gaussian_mechanism: delta must lie in (0, 1)");
  }
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ConfigError("gaussian_mechanism: epsilon must be positive and finite");
  }
  const double clamped = std::min(s2, std::max(s1, x));
  return clamped + sample_gaussian(rng, 0.0, gaussian_mechanism_sigma(s2 - s1, epsilon, delta));
}

// Pure-epsilon sibling: project onto [s1, s2], add Laplace((s2-s1)/eps).
inline double laplace_mechanism(double x, double s1, double s2, double epsilon, RngStream& rng) {
  if (!(s1 < s2)) throw ConfigError("laplace_mechanism: need s1 < s2");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ConfigError("laplace_mechanism: epsilon must be positive and finite");
  }
  const double clamped = std::min(s2, std::max(s1, x));
  return clamped + sample_laplace(rng, (s2 - s1) / epsilon);
}

}  // namespace ldp
