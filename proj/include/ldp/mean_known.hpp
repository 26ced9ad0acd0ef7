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

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "ldp/errors.hpp"
#include "ldp/mechanisms.hpp"
#include "ldp/normal_math.hpp"
#include "ldp/quantile.hpp"
#include "ldp/rng.hpp"
#include "ldp/user_pool.hpp"

namespace ldp {

enum class IntervalMethod { kKnownBf, kUnkVar, kLargeVar, kTrivialFullRange };

inline const char* to_string(IntervalMethod m) {
  switch (m) {
    case IntervalMethod::kKnownBf: return "KnownBF";
    case IntervalMethod::kUnkVar: return "UnkVar";
    case IntervalMethod::kLargeVar: return "LargeVar";
    default: return "TrivialFullRange";
  }
}

// [lo, hi] with nominal confidence 1-beta. mu_tilde is the point estimate and
// sigma_tilde_sq the variance of its sampling distribution (0 when the method
// provides no Gaussian likelihood, e.g. the trivial full-range interval).
struct ConfidenceInterval {
  double lo = 0.0;
  double hi = 0.0;
  double confidence = 0.0;
  double mu_tilde = 0.0;
  double sigma_tilde_sq = 0.0;
  IntervalMethod method = IntervalMethod::kKnownBf;

  double width() const { return hi - lo; }
  bool contains(double mu) const { return lo <= mu && mu <= hi; }
};

// Equipartition of [-R - sigma/2, R + sigma/2] into d = 2 ceil(R/sigma) + 1
// bins of width sigma centered at integer multiples of sigma. Bins are
// left-closed, right-open; points outside the covered span map to no bin.
class GaussianBins {
 public:
  GaussianBins(double sigma, double R) : sigma_(sigma) {
    if (!(sigma > 0.0) || !(R > 0.0)) throw ConfigError("GaussianBins: need sigma > 0 and R > 0");
    half_span_ = static_cast<long>(std::ceil(R / sigma));
  }

  std::size_t count() const { return static_cast<std::size_t>(2 * half_span_ + 1); }
  long half_span() const { return half_span_; }
  double center(long i) const { return static_cast<double>(i) * sigma_; }
  double lower_edge(long i) const { return (static_cast<double>(i) - 0.5) * sigma_; }
  double upper_edge(long i) const { return (static_cast<double>(i) + 0.5) * sigma_; }

  // Signed bin index of x, or nullopt outside the covered span.
  std::optional<long> signed_index_of(double x) const {
    if (!std::isfinite(x)) return std::nullopt;
    long i = static_cast<long>(std::floor(x / sigma_ + 0.5));
    // Align with the edge expressions so boundary points land exactly where a
    // direct comparison against the materialized bins would put them.
    while (x < lower_edge(i)) --i;
    while (x >= upper_edge(i)) ++i;
    if (i < -half_span_ || i > half_span_) return std::nullopt;
    return i;
  }

  // The same partition as a sorted bin list (for encoding cross-checks).
  std::vector<Bin> materialize() const {
    std::vector<Bin> bins;
    bins.reserve(count());
    for (long i = -half_span_; i <= half_span_; ++i) {
      bins.emplace_back(lower_edge(i), upper_edge(i));
    }
    return bins;
  }

 private:
  double sigma_;
  long half_span_;
};

// Configuration for the known-variance interval estimator.
struct KnownVarConfig {
  double sigma = 1.0;       // known data standard deviation
  double beta = 0.01;       // failure probability
  PrivacyParams privacy;    // per-user budget; delta in (0,1) for the Gaussian phase
  double R = 200.0;         // mean bound, mu in [-R, R]
  // Replace phase-2 Gaussian noise with Laplace((s2-s1)/eps) for a pure-eps
  // run. The output then carries no Gaussian likelihood, so ztest() rejects
  // configs with this flag set.
  bool pure_epsilon_phase2 = false;

  void validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("KnownVarConfig: sigma must be positive");
    if (!(beta > 0.0 && beta < 0.5)) throw ConfigError("KnownVarConfig: beta must lie in (0, 1/2)");
    privacy.validate();
    if (!pure_epsilon_phase2 && !(privacy.delta > 0.0)) {
      throw ConfigError("KnownVarConfig: the Gaussian phase needs delta in (0, 1)");
    }
    if (!(R >= sigma / 2.0)) throw ConfigError("KnownVarConfig: need R >= sigma/2");
  }

  std::size_t histogram_bins() const { return GaussianBins(sigma, R).count(); }
};

// First index attaining the maximum (deterministic tie-break toward the
// lowest index).
inline std::size_t argmax_lowest(std::span<const double> values) {
  if (values.empty()) throw ConfigError("argmax_lowest: empty input");
  return static_cast<std::size_t>(
      std::distance(values.begin(), std::max_element(values.begin(), values.end())));
}

// Histogram-phase sample size: ceil(800 ((e^{eps/2}+1)/(e^{eps/2}-1))^2 ln(8d/beta)).
inline std::size_t known_bf_phase1_size(const KnownVarConfig& cfg) {
  cfg.validate();
  const double half = cfg.privacy.epsilon / 2.0;
  const double coef = rr_coefficient(half);
  const double d = static_cast<double>(cfg.histogram_bins());
  return static_cast<std::size_t>(std::ceil(800.0 * coef * coef * std::log(8.0 * d / cfg.beta)));
}

// Total sample size below which known_bf refuses to run:
// ceil(1600 ((e^{eps/2}+1)/(e^{eps/2}-1))^2 ln(8d/beta)).
inline std::size_t min_sample_size_known(const KnownVarConfig& cfg) {
  cfg.validate();
  const double half = cfg.privacy.epsilon / 2.0;
  const double coef = rr_coefficient(half);
  const double d = static_cast<double>(cfg.histogram_bins());
  return static_cast<std::size_t>(std::ceil(1600.0 * coef * coef * std::log(8.0 * d / cfg.beta)));
}

// Phase-1 output: the most frequent bin of the privatized histogram.
struct ModeBinResult {
  long j_star = 0;                // signed bin index; center is j_star * sigma
  HistogramEstimate histogram;    // debiased counts over the d bins
  std::size_t n1 = 0;
};

// Phase 1 of the known-variance estimator: bit flipping over the sigma-width
// partition on n1 users, then the argmax of the debiased histogram.
inline ModeBinResult known_bf_phase1(UserPool& pool, const KnownVarConfig& cfg, RngStream& rng) {
  cfg.validate();
  const GaussianBins bins(cfg.sigma, cfg.R);
  const std::size_t d = bins.count();
  const std::size_t n1 = known_bf_phase1_size(cfg);
  auto users = pool.take(n1, "bit_flip", cfg.privacy.epsilon, 0.0);

  // Stream per-user flipped one-hot reports into per-coordinate 1-counts.
  // Draw order matches bf_flip exactly: one draw per coordinate, in order.
  const internal::RrFlipper flipper(cfg.privacy.epsilon / 2.0);
  std::vector<double> one_sums(d, 0.0);
  for (double x : users) {
    const auto idx = bins.signed_index_of(x);
    const std::size_t hot =
        idx ? static_cast<std::size_t>(*idx + bins.half_span()) : d;  // d = no bin
    for (std::size_t j = 0; j < d; ++j) {
      one_sums[j] += flipper.flip(j == hot ? 1 : 0, rng);
    }
  }

  ModeBinResult result;
  result.n1 = n1;
  result.histogram = bf_debias_sums(one_sums, n1, cfg.privacy.epsilon);
  result.j_star =
      static_cast<long>(argmax_lowest(result.histogram.estimates)) - bins.half_span();
  return result;
}

struct KnownBfResult {
  ConfidenceInterval ci;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  long j_star = 0;
  double clamp_lo = 0.0;       // phase-2 projection interval [s1, s2]
  double clamp_hi = 0.0;
  double noise_sigma_sq = 0.0; // per-user noise variance in phase 2
};

namespace internal {

// Phases 1+2 shared by known_bf and ztest; `n` is the total sample this run
// accounts for (the clamp-width union bound is over at most n points).
inline KnownBfResult RunKnownPipeline(UserPool& pool, const KnownVarConfig& cfg, std::size_t n,
                                      RngStream& rng) {
  const ModeBinResult phase1 = known_bf_phase1(pool, cfg, rng);
  const std::size_t n2 = n - phase1.n1;

  const double center = static_cast<double>(phase1.j_star) * cfg.sigma;
  const double spread = 2.0 * cfg.sigma +
                        cfg.sigma * std::sqrt(2.0 * std::log(8.0 * static_cast<double>(n) / cfg.beta));
  const double s1 = center - spread;
  const double s2 = center + spread;

  const double eps = cfg.privacy.epsilon;
  double noise_var;
  double sum = 0.0;
  if (cfg.pure_epsilon_phase2) {
    const double scale = (s2 - s1) / eps;
    noise_var = 2.0 * scale * scale;
    auto users = pool.take(n2, "laplace_mechanism", eps, 0.0);
    for (double x : users) sum += laplace_mechanism(x, s1, s2, eps, rng);
  } else {
    const double noise_sigma = gaussian_mechanism_sigma(s2 - s1, eps, cfg.privacy.delta);
    noise_var = noise_sigma * noise_sigma;
    auto users = pool.take(n2, "gaussian_mechanism", eps, cfg.privacy.delta);
    for (double x : users) {
      const double clamped = std::min(s2, std::max(s1, x));
      assert(clamped >= s1 && clamped <= s2);
      sum += clamped + sample_gaussian(rng, 0.0, noise_sigma);
    }
  }
  const double mu_tilde = sum / static_cast<double>(n2);
  const double sampling_var = (cfg.sigma * cfg.sigma + noise_var) / static_cast<double>(n2);
  const double tau = std::sqrt(sampling_var) * std_normal_inv_cdf(1.0 - cfg.beta / 8.0);

  KnownBfResult result;
  result.ci.lo = std::clamp(mu_tilde - tau, -cfg.R, cfg.R);
  result.ci.hi = std::clamp(mu_tilde + tau, -cfg.R, cfg.R);
  result.ci.confidence = 1.0 - cfg.beta;
  result.ci.mu_tilde = mu_tilde;
  result.ci.sigma_tilde_sq = sampling_var;
  result.ci.method = IntervalMethod::kKnownBf;
  result.n1 = phase1.n1;
  result.n2 = n2;
  result.j_star = phase1.j_star;
  result.clamp_lo = s1;
  result.clamp_hi = s2;
  result.noise_sigma_sq = noise_var;
  return result;
}

}  // namespace internal

// Known-variance confidence interval: a histogram phase locates the data's
// modal sigma-bin, a clamp-and-noise phase averages the remaining users, and
// the result is intersected with [-R, R]. Refuses to run below the certified
// minimum sample size.
inline KnownBfResult known_bf(UserPool& pool, const KnownVarConfig& cfg, RngStream& rng) {
  cfg.validate();
  const std::size_t n = pool.remaining();
  const std::size_t min_n = min_sample_size_known(cfg);
  if (n < min_n) {
    throw InsufficientSampleError("known_bf: pool of " + std::to_string(n) +
                                  " users is below the certified minimum " +
                                  std::to_string(min_n));
  }
  return internal::RunKnownPipeline(pool, cfg, n, rng);
}

struct ZTestResult {
  double mu_tilde = 0.0;
  double sampling_sd = 0.0;  // sqrt((sigma^2 + noise_var) / n2)
  double z_score = 0.0;
  double p_value = 1.0;      // two-sided
  bool reject = false;
};

// Two-sided Z-test of H0: mu = mu0 built on the known-variance pipeline's
// Gaussian likelihood N(mu_tilde, sampling_sd^2). The pipeline's histogram
// phase takes phase1_size users off the top of the pool; the rest form the
// test sample. Confidence beyond 1 - beta is unattainable, so significance
// must exceed beta.
inline ZTestResult ztest(UserPool& pool, const KnownVarConfig& cfg, double mu0,
                         double significance, RngStream& rng) {
  cfg.validate();
  if (cfg.pure_epsilon_phase2) {
    throw ConfigError("ztest: the Laplace phase-2 variant provides no Gaussian likelihood");
  }
  if (!(significance > 0.0 && significance < 1.0)) {
    throw ConfigError("ztest: significance must lie in (0, 1)");
  }
  if (!(significance > cfg.beta)) {
    throw ConfigError("ztest: significance must exceed beta (the estimate itself is only valid "
                      "up to probability beta)");
  }
  const std::size_t n = pool.remaining();
  const std::size_t n1 = known_bf_phase1_size(cfg);
  if (n < n1 + 1) {
    throw InsufficientSampleError("ztest: pool of " + std::to_string(n) +
                                  " users cannot cover the histogram phase (" +
                                  std::to_string(n1) + ") plus a test sample");
  }
  const KnownBfResult run = internal::RunKnownPipeline(pool, cfg, n, rng);

  ZTestResult result;
  result.mu_tilde = run.ci.mu_tilde;
  result.sampling_sd = std::sqrt(run.ci.sigma_tilde_sq);
  result.z_score = (run.ci.mu_tilde - mu0) / result.sampling_sd;
  result.p_value = 2.0 * (1.0 - std_normal_cdf(std::fabs(result.z_score)));
  result.reject = result.p_value < significance;
  return result;
}

}  // namespace ldp
