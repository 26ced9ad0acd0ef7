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
#include <limits>
#include <string>
#include <vector>

#include "ldp/errors.hpp"
#include "ldp/mean_known.hpp"
#include "ldp/mechanisms.hpp"
#include "ldp/normal_math.hpp"
#include "ldp/quantile.hpp"
#include "ldp/rng.hpp"
#include "ldp/user_pool.hpp"

namespace ldp {

// Quantile tolerances that keep both binary-search thresholds within sigma/4
// of their targets.
inline constexpr double kMedianLambda = 0.098;
inline constexpr double kUpperLambda = 0.052;

// Regime detector: decide BoundedVariance iff the privatized estimate of
// P[X in [-2R, 2R]] is at least this threshold (estimated to accuracy 0.07).
inline constexpr double kRegimeThreshold = 0.76;
inline constexpr double kRegimeAccuracy = 0.07;

struct UnknownVarConfig {
  double sigma_min;
  double sigma_max;
  double beta;
  PrivacyParams privacy;
  double R;

  void validate() const {
    if (!(R > 0.0) || !std::isfinite(R)) throw ConfigError("UnknownVarConfig: R must be positive");
    if (!(sigma_min > 0.0)) throw ConfigError("UnknownVarConfig: sigma_min must be positive");
    if (!(sigma_min <= sigma_max)) throw ConfigError("UnknownVarConfig: need sigma_min <= sigma_max");
    if (!(sigma_max <= 2.0 * R)) throw ConfigError("UnknownVarConfig: need sigma_max <= 2R");
    if (!(beta > 0.0 && beta < 0.5)) throw ConfigError("UnknownVarConfig: beta must lie in (0, 1/2)");
    privacy.validate();
    if (!(privacy.delta > 0.0)) {
      throw ConfigError("UnknownVarConfig: the final noise phase needs delta in (0, 1)");
    }
  }
};

enum class Regime { kBoundedVariance, kLargeVariance };

inline const char* to_string(Regime r) {
  return r == Regime::kBoundedVariance ? "BoundedVariance" : "LargeVariance";
}

struct RegimeDecision {
  Regime decision = Regime::kBoundedVariance;
  double fraction_estimate = 0.0;  // raw (unclamped) estimate of P[X in [-2R,2R]]
  std::size_t users_consumed = 0;
};

// Users the regime detector needs for 0.07-accuracy with probability 1-beta.
inline std::size_t detect_regime_sample_size(double epsilon, double beta) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ConfigError("detect_regime: epsilon must be positive and finite");
  }
  if (!(beta > 0.0 && beta < 0.5)) throw ConfigError("detect_regime: beta must lie in (0, 1/2)");
  const double coef = rr_coefficient(epsilon);
  return static_cast<std::size_t>(std::ceil(
      2.0 / (kRegimeAccuracy * kRegimeAccuracy) * coef * coef * std::log(4.0 / beta)));
}

// Decide between the bounded-variance pipeline (sigma < 2R) and the
// large-variance estimator (sigma > R) from a privatized estimate of the
// probability mass inside [-2R, 2R]. Ties at the threshold count as bounded.
inline RegimeDecision detect_regime(UserPool& pool, double epsilon, double beta, double R,
                                    RngStream& rng) {
  if (!(R > 0.0)) throw ConfigError("detect_regime: R must be positive");
  const std::size_t m = detect_regime_sample_size(epsilon, beta);
  auto users = pool.take(m, "randomized_response", epsilon, 0.0);
  const double estimate = rr_estimate_fraction(
      users, [R](double x) { return std::fabs(x) <= 2.0 * R; }, epsilon, rng);
  RegimeDecision decision;
  decision.fraction_estimate = estimate;
  decision.decision =
      estimate >= kRegimeThreshold ? Regime::kBoundedVariance : Regime::kLargeVariance;
  decision.users_consumed = m;
  return decision;
}

// Interval estimate plus pipeline diagnostics.
struct MeanEstimateResult {
  ConfidenceInterval ci;
  double t_mu_hat = std::numeric_limits<double>::quiet_NaN();     // ~median threshold
  double t_sigma_hat = std::numeric_limits<double>::quiet_NaN();  // ~(mu+sigma) threshold
  double regime_fraction = std::numeric_limits<double>::quiet_NaN();
  bool guard_fired = false;
  std::vector<std::size_t> users_per_phase;  // budgeted users per consuming phase, in order
};

namespace internal {

struct UnkVarPlan {
  std::size_t t_med = 0;
  std::size_t t_sd = 0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  std::size_t aggregate_bound = 0;
};

inline UnkVarPlan PlanUnkVar(const UnknownVarConfig& cfg) {
  UnkVarPlan plan;
  const double quantile_resolution = cfg.sigma_min / 4.0;
  plan.t_med = iterations_for(-cfg.R, cfg.R, quantile_resolution);
  plan.t_sd = iterations_for(-cfg.R, cfg.R + cfg.sigma_max, quantile_resolution);
  const double coef = rr_coefficient(cfg.privacy.epsilon);
  const auto phase_size = [&](std::size_t t, double lambda) {
    const double td = static_cast<double>(t);
    return static_cast<std::size_t>(std::ceil(
        td / (lambda * lambda) * coef * coef * std::log(16.0 * td / cfg.beta)));
  };
  plan.n1 = phase_size(plan.t_med, kMedianLambda);
  plan.n2 = phase_size(plan.t_sd, kUpperLambda);
  const double depth = std::log2(16.0 * cfg.R / cfg.sigma_min);
  plan.aggregate_bound = static_cast<std::size_t>(
      std::ceil(1500.0 * depth * coef * coef * std::log(16.0 * depth / cfg.beta)));
  return plan;
}

}  // namespace internal

// Smallest pool that satisfies both the per-phase partition and the aggregate
// sample bound.
inline std::size_t min_sample_size_unknown(const UnknownVarConfig& cfg) {
  cfg.validate();
  const internal::UnkVarPlan plan = internal::PlanUnkVar(cfg);
  return std::max(plan.n1 + plan.n2 + 1, plan.aggregate_bound);
}

// Unknown-variance confidence interval. Two quantile searches bracket the
// data's median and ~84th percentile, their gap proxies sigma, and the
// remaining users run the known-variance clamp-and-noise tail on the interval
// around the median estimate.
inline MeanEstimateResult unk_var(UserPool& pool, const UnknownVarConfig& cfg, RngStream& rng) {
  cfg.validate();
  const std::size_t n = pool.remaining();
  const internal::UnkVarPlan plan = internal::PlanUnkVar(cfg);
  const std::size_t gate = std::max(plan.n1 + plan.n2 + 1, plan.aggregate_bound);
  if (n < gate) {
    throw InsufficientSampleError(
        "unk_var: pool of " + std::to_string(n) + " users is below the gate " +
        std::to_string(gate) + " (phases need " + std::to_string(plan.n1 + plan.n2 + 1) +
        ", aggregate bound is " + std::to_string(plan.aggregate_bound) + ")");
  }
  const std::size_t n3 = n - plan.n1 - plan.n2;
  const double eps = cfg.privacy.epsilon;

  // Phase A: median threshold over [-R, R].
  QuantileQuery median_query{0.5, -cfg.R, cfg.R, kMedianLambda, plan.t_med};
  const QuantileResult median = bin_rr(pool, plan.n1, median_query, eps, rng);
  pool.discard(plan.n1 - median.iterations_used * (plan.n1 / plan.t_med));

  // Phase B: ~84th percentile threshold over [-R, R + sigma_max].
  QuantileQuery upper_query{std_normal_cdf(1.0), -cfg.R, cfg.R + cfg.sigma_max, kUpperLambda,
                            plan.t_sd};
  const QuantileResult upper = bin_rr(pool, plan.n2, upper_query, eps, rng);
  pool.discard(plan.n2 - upper.iterations_used * (plan.n2 / plan.t_sd));

  const double t_mu = median.threshold;
  const double t_sigma = upper.threshold;
  if (!(t_sigma > t_mu)) {
    throw EstimationFailureError("unk_var: upper-quantile threshold " + std::to_string(t_sigma) +
                                 " did not exceed the median threshold " + std::to_string(t_mu));
  }

  // Phase C: clamp-and-noise around the median estimate.
  const double gap = t_sigma - t_mu;
  const double spread =
      gap * (0.5 + 2.0 * std::sqrt(2.0 * std::log(8.0 * static_cast<double>(n) / cfg.beta)));
  const double s1 = t_mu - spread;
  const double s2 = t_mu + spread;
  const double noise_sigma = gaussian_mechanism_sigma(s2 - s1, eps, cfg.privacy.delta);
  auto users = pool.take(n3, "gaussian_mechanism", eps, cfg.privacy.delta);
  double sum = 0.0;
  for (double x : users) {
    const double clamped = std::min(s2, std::max(s1, x));
    assert(clamped >= s1 && clamped <= s2);
    sum += clamped + sample_gaussian(rng, 0.0, noise_sigma);
  }
  const double mu_tilde = sum / static_cast<double>(n3);
  // The data variance is unknown; 2*gap upper-bounds sigma whenever the
  // quantile phases succeeded, keeping the interval conservative.
  const double sigma_proxy = 2.0 * gap;
  const double sampling_var =
      (sigma_proxy * sigma_proxy + noise_sigma * noise_sigma) / static_cast<double>(n3);
  const double tau = std::sqrt(sampling_var) * std_normal_inv_cdf(1.0 - cfg.beta / 8.0);

  MeanEstimateResult result;
  result.ci.lo = std::clamp(mu_tilde - tau, -cfg.R, cfg.R);
  result.ci.hi = std::clamp(mu_tilde + tau, -cfg.R, cfg.R);
  result.ci.confidence = 1.0 - cfg.beta;
  result.ci.mu_tilde = mu_tilde;
  result.ci.sigma_tilde_sq = sampling_var;
  result.ci.method = IntervalMethod::kUnkVar;
  result.t_mu_hat = t_mu;
  result.t_sigma_hat = t_sigma;
  result.users_per_phase = {plan.n1, plan.n2, n3};
  return result;
}

// Accuracy bound B on the two tail-mass estimates in the large-variance
// estimator; the interpolation branch is only trusted when the estimated
// masses differ by at least 800B.
inline double large_var_noise_bound(std::size_t n, double epsilon, double beta) {
  const double coef = rr_coefficient(epsilon);
  return coef * std::sqrt(std::log(8.0 / beta) / static_cast<double>(n));
}

// Gaussian curve through the two tail masses: mu and sigma of the normal
// whose CDF is p_minus at -R and p_plus at R. Probabilities are clamped into
// [1e-10, 1-1e-10] before inversion.
inline std::pair<double, double> large_var_interpolate(double p_minus, double p_plus, double R) {
  constexpr double kClamp = 1e-10;
  const double t_minus = std_normal_inv_cdf(std::clamp(p_minus, kClamp, 1.0 - kClamp));
  const double t_plus = std_normal_inv_cdf(std::clamp(p_plus, kClamp, 1.0 - kClamp));
  const double gap = t_plus - t_minus;
  if (!(gap > 0.0)) {
    throw EstimationFailureError("large_var: inverted thresholds collapsed (t+ <= t-)");
  }
  const double mu = R * (-t_plus - t_minus) / gap;
  const double sigma = 2.0 * R / gap;
  return {mu, sigma};
}

// Very-large-variance estimator (intended regime sigma > R): estimate the
// tail masses below -R and below R on the two pool halves, and interpolate
// the Gaussian through them — unless the masses are too close to tell apart,
// in which case [-R, R] itself is certified.
inline MeanEstimateResult large_var(UserPool& pool, double epsilon, double R, double beta,
                                    RngStream& rng) {
  if (!(R > 0.0) || !std::isfinite(R)) throw ConfigError("large_var: R must be positive");
  if (!(beta > 0.0 && beta < 0.5)) throw ConfigError("large_var: beta must lie in (0, 1/2)");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ConfigError("large_var: epsilon must be positive and finite");
  }
  const std::size_t n = pool.remaining();
  if (n < 2) throw InsufficientSampleError("large_var: need at least 2 users");
  const std::size_t n_minus = (n + 1) / 2;  // first ceil(n/2) users
  const std::size_t n_plus = n - n_minus;

  auto lower_users = pool.take(n_minus, "randomized_response", epsilon, 0.0);
  const double p_minus = rr_estimate_fraction(
      lower_users, [R](double x) { return x <= -R; }, epsilon, rng);
  auto upper_users = pool.take(n_plus, "randomized_response", epsilon, 0.0);
  const double p_plus = rr_estimate_fraction(
      upper_users, [R](double x) { return x <= R; }, epsilon, rng);

  const double bound = large_var_noise_bound(n, epsilon, beta);

  MeanEstimateResult result;
  result.users_per_phase = {n_minus, n_plus};
  result.ci.confidence = 1.0 - beta;
  if (p_plus - p_minus < 800.0 * bound) {
    result.guard_fired = true;
    result.ci.lo = -R;
    result.ci.hi = R;
    result.ci.mu_tilde = 0.0;
    result.ci.sigma_tilde_sq = 0.0;
    result.ci.method = IntervalMethod::kTrivialFullRange;
    return result;
  }
  const auto [mu_tilde, sigma_tilde] = large_var_interpolate(p_minus, p_plus, R);
  const double tau = 9.0 * R * bound / (2.0 * R / sigma_tilde);  // 9 R B / (t+ - t-)
  result.ci.lo = mu_tilde - tau;
  result.ci.hi = mu_tilde + tau;
  result.ci.mu_tilde = mu_tilde;
  result.ci.sigma_tilde_sq = 0.0;
  result.ci.method = IntervalMethod::kLargeVar;
  return result;
}

// Inputs for the self-dispatching estimator: no sigma_max needed.
struct AutoMeanConfig {
  double sigma_min;
  double beta;
  PrivacyParams privacy;
  double R;
};

// Full unknown-variance estimator: a detection prefix classifies the variance
// regime, then the matching pipeline runs on the remainder of the pool.
inline MeanEstimateResult estimate_mean_auto(UserPool& pool, const AutoMeanConfig& cfg,
                                             RngStream& rng) {
  const RegimeDecision regime =
      detect_regime(pool, cfg.privacy.epsilon, cfg.beta, cfg.R, rng);
  MeanEstimateResult result;
  if (regime.decision == Regime::kBoundedVariance) {
    UnknownVarConfig bounded{cfg.sigma_min, 2.0 * cfg.R, cfg.beta, cfg.privacy, cfg.R};
    result = unk_var(pool, bounded, rng);
  } else {
    result = large_var(pool, cfg.privacy.epsilon, cfg.R, cfg.beta, rng);
  }
  result.regime_fraction = regime.fraction_estimate;
  result.users_per_phase.insert(result.users_per_phase.begin(), regime.users_consumed);
  return result;
}

}  // namespace ldp
