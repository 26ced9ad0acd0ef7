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

#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "ldp/errors.hpp"
#include "ldp/mean_known.hpp"
#include "ldp/mean_unknown.hpp"
#include "ldp/normal_math.hpp"
#include "ldp/quantile.hpp"
#include "ldp/rng.hpp"
#include "ldp/user_pool.hpp"

namespace ldp {

enum class EstimatorKind { kKnownBf, kZTest, kBinRr, kUnkVar, kLargeVar, kAuto };

inline const char* to_string(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::kKnownBf: return "KnownBF";
    case EstimatorKind::kZTest: return "ZTest";
    case EstimatorKind::kBinRr: return "BinRR";
    case EstimatorKind::kUnkVar: return "UnkVar";
    case EstimatorKind::kLargeVar: return "LargeVar";
    default: return "Auto";
  }
}

inline EstimatorKind estimator_kind_from_string(const std::string& name) {
  if (name == "KnownBF") return EstimatorKind::kKnownBf;
  if (name == "ZTest") return EstimatorKind::kZTest;
  if (name == "BinRR") return EstimatorKind::kBinRr;
  if (name == "UnkVar") return EstimatorKind::kUnkVar;
  if (name == "LargeVar") return EstimatorKind::kLargeVar;
  if (name == "Auto") return EstimatorKind::kAuto;
  throw ConfigError("unknown estimator: " + name);
}

// True data distribution each trial samples from.
struct GaussianSpec {
  double mu = 0.0;
  double sigma = 1.0;
};

struct SweepSpec {
  std::string name;  // parameter to vary; empty = no sweep
  std::vector<double> values;
};

// One Monte Carlo experiment: `trials` independent runs of one estimator on
// fresh pools of iid Gaussian data, optionally repeated over a sweep grid.
//
// For KnownBF and ZTest, `n` is the estimation/test sample: each trial's pool
// contains the histogram phase's n1 users plus n more, matching how the
// reference experiments count sample size. For every other estimator `n` is
// the total pool handed to it. n = 0 asks for the smallest valid size.
struct ExperimentConfig {
  EstimatorKind estimator = EstimatorKind::kKnownBf;
  GaussianSpec data;
  std::size_t n = 0;
  std::size_t trials = 1;
  std::uint64_t seed = 1;
  int jobs = 0;  // worker threads; 0 = hardware concurrency

  // Shared estimator parameters.
  double R = 200.0;
  double beta = 0.01;
  PrivacyParams privacy{1.0, 1e-9};

  // KnownBF / ZTest.
  double sigma_known = 1.0;
  double mu0 = 0.0;
  double significance = 0.05;
  bool pure_epsilon_phase2 = false;  // Laplace noise in phase 2 (no Z-test)

  // UnkVar / Auto.
  double sigma_min = 0.25;
  double sigma_max = 0.0;  // 0 = use 2R

  // BinRR.
  double p_star = 0.5;
  double q_min = -200.0;
  double q_max = 200.0;
  double lambda = 0.098;
  double tau = 0.05;  // bracket resolution; sets the iteration budget

  SweepSpec sweep;
  bool keep_records = false;  // retain per-trial records in the summary
};

// Per-trial outcome; unused fields stay NaN/false for the given estimator.
struct TrialRecord {
  bool ok = false;
  std::string error;
  bool covered = false;  // mu in interval, or quantile contract satisfied
  double width = std::numeric_limits<double>::quiet_NaN();
  double lo = std::numeric_limits<double>::quiet_NaN();
  double hi = std::numeric_limits<double>::quiet_NaN();
  double mu_tilde = std::numeric_limits<double>::quiet_NaN();
  double p_value = std::numeric_limits<double>::quiet_NaN();
  bool reject = false;
  double threshold = std::numeric_limits<double>::quiet_NaN();
  IntervalMethod method = IntervalMethod::kKnownBf;
  bool has_method = false;
};

// Aggregates over one sweep point. Rates are computed over all trials
// (errored trials count against coverage/power); width moments are over the
// trials that produced an interval.
struct TrialSummary {
  std::size_t trials = 0;
  std::size_t failures = 0;
  double coverage_rate = std::numeric_limits<double>::quiet_NaN();
  double coverage_ci_lo = std::numeric_limits<double>::quiet_NaN();
  double coverage_ci_hi = std::numeric_limits<double>::quiet_NaN();
  double mean_width = std::numeric_limits<double>::quiet_NaN();
  double width_std = std::numeric_limits<double>::quiet_NaN();
  double power = std::numeric_limits<double>::quiet_NaN();
  double power_ci_lo = std::numeric_limits<double>::quiet_NaN();
  double power_ci_hi = std::numeric_limits<double>::quiet_NaN();
  double mean_p_value = std::numeric_limits<double>::quiet_NaN();
  double mean_threshold = std::numeric_limits<double>::quiet_NaN();
  std::vector<TrialRecord> records;
};

struct SweepPointResult {
  double sweep_value = std::numeric_limits<double>::quiet_NaN();
  bool ok = false;        // at least one trial ran
  std::string error;     // set when the whole point failed (e.g. n too small)
  TrialSummary summary;
};

// 95% Wilson score interval for a binomial proportion.
inline std::pair<double, double> wilson_interval(std::size_t successes, std::size_t n,
                                                 double z = 1.959963984540054) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p_hat = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p_hat + z2 / (2.0 * nn)) / denom;
  const double half =
      z * std::sqrt(p_hat * (1.0 - p_hat) / nn + z2 / (4.0 * nn * nn)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

namespace internal {

inline KnownVarConfig MakeKnownConfig(const ExperimentConfig& cfg) {
  return KnownVarConfig{cfg.sigma_known, cfg.beta, cfg.privacy, cfg.R, cfg.pure_epsilon_phase2};
}

inline UnknownVarConfig MakeUnknownConfig(const ExperimentConfig& cfg) {
  const double sigma_max = cfg.sigma_max > 0.0 ? cfg.sigma_max : 2.0 * cfg.R;
  return UnknownVarConfig{cfg.sigma_min, sigma_max, cfg.beta, cfg.privacy, cfg.R};
}

inline QuantileQuery MakeQuantileQuery(const ExperimentConfig& cfg) {
  return QuantileQuery{cfg.p_star, cfg.q_min, cfg.q_max, cfg.lambda,
                       iterations_for(cfg.q_min, cfg.q_max, cfg.tau)};
}

}  // namespace internal

// Pool size one trial draws, honoring the n-=0 "smallest valid" convention
// and the phase-2 sample semantics of KnownBF/ZTest.
inline std::size_t trial_pool_size(const ExperimentConfig& cfg) {
  switch (cfg.estimator) {
    case EstimatorKind::kKnownBf:
    case EstimatorKind::kZTest: {
      const KnownVarConfig kc = internal::MakeKnownConfig(cfg);
      if (cfg.n == 0) return min_sample_size_known(kc);
      return known_bf_phase1_size(kc) + cfg.n;
    }
    case EstimatorKind::kBinRr: {
      if (cfg.n == 0) {
        const QuantileQuery q = internal::MakeQuantileQuery(cfg);
        return required_sample_size(cfg.lambda, cfg.beta, cfg.privacy.epsilon, q.max_iterations);
      }
      return cfg.n;
    }
    case EstimatorKind::kUnkVar:
      return cfg.n == 0 ? min_sample_size_unknown(internal::MakeUnknownConfig(cfg)) : cfg.n;
    case EstimatorKind::kLargeVar:
      return cfg.n == 0 ? 2 : cfg.n;
    case EstimatorKind::kAuto:
      if (cfg.n == 0) {
        return detect_regime_sample_size(cfg.privacy.epsilon, cfg.beta) +
               min_sample_size_unknown(internal::MakeUnknownConfig(cfg));
      }
      return cfg.n;
  }
  throw ConfigError("trial_pool_size: unreachable estimator kind");
}

// One trial. Streams are indexed by (stream_family, trial), never by
// execution order, so results do not depend on scheduling.
inline TrialRecord run_trial(const ExperimentConfig& cfg, std::size_t trial,
                             std::uint64_t stream_family = 0) {
  const std::uint64_t base = (stream_family << 32) + 2 * static_cast<std::uint64_t>(trial);
  RngStream data_rng(cfg.seed, base);
  RngStream mech_rng(cfg.seed, base + 1);

  TrialRecord rec;
  try {
    const std::size_t pool_n = trial_pool_size(cfg);
    std::vector<double> values(pool_n);
    for (double& v : values) v = sample_gaussian(data_rng, cfg.data.mu, cfg.data.sigma);
    UserPool pool(std::move(values));

    switch (cfg.estimator) {
      case EstimatorKind::kKnownBf: {
        const KnownBfResult r = known_bf(pool, internal::MakeKnownConfig(cfg), mech_rng);
        rec.covered = r.ci.contains(cfg.data.mu);
        rec.width = r.ci.width();
        rec.lo = r.ci.lo;
        rec.hi = r.ci.hi;
        rec.mu_tilde = r.ci.mu_tilde;
        rec.method = r.ci.method;
        rec.has_method = true;
        break;
      }
      case EstimatorKind::kZTest: {
        const ZTestResult r =
            ztest(pool, internal::MakeKnownConfig(cfg), cfg.mu0, cfg.significance, mech_rng);
        rec.p_value = r.p_value;
        rec.reject = r.reject;
        rec.mu_tilde = r.mu_tilde;
        break;
      }
      case EstimatorKind::kBinRr: {
        const QuantileQuery query = internal::MakeQuantileQuery(cfg);
        const QuantileResult r =
            bin_rr(pool, pool.size(), query, cfg.privacy.epsilon, mech_rng);
        rec.threshold = r.threshold;
        const double true_threshold =
            cfg.data.mu + cfg.data.sigma * std_normal_inv_cdf(cfg.p_star);
        const double quantile_at_t = std_normal_cdf((r.threshold - cfg.data.mu) / cfg.data.sigma);
        rec.covered = std::fabs(quantile_at_t - cfg.p_star) <= cfg.lambda ||
                      std::fabs(r.threshold - true_threshold) <= cfg.tau;
        rec.width = r.bracket_hi - r.bracket_lo;
        break;
      }
      case EstimatorKind::kUnkVar: {
        const MeanEstimateResult r = unk_var(pool, internal::MakeUnknownConfig(cfg), mech_rng);
        rec.covered = r.ci.contains(cfg.data.mu);
        rec.width = r.ci.width();
        rec.lo = r.ci.lo;
        rec.hi = r.ci.hi;
        rec.mu_tilde = r.ci.mu_tilde;
        rec.method = r.ci.method;
        rec.has_method = true;
        break;
      }
      case EstimatorKind::kLargeVar: {
        const MeanEstimateResult r =
            large_var(pool, cfg.privacy.epsilon, cfg.R, cfg.beta, mech_rng);
        rec.covered = r.ci.contains(cfg.data.mu);
        rec.width = r.ci.width();
        rec.lo = r.ci.lo;
        rec.hi = r.ci.hi;
        rec.mu_tilde = r.ci.mu_tilde;
        rec.method = r.ci.method;
        rec.has_method = true;
        break;
      }
      case EstimatorKind::kAuto: {
        AutoMeanConfig auto_cfg{cfg.sigma_min, cfg.beta, cfg.privacy, cfg.R};
        const MeanEstimateResult r = estimate_mean_auto(pool, auto_cfg, mech_rng);
        rec.covered = r.ci.contains(cfg.data.mu);
        rec.width = r.ci.width();
        rec.lo = r.ci.lo;
        rec.hi = r.ci.hi;
        rec.mu_tilde = r.ci.mu_tilde;
        rec.method = r.ci.method;
        rec.has_method = true;
        break;
      }
    }
    rec.ok = true;
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.error = e.what();
  }
  return rec;
}

namespace internal {

inline TrialSummary Summarize(std::vector<TrialRecord> records, bool keep_records) {
  TrialSummary s;
  s.trials = records.size();
  std::size_t covered = 0;
  std::size_t rejected = 0;
  std::size_t widths = 0;
  double width_sum = 0.0, width_sq_sum = 0.0;
  double p_sum = 0.0, threshold_sum = 0.0;
  std::size_t p_count = 0, threshold_count = 0;
  for (const TrialRecord& r : records) {
    if (!r.ok) {
      ++s.failures;
      continue;
    }
    covered += r.covered ? 1 : 0;
    rejected += r.reject ? 1 : 0;
    if (std::isfinite(r.width)) {
      ++widths;
      width_sum += r.width;
      width_sq_sum += r.width * r.width;
    }
    if (std::isfinite(r.p_value)) {
      ++p_count;
      p_sum += r.p_value;
    }
    if (std::isfinite(r.threshold)) {
      ++threshold_count;
      threshold_sum += r.threshold;
    }
  }
  const double nn = static_cast<double>(s.trials);
  if (s.trials > 0) {
    s.coverage_rate = static_cast<double>(covered) / nn;
    auto cov_ci = wilson_interval(covered, s.trials);
    s.coverage_ci_lo = cov_ci.first;
    s.coverage_ci_hi = cov_ci.second;
    s.power = static_cast<double>(rejected) / nn;
    auto pow_ci = wilson_interval(rejected, s.trials);
    s.power_ci_lo = pow_ci.first;
    s.power_ci_hi = pow_ci.second;
  }
  if (widths > 0) {
    s.mean_width = width_sum / static_cast<double>(widths);
    const double var =
        std::max(0.0, width_sq_sum / static_cast<double>(widths) - s.mean_width * s.mean_width);
    s.width_std = std::sqrt(var);
  }
  if (p_count > 0) s.mean_p_value = p_sum / static_cast<double>(p_count);
  if (threshold_count > 0) s.mean_threshold = threshold_sum / static_cast<double>(threshold_count);
  if (keep_records) s.records = std::move(records);
  return s;
}

inline void ApplySweepValue(ExperimentConfig& cfg, const std::string& name, double value) {
  if (name == "mu") cfg.data.mu = value;
  else if (name == "sigma") cfg.data.sigma = value;
  else if (name == "n") cfg.n = static_cast<std::size_t>(value);
  else if (name == "epsilon") cfg.privacy.epsilon = value;
  else if (name == "delta") cfg.privacy.delta = value;
  else if (name == "beta") cfg.beta = value;
  else if (name == "R") cfg.R = value;
  else if (name == "mu0") cfg.mu0 = value;
  else if (name == "significance") cfg.significance = value;
  else if (name == "sigma_known") cfg.sigma_known = value;
  else if (name == "sigma_min") cfg.sigma_min = value;
  else if (name == "sigma_max") cfg.sigma_max = value;
  else if (name == "p_star") cfg.p_star = value;
  else if (name == "lambda") cfg.lambda = value;
  else if (name == "tau") cfg.tau = value;
  else throw ConfigError("unknown sweep parameter: " + name);
}

}  // namespace internal

// All trials of one sweep point, run across worker threads. Records land in a
// vector indexed by trial number, so the outcome is independent of scheduling.
inline std::vector<TrialRecord> run_point_trials(const ExperimentConfig& cfg,
                                                 std::uint64_t stream_family) {
  std::vector<TrialRecord> records(cfg.trials);
  unsigned jobs = cfg.jobs > 0 ? static_cast<unsigned>(cfg.jobs)
                               : std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min<unsigned>(jobs, static_cast<unsigned>(cfg.trials));
  if (jobs <= 1) {
    for (std::size_t t = 0; t < cfg.trials; ++t) records[t] = run_trial(cfg, t, stream_family);
    return records;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= cfg.trials) return;
      records[t] = run_trial(cfg, t, stream_family);
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(jobs);
  for (unsigned i = 0; i < jobs; ++i) threads.emplace_back(worker);
  for (auto& th : threads) th.join();
  return records;
}

// Run the full experiment: one summary per sweep point (a single point when
// no sweep is configured, keyed by mu for Z-tests and by n otherwise).
inline std::vector<SweepPointResult> run_experiment(const ExperimentConfig& cfg) {
  if (cfg.trials < 1) throw ConfigError("run_experiment: need at least one trial");
  std::vector<std::pair<double, ExperimentConfig>> points;
  if (cfg.sweep.name.empty()) {
    const double value =
        cfg.estimator == EstimatorKind::kZTest ? cfg.data.mu : static_cast<double>(cfg.n);
    points.emplace_back(value, cfg);
  } else {
    if (cfg.sweep.values.empty()) throw ConfigError("run_experiment: sweep has no values");
    for (double v : cfg.sweep.values) {
      ExperimentConfig point_cfg = cfg;
      internal::ApplySweepValue(point_cfg, cfg.sweep.name, v);
      points.emplace_back(v, point_cfg);
    }
  }

  std::vector<SweepPointResult> results;
  results.reserve(points.size());
  for (std::size_t p = 0; p < points.size(); ++p) {
    SweepPointResult point;
    point.sweep_value = points[p].first;
    try {
      std::vector<TrialRecord> records = run_point_trials(points[p].second, p);
      point.ok = false;
      for (const TrialRecord& r : records) {
        if (r.ok) {
          point.ok = true;
          break;
        }
      }
      if (!point.ok && !records.empty()) point.error = records.front().error;
      point.summary = internal::Summarize(std::move(records), cfg.keep_records);
    } catch (const std::exception& e) {
      point.ok = false;
      point.error = e.what();
    }
    results.push_back(std::move(point));
  }
  return results;
}

}  // namespace ldp
