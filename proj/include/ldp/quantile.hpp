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
#include <cstddef>
#include <functional>
#include <string>

#include "ldp/errors.hpp"
#include "ldp/mechanisms.hpp"
#include "ldp/rng.hpp"
#include "ldp/user_pool.hpp"

namespace ldp {

// Binary-search quantile query: find t with P[X < t] within lambda of p_star,
// searching the bracket [q_min, q_max] for at most T halvings.
struct QuantileQuery {
  double p_star;
  double q_min;
  double q_max;
  double lambda;
  std::size_t max_iterations;  // T

  void validate() const {
    if (!(p_star > 0.0 && p_star < 1.0)) throw ConfigError("QuantileQuery: p_star must be in (0,1)");
    if (!(q_min < q_max)) throw ConfigError("QuantileQuery: need q_min < q_max");
    if (!(lambda > 0.0 && lambda < 0.5)) throw ConfigError("QuantileQuery: lambda must be in (0,1/2)");
    if (max_iterations < 1) throw ConfigError("QuantileQuery: need at least one iteration");
  }
};

enum class QuantileTermination {
  kEstimateWithinLambda,     // broke because |Z - p_star| <= lambda/2
  kIterationBudgetExhausted  // ran all T iterations
};

inline const char* to_string(QuantileTermination t) {
  return t == QuantileTermination::kEstimateWithinLambda ? "EstimateWithinLambda"
                                                         : "IterationBudgetExhausted";
}

struct QuantileResult {
  double threshold = 0.0;          // last probed midpoint
  std::size_t iterations_used = 0;
  QuantileTermination terminated_by = QuantileTermination::kIterationBudgetExhausted;
  double bracket_lo = 0.0;  // final [s1, s2]
  double bracket_hi = 0.0;
};

// Where the search went in one iteration.
enum class QuantileBranch { kLowerHalf, kUpperHalf, kBreak };

inline const char* to_string(QuantileBranch b) {
  switch (b) {
    case QuantileBranch::kLowerHalf: return "lower_half";
    case QuantileBranch::kUpperHalf: return "upper_half";
    default: return "break";
  }
}

struct QuantileTraceEntry {
  std::size_t j;  // 1-based iteration number
  double t;       // probed threshold
  double z;       // fraction estimate at t
  QuantileBranch branch;
};

using QuantileTraceSink = std::function<void(const QuantileTraceEntry&)>;

// Supplies one estimate of P[X < threshold] per call. The production
// implementation spends a fresh batch of users on every call; tests substitute
// an exact-CDF oracle to exercise the bisection logic noiselessly.
class FractionEstimator {
 public:
  virtual ~FractionEstimator() = default;
  virtual double estimate(double threshold) = 0;
};

// Bisection on top of any FractionEstimator. Iteration j probes the bracket
// midpoint t and halves toward the side indicated by Z vs p_star +- lambda/2;
// ties on the boundary break (halt) rather than recurse.
inline QuantileResult bisect_quantile(FractionEstimator& estimator, const QuantileQuery& query,
                                      const QuantileTraceSink& trace = nullptr) {
  query.validate();
  QuantileResult result;
  double s1 = query.q_min;
  double s2 = query.q_max;
  for (std::size_t j = 1; j <= query.max_iterations; ++j) {
    const double t = 0.5 * (s1 + s2);
    const double z = estimator.estimate(t);
    result.threshold = t;
    result.iterations_used = j;
    QuantileBranch branch;
    if (z > query.p_star + query.lambda / 2.0) {
      s2 = t;
      branch = QuantileBranch::kUpperHalf;
    } else if (z < query.p_star - query.lambda / 2.0) {
      s1 = t;
      branch = QuantileBranch::kLowerHalf;
    } else {
      branch = QuantileBranch::kBreak;
    }
    if (trace) trace(QuantileTraceEntry{j, t, z, branch});
    if (branch == QuantileBranch::kBreak) {
      result.terminated_by = QuantileTermination::kEstimateWithinLambda;
      result.bracket_lo = s1;
      result.bracket_hi = s2;
      return result;
    }
  }
  result.terminated_by = QuantileTermination::kIterationBudgetExhausted;
  result.bracket_lo = s1;
  result.bracket_hi = s2;
  return result;
}

namespace internal {

// Estimator backed by randomized response over pool batches.
class RrPoolEstimator final : public FractionEstimator {
 public:
  RrPoolEstimator(UserPool& pool, std::size_t batch_size, double epsilon, RngStream& rng)
      : pool_(pool), batch_size_(batch_size), epsilon_(epsilon), rng_(rng) {}

  double estimate(double threshold) override {
    ++iteration_;
    if (pool_.remaining() < batch_size_) {
      throw PoolExhaustedError("bin_rr: pool exhausted at iteration " + std::to_string(iteration_) +
                               " (batch of " + std::to_string(batch_size_) + " needed, " +
                               std::to_string(pool_.remaining()) + " remain)");
    }
    auto users = pool_.take(batch_size_, "randomized_response", epsilon_, 0.0);
    return rr_estimate_fraction(
        users, [threshold](double x) { return x < threshold; }, epsilon_, rng_);
  }

 private:
  UserPool& pool_;
  std::size_t batch_size_;
  double epsilon_;
  RngStream& rng_;
  std::size_t iteration_ = 0;
};

}  // namespace internal

// Locally private quantile search over n_users from the pool, split into T
// equal batches of floor(n_users/T); iteration j spends one fresh batch on a
// randomized-response estimate of P[X < t_j]. An early break leaves later
// batches unconsumed (the result records iterations_used so callers can
// reclaim them); so does the floor-division remainder.
inline QuantileResult bin_rr(UserPool& pool, std::size_t n_users, const QuantileQuery& query,
                             double epsilon, RngStream& rng,
                             const QuantileTraceSink& trace = nullptr) {
  query.validate();
  const std::size_t batch = n_users / query.max_iterations;
  if (batch < 1) {
    throw ConfigError("bin_rr: fewer users than iterations (batch size would be zero)");
  }
  if (pool.remaining() < batch * query.max_iterations) {
    throw PoolExhaustedError("bin_rr: pool holds " + std::to_string(pool.remaining()) +
                             " unconsumed users, needs " +
                             std::to_string(batch * query.max_iterations));
  }
  internal::RrPoolEstimator estimator(pool, batch, epsilon, rng);
  return bisect_quantile(estimator, query, trace);
}

// Total sample budget certifying the (tau, lambda, beta) quantile contract
// over T iterations: ceil((8T/lambda^2) ((e^eps+1)/(e^eps-1))^2 ln(4T/beta)).
inline std::size_t required_sample_size(double lambda, double beta, double epsilon,
                                        std::size_t iterations) {
  if (iterations < 1) throw ConfigError("required_sample_size: need at least one iteration");
  if (!(lambda > 0.0 && lambda < 0.5) || !(beta > 0.0 && beta < 0.5)) {
    throw ConfigError("required_sample_size: lambda and beta must lie in (0, 1/2)");
  }
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ConfigError("required_sample_size: epsilon must be positive and finite");
  }
  const double coef = rr_coefficient(epsilon);
  const double t = static_cast<double>(iterations);
  return static_cast<std::size_t>(
      std::ceil(8.0 * t / (lambda * lambda) * coef * coef * std::log(4.0 * t / beta)));
}

// Smallest T >= 1 with (q_max - q_min) / 2^T <= tau, i.e.
// ceil(log2((q_max-q_min)/tau)); a tau at least as coarse as the bracket
// still gets one probe.
inline std::size_t iterations_for(double q_min, double q_max, double tau) {
  if (!(q_max > q_min)) throw ConfigError("iterations_for: need q_max > q_min");
  if (!(tau > 0.0)) throw ConfigError("iterations_for: tau must be positive");
  const double range = q_max - q_min;
  if (tau >= range) return 1;
  int t = static_cast<int>(std::ceil(std::log2(range / tau)));
  if (t < 1) t = 1;
  // ldexp scales by exact powers of two, so fix any rounding from the log.
  while (t > 1 && std::ldexp(tau, t - 1) >= range) --t;
  while (std::ldexp(tau, t) < range) ++t;
  return static_cast<std::size_t>(t);
}

}  // namespace ldp
