#include <cmath>
#include <cstdint>
#include <vector>

#include <doctest.h>

#include "ldp/mean_unknown.hpp"
#include "ldp/normal_math.hpp"
#include "ldp/rng.hpp"
#include "ldp/user_pool.hpp"
#include "oracles.hpp"

using ldp::ConfigError;
using ldp::InsufficientSampleError;
using ldp::PrivacyParams;
using ldp::RngStream;
using ldp::UnknownVarConfig;
using ldp::UserPool;

namespace {

UserPool MakeGaussianPool(std::size_t n, double mu, double sigma, std::uint64_t seed,
                          std::uint64_t stream) {
  RngStream rng(seed, stream);
  std::vector<double> values(n);
  for (double& v : values) v = ldp::sample_gaussian(rng, mu, sigma);
  return UserPool(std::move(values));
}

UnknownVarConfig Criterion8Config() {
  return UnknownVarConfig{0.25, 200.0, 0.05, PrivacyParams{1.0, 1e-9}, 100.0};
}

}  // namespace

TEST_SUITE_BEGIN("mean_unknown");

TEST_CASE("detect_regime: sample size and the point-mass edge case") {
  CHECK(ldp::detect_regime_sample_size(1.0, 0.05) == 8376);

  // Degenerate non-Gaussian input: all mass at 0 lies inside [-2R, 2R], so
  // the decision must be BoundedVariance (privacy holds for any input; the
  // detector itself is distribution-agnostic).
  UserPool pool(std::vector<double>(ldp::detect_regime_sample_size(1.0, 0.05), 0.0));
  RngStream rng(71, 0);
  const auto decision = ldp::detect_regime(pool, 1.0, 0.05, 1.0, rng);
  CHECK(decision.decision == ldp::Regime::kBoundedVariance);
  CHECK(decision.fraction_estimate > 0.9);
  CHECK(decision.users_consumed == 8376);
  CHECK(pool.consumed() == decision.users_consumed);
}

TEST_CASE("detect_regime: separates sigma = R/2 from sigma = 4R") {
  const double R = 10.0;
  const std::size_t m = ldp::detect_regime_sample_size(1.0, 0.05);
  int bounded = 0, large = 0;
  const int trials = 20;
  for (int t = 0; t < trials; ++t) {
    UserPool small_sigma = MakeGaussianPool(m, 0.0, R / 2.0, 72, 4 * static_cast<std::uint64_t>(t));
    RngStream rng_a(72, 4 * static_cast<std::uint64_t>(t) + 1);
    bounded +=
        ldp::detect_regime(small_sigma, 1.0, 0.05, R, rng_a).decision == ldp::Regime::kBoundedVariance;

    UserPool big_sigma = MakeGaussianPool(m, 0.0, 4.0 * R, 72, 4 * static_cast<std::uint64_t>(t) + 2);
    RngStream rng_b(72, 4 * static_cast<std::uint64_t>(t) + 3);
    large +=
        ldp::detect_regime(big_sigma, 1.0, 0.05, R, rng_b).decision == ldp::Regime::kLargeVariance;
  }
  CHECK(bounded >= 18);
  CHECK(large >= 18);
}

TEST_CASE("large_var: tiny n always trips the guard and returns [-R, R]") {
  const double R = 7.0;
  UserPool pool = MakeGaussianPool(100, 2.0, 35.0, 73, 0);
  RngStream rng(73, 1);
  const auto result = ldp::large_var(pool, 1.0, R, 0.05, rng);
  CHECK(result.guard_fired);
  CHECK(result.ci.method == ldp::IntervalMethod::kTrivialFullRange);
  CHECK(result.ci.lo == -R);
  CHECK(result.ci.hi == R);
  CHECK(result.ci.mu_tilde == 0.0);
  // n = 100 makes 800B > 2 >= any estimated mass gap, so this is certain.
  CHECK(800.0 * ldp::large_var_noise_bound(100, 1.0, 0.05) > 2.0);
}

TEST_CASE("large_var: noiseless interpolation is an exact inverse") {
  const double R = 50.0;
  RngStream rng(74, 0);
  for (int i = 0; i < 100; ++i) {
    const double mu = -R + 2.0 * R * rng.next_double();
    const double sigma = (1.01 + 8.99 * rng.next_double()) * R;
    const double p_minus = ldp::std_normal_cdf((-R - mu) / sigma);
    const double p_plus = ldp::std_normal_cdf((R - mu) / sigma);
    const auto [mu_hat, sigma_hat] = ldp::large_var_interpolate(p_minus, p_plus, R);
    CHECK(std::fabs(mu_hat - mu) <= 1e-6 * R);
    CHECK(std::fabs(sigma_hat - sigma) <= 1e-6 * sigma);
  }
}

TEST_CASE("large_var: guard threshold decreases in n and epsilon") {
  RngStream rng(75, 0);
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 100 + static_cast<std::size_t>(rng.next_double() * 1000000.0);
    const double eps = 0.1 + 3.0 * rng.next_double();
    const double beta = 0.01 + 0.4 * rng.next_double();
    CHECK(ldp::large_var_noise_bound(2 * n, eps, beta) < ldp::large_var_noise_bound(n, eps, beta));
    CHECK(ldp::large_var_noise_bound(n, eps + 0.5, beta) < ldp::large_var_noise_bound(n, eps, beta));
  }
}

TEST_CASE("unk_var: gate value is frozen and enforced") {
  CHECK(ldp::min_sample_size_unknown(Criterion8Config()) == 737619);
  UserPool pool(std::vector<double>(1000, 0.0));
  RngStream rng(76, 0);
  auto cfg = Criterion8Config();
  CHECK_THROWS_AS(ldp::unk_var(pool, cfg, rng), InsufficientSampleError);

  UnknownVarConfig bad{0.25, 500.0, 0.05, PrivacyParams{1.0, 1e-9}, 100.0};  // sigma_max > 2R
  CHECK_THROWS_AS(ldp::min_sample_size_unknown(bad), ConfigError);
  UnknownVarConfig bad2{0.0, 200.0, 0.05, PrivacyParams{1.0, 1e-9}, 100.0};  // sigma_min = 0
  CHECK_THROWS_AS(ldp::min_sample_size_unknown(bad2), ConfigError);
}

TEST_CASE("unk_var: covers the mean and brackets sigma via the threshold gap") {
  const auto cfg = Criterion8Config();
  const double mu = 10.0, sigma = 2.0;
  const std::size_t n = ldp::min_sample_size_unknown(cfg);
  int covered = 0, gap_ok = 0;
  const int trials = 5;
  for (int t = 0; t < trials; ++t) {
    UserPool pool = MakeGaussianPool(n, mu, sigma, 77, 2 * static_cast<std::uint64_t>(t));
    RngStream rng(77, 2 * static_cast<std::uint64_t>(t) + 1);
    const auto result = ldp::unk_var(pool, cfg, rng);
    covered += result.ci.contains(mu) ? 1 : 0;
    const double gap = result.t_sigma_hat - result.t_mu_hat;
    gap_ok += (gap >= 0.5 * sigma && gap <= 1.5 * sigma) ? 1 : 0;
    CHECK(result.ci.method == ldp::IntervalMethod::kUnkVar);
    CHECK(result.users_per_phase.size() == 3);
    CHECK(result.users_per_phase[2] == n - result.users_per_phase[0] - result.users_per_phase[1]);
  }
  CHECK(covered >= 4);
  CHECK(gap_ok >= 4);
}

TEST_CASE("unk_var: phase accounting is disjoint, contiguous, increasing") {
  const auto cfg = Criterion8Config();
  const std::size_t n = ldp::min_sample_size_unknown(cfg);
  UserPool pool = MakeGaussianPool(n, 10.0, 2.0, 78, 0);
  RngStream rng(78, 1);
  const auto result = ldp::unk_var(pool, cfg, rng);

  // Every consumed index appears exactly once across all spans, spans are
  // contiguous from zero, and budgeted phases account for all of them.
  std::size_t expected_start = 0;
  double max_eps_per_user = 0.0;
  for (const auto& span : pool.audit_log()) {
    CHECK(span.first == expected_start);
    expected_start += span.count;
    max_eps_per_user = std::max(max_eps_per_user, span.epsilon);
  }
  CHECK(expected_start == pool.consumed());
  CHECK(pool.consumed() == n);  // phases A+B (with discards) + phase C cover the pool
  CHECK(max_eps_per_user <= cfg.privacy.epsilon);
  CHECK(result.users_per_phase[0] + result.users_per_phase[1] + result.users_per_phase[2] == n);
}

TEST_CASE("unk_var: point mass at R either fails loudly or returns a valid interval") {
  // Degenerate input drives both quantile searches to the same point; the
  // pipeline must either surface EstimationFailureError or produce a sane
  // interval, never a silent inversion.
  const auto cfg = Criterion8Config();
  const std::size_t n = ldp::min_sample_size_unknown(cfg);
  int failures = 0, successes = 0;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    UserPool pool(std::vector<double>(n, cfg.R));
    RngStream rng(seed, 1);
    try {
      const auto result = ldp::unk_var(pool, cfg, rng);
      CHECK(result.ci.lo <= result.ci.hi);
      CHECK(result.t_sigma_hat > result.t_mu_hat);
      ++successes;
    } catch (const ldp::EstimationFailureError&) {
      ++failures;
    }
  }
  CHECK(failures + successes == 6);
}

TEST_CASE("estimate_mean_auto: dispatches on the variance regime") {
  const double R = 10.0;
  ldp::AutoMeanConfig cfg{0.05, 0.05, PrivacyParams{1.0, 1e-9}, R};

  // sigma = R/4: bounded-variance path.
  {
    UnknownVarConfig bounded{cfg.sigma_min, 2.0 * R, cfg.beta, cfg.privacy, R};
    const std::size_t n = ldp::detect_regime_sample_size(1.0, cfg.beta) +
                          ldp::min_sample_size_unknown(bounded);
    UserPool pool = MakeGaussianPool(n, 1.0, R / 4.0, 79, 0);
    RngStream rng(79, 1);
    const auto result = ldp::estimate_mean_auto(pool, cfg, rng);
    CHECK(result.ci.method == ldp::IntervalMethod::kUnkVar);
    CHECK(result.ci.contains(1.0));
    CHECK(result.users_per_phase.size() == 4);  // detect + three phases
    CHECK(result.regime_fraction > 0.76);
  }

  // sigma = 5R: large-variance path (guard or interpolation).
  {
    const std::size_t n = ldp::detect_regime_sample_size(1.0, cfg.beta) + 100000;
    UserPool pool = MakeGaussianPool(n, 0.3 * R, 5.0 * R, 79, 2);
    RngStream rng(79, 3);
    const auto result = ldp::estimate_mean_auto(pool, cfg, rng);
    const bool large_path = result.ci.method == ldp::IntervalMethod::kLargeVar ||
                            result.ci.method == ldp::IntervalMethod::kTrivialFullRange;
    CHECK(large_path);
    CHECK(result.ci.contains(0.3 * R));
    CHECK(result.users_per_phase.size() == 3);  // detect + two halves
    // Total consumption is the detection prefix plus the branch's users.
    std::size_t total = 0;
    for (std::size_t u : result.users_per_phase) total += u;
    CHECK(pool.consumed() == total);
  }
}

TEST_SUITE_END();
