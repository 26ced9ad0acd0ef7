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
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ldp/experiment.hpp"
#include "ldp/mean_known.hpp"
#include "ldp/mean_unknown.hpp"
#include "ldp/quantile.hpp"

namespace ldp {

using json = nlohmann::json;

inline json to_json(const KnownBfResult& r) {
  return json{{"lo", r.ci.lo},
              {"hi", r.ci.hi},
              {"mu_tilde", r.ci.mu_tilde},
              {"sampling_var", r.ci.sigma_tilde_sq},
              {"method", to_string(r.ci.method)},
              {"n1", r.n1},
              {"n2", r.n2},
              {"j_star", r.j_star}};
}

inline json to_json(const MeanEstimateResult& r) {
  json j{{"lo", r.ci.lo},
         {"hi", r.ci.hi},
         {"mu_tilde", r.ci.mu_tilde},
         {"sampling_var", r.ci.sigma_tilde_sq},
         {"method", to_string(r.ci.method)},
         {"guard_fired", r.guard_fired},
         {"users_per_phase", r.users_per_phase}};
  j["t_mu_hat"] = std::isfinite(r.t_mu_hat) ? json(r.t_mu_hat) : json(nullptr);
  j["t_sigma_hat"] = std::isfinite(r.t_sigma_hat) ? json(r.t_sigma_hat) : json(nullptr);
  j["regime_fraction"] =
      std::isfinite(r.regime_fraction) ? json(r.regime_fraction) : json(nullptr);
  return j;
}

inline json to_json(const QuantileResult& r) {
  return json{{"threshold", r.threshold},
              {"iterations_used", r.iterations_used},
              {"terminated_by", to_string(r.terminated_by)},
              {"bracket", json::array({r.bracket_lo, r.bracket_hi})}};
}

// One JSON line per search iteration, for debugging and visualization.
inline std::string quantile_trace_jsonl_line(const QuantileTraceEntry& e) {
  return json{{"j", e.j}, {"t_j", e.t}, {"z_j", e.z}, {"branch", to_string(e.branch)}}.dump();
}

inline json to_json(const ZTestResult& r) {
  return json{{"mu_tilde", r.mu_tilde},
              {"sampling_sd", r.sampling_sd},
              {"z_score", r.z_score},
              {"p_value", r.p_value},
              {"reject", r.reject}};
}

namespace internal {

inline json FiniteOrNull(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace internal

inline json to_json(const TrialSummary& s) {
  json j{{"trials", s.trials},
         {"failures", s.failures},
         {"coverage_rate", internal::FiniteOrNull(s.coverage_rate)},
         {"coverage_ci", json::array({internal::FiniteOrNull(s.coverage_ci_lo),
                                      internal::FiniteOrNull(s.coverage_ci_hi)})},
         {"mean_width", internal::FiniteOrNull(s.mean_width)},
         {"width_std", internal::FiniteOrNull(s.width_std)},
         {"power", internal::FiniteOrNull(s.power)},
         {"power_ci", json::array({internal::FiniteOrNull(s.power_ci_lo),
                                   internal::FiniteOrNull(s.power_ci_hi)})},
         {"mean_p_value", internal::FiniteOrNull(s.mean_p_value)},
         {"mean_threshold", internal::FiniteOrNull(s.mean_threshold)}};
  if (!s.records.empty()) {
    json records = json::array();
    for (const TrialRecord& r : s.records) {
      records.push_back(json{{"ok", r.ok},
                             {"covered", r.covered},
                             {"width", internal::FiniteOrNull(r.width)},
                             {"p_value", internal::FiniteOrNull(r.p_value)},
                             {"reject", r.reject},
                             {"threshold", internal::FiniteOrNull(r.threshold)}});
    }
    j["per_trial_records"] = std::move(records);
  }
  return j;
}

inline json to_json(const SweepPointResult& p) {
  json j{{"sweep_value", p.sweep_value}, {"ok", p.ok}, {"summary", to_json(p.summary)}};
  if (!p.error.empty()) j["error"] = p.error;
  return j;
}

// ---- CSV writers (one row per sweep point, stable headers) ----

namespace internal {

inline std::string CsvNumber(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace internal

// Header pinned for Z-test sweeps.
inline constexpr const char* kZTestCsvHeader = "sweep_value,power,power_ci_lo,power_ci_hi,mean_p";
inline constexpr const char* kIntervalCsvHeader =
    "sweep_value,coverage,coverage_ci_lo,coverage_ci_hi,mean_width,width_std,failures";
inline constexpr const char* kQuantileCsvHeader =
    "sweep_value,success_rate,success_ci_lo,success_ci_hi,mean_threshold,failures";

inline void write_csv(std::ostream& os, EstimatorKind kind,
                      const std::vector<SweepPointResult>& points) {
  using internal::CsvNumber;
  switch (kind) {
    case EstimatorKind::kZTest:
      os << kZTestCsvHeader << "\n";
      for (const auto& p : points) {
        os << CsvNumber(p.sweep_value) << ',' << CsvNumber(p.summary.power) << ','
           << CsvNumber(p.summary.power_ci_lo) << ',' << CsvNumber(p.summary.power_ci_hi) << ','
           << CsvNumber(p.summary.mean_p_value) << "\n";
      }
      return;
    case EstimatorKind::kBinRr:
      os << kQuantileCsvHeader << "\n";
      for (const auto& p : points) {
        os << CsvNumber(p.sweep_value) << ',' << CsvNumber(p.summary.coverage_rate) << ','
           << CsvNumber(p.summary.coverage_ci_lo) << ',' << CsvNumber(p.summary.coverage_ci_hi)
           << ',' << CsvNumber(p.summary.mean_threshold) << ',' << p.summary.failures << "\n";
      }
      return;
    default:
      os << kIntervalCsvHeader << "\n";
      for (const auto& p : points) {
        os << CsvNumber(p.sweep_value) << ',' << CsvNumber(p.summary.coverage_rate) << ','
           << CsvNumber(p.summary.coverage_ci_lo) << ',' << CsvNumber(p.summary.coverage_ci_hi)
           << ',' << CsvNumber(p.summary.mean_width) << ',' << CsvNumber(p.summary.width_std)
           << ',' << p.summary.failures << "\n";
      }
      return;
  }
}

// ---- ExperimentConfig <-> JSON (config-file mode) ----

inline ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig cfg;
  cfg.estimator = estimator_kind_from_string(j.at("estimator").get<std::string>());
  if (j.contains("data")) {
    cfg.data.mu = j["data"].value("mu", cfg.data.mu);
    cfg.data.sigma = j["data"].value("sigma", cfg.data.sigma);
  }
  cfg.n = j.value("n", cfg.n);
  cfg.trials = j.value("trials", cfg.trials);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.jobs = j.value("jobs", cfg.jobs);
  cfg.R = j.value("R", cfg.R);
  cfg.beta = j.value("beta", cfg.beta);
  cfg.privacy.epsilon = j.value("epsilon", cfg.privacy.epsilon);
  cfg.privacy.delta = j.value("delta", cfg.privacy.delta);
  cfg.sigma_known = j.value("sigma_known", cfg.sigma_known);
  cfg.mu0 = j.value("mu0", cfg.mu0);
  cfg.significance = j.value("significance", cfg.significance);
  cfg.pure_epsilon_phase2 = j.value("pure_epsilon_phase2", cfg.pure_epsilon_phase2);
  cfg.sigma_min = j.value("sigma_min", cfg.sigma_min);
  cfg.sigma_max = j.value("sigma_max", cfg.sigma_max);
  cfg.p_star = j.value("p_star", cfg.p_star);
  cfg.q_min = j.value("q_min", cfg.q_min);
  cfg.q_max = j.value("q_max", cfg.q_max);
  cfg.lambda = j.value("lambda", cfg.lambda);
  cfg.tau = j.value("tau", cfg.tau);
  cfg.keep_records = j.value("keep_records", cfg.keep_records);
  if (j.contains("sweep")) {
    cfg.sweep.name = j["sweep"].at("name").get<std::string>();
    cfg.sweep.values = j["sweep"].at("values").get<std::vector<double>>();
  }
  return cfg;
}

}  // namespace ldp
