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
// Command-line harness for the locally private mean/quantile estimators:
// seeded Monte Carlo runs, parameter sweeps, CSV/JSON output.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ldp/ldp.hpp"
#include "ldp/serialize.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitPrecondition = 3;

struct CliOptions {
  ldp::ExperimentConfig cfg;
  std::string out_path;
  std::string format;  // "", "csv", "json"
  std::string sweep_name;
  std::vector<double> sweep_values;
  std::string config_path;  // experiment subcommand
  std::string trace_path;   // quantile per-iteration trace (single runs)
  std::string audit_path;   // per-user audit log (single runs)
  bool sigma_true_given = false;
  bool seed_given = false;
};

std::uint64_t DefaultSeed() {
  if (const char* env = std::getenv("LDP_MEANEST_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw ldp::ConfigError("LDP_MEANEST_SEED is not a valid unsigned integer");
    }
  }
  return 1;
}

// Single-run mode (one trial, no sweep): run the estimator once and emit its
// full result object. Optionally writes a quantile-search trace and the
// pool's per-user audit log as JSON lines.
ldp::json RunSingle(const ldp::ExperimentConfig& cfg, const std::string& trace_path,
                    const std::string& audit_path) {
  ldp::RngStream data_rng(cfg.seed, 0);
  ldp::RngStream mech_rng(cfg.seed, 1);
  std::vector<double> values(ldp::trial_pool_size(cfg));
  for (double& v : values) v = ldp::sample_gaussian(data_rng, cfg.data.mu, cfg.data.sigma);
  ldp::UserPool pool(std::move(values));

  ldp::json result;
  switch (cfg.estimator) {
    case ldp::EstimatorKind::kKnownBf:
      result = ldp::to_json(ldp::known_bf(pool, ldp::internal::MakeKnownConfig(cfg), mech_rng));
      break;
    case ldp::EstimatorKind::kZTest:
      result = ldp::to_json(ldp::ztest(pool, ldp::internal::MakeKnownConfig(cfg), cfg.mu0,
                                       cfg.significance, mech_rng));
      break;
    case ldp::EstimatorKind::kBinRr: {
      ldp::QuantileTraceSink sink = nullptr;
      std::ofstream trace_file;
      if (!trace_path.empty()) {
        trace_file.open(trace_path, std::ios::binary);
        if (!trace_file) throw ldp::ConfigError("cannot open trace file: " + trace_path);
        sink = [&trace_file](const ldp::QuantileTraceEntry& e) {
          trace_file << ldp::quantile_trace_jsonl_line(e) << "\n";
        };
      }
      result = ldp::to_json(ldp::bin_rr(pool, pool.size(), ldp::internal::MakeQuantileQuery(cfg),
                                        cfg.privacy.epsilon, mech_rng, sink));
      break;
    }
    case ldp::EstimatorKind::kUnkVar:
      result = ldp::to_json(ldp::unk_var(pool, ldp::internal::MakeUnknownConfig(cfg), mech_rng));
      break;
    case ldp::EstimatorKind::kLargeVar:
      result =
          ldp::to_json(ldp::large_var(pool, cfg.privacy.epsilon, cfg.R, cfg.beta, mech_rng));
      break;
    case ldp::EstimatorKind::kAuto: {
      ldp::AutoMeanConfig auto_cfg{cfg.sigma_min, cfg.beta, cfg.privacy, cfg.R};
      result = ldp::to_json(ldp::estimate_mean_auto(pool, auto_cfg, mech_rng));
      break;
    }
  }
  if (!audit_path.empty()) {
    std::ofstream audit_file(audit_path, std::ios::binary);
    if (!audit_file) throw ldp::ConfigError("cannot open audit file: " + audit_path);
    pool.write_audit_jsonl(audit_file);
  }
  return result;
}

void WriteOutput(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream file(out_path, std::ios::binary);
  if (!file) throw ldp::ConfigError("cannot open output file: " + out_path);
  file << text;
}

int Execute(CliOptions& opt) {
  ldp::ExperimentConfig& cfg = opt.cfg;
  if (!opt.sweep_name.empty()) {
    cfg.sweep.name = opt.sweep_name;
    cfg.sweep.values = opt.sweep_values;
    if (cfg.sweep.values.empty()) {
      throw ldp::ConfigError("--sweep requires --sweep-values");
    }
  }
  const bool single_run = cfg.trials == 1 && cfg.sweep.name.empty();
  const bool sweep_mode = !cfg.sweep.name.empty();

  std::ostringstream text;
  if (single_run && opt.format != "csv") {
    try {
      text << RunSingle(cfg, opt.trace_path, opt.audit_path).dump(2) << "\n";
    } catch (const ldp::InsufficientSampleError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitPrecondition;
    } catch (const ldp::PoolExhaustedError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitPrecondition;
    } catch (const ldp::EstimationFailureError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitPrecondition;
    }
    WriteOutput(opt.out_path, text.str());
    return kExitOk;
  }

  const std::vector<ldp::SweepPointResult> points = ldp::run_experiment(cfg);
  if (!sweep_mode) {
    // Aggregated single point: a precondition failure is fatal here.
    if (!points.empty() && !points.front().ok) {
      std::cerr << "error: " << points.front().error << "\n";
      return kExitPrecondition;
    }
  }
  if (opt.format == "json") {
    ldp::json arr = ldp::json::array();
    for (const auto& p : points) arr.push_back(ldp::to_json(p));
    text << arr.dump(2) << "\n";
  } else {
    ldp::write_csv(text, cfg.estimator, points);
  }
  WriteOutput(opt.out_path, text.str());
  return kExitOk;
}

void AddCommonFlags(CLI::App* sub, CliOptions& opt) {
  sub->add_option("--seed", opt.cfg.seed, "RNG seed (default: LDP_MEANEST_SEED or 1)")
      ->each([&opt](const std::string&) { opt.seed_given = true; });
  sub->add_option("--trials", opt.cfg.trials, "Monte Carlo trials");
  sub->add_option("--jobs", opt.cfg.jobs, "worker threads (0 = all cores)");
  sub->add_option("--out", opt.out_path, "output file (default: stdout)");
  sub->add_option("--format", opt.format, "output format")
      ->check(CLI::IsMember({"csv", "json"}));
  sub->add_option("--sweep", opt.sweep_name, "parameter to sweep (e.g. mu, n, epsilon)");
  sub->add_option("--sweep-values", opt.sweep_values, "comma-separated sweep values")
      ->delimiter(',');
  sub->add_option("--mu", opt.cfg.data.mu, "true data mean");
  sub->add_option("--sigma-true", opt.cfg.data.sigma, "true data standard deviation")
      ->each([&opt](const std::string&) { opt.sigma_true_given = true; });
  sub->add_option("--eps", opt.cfg.privacy.epsilon, "privacy budget epsilon");
  sub->add_option("--delta", opt.cfg.privacy.delta, "privacy slack delta");
  sub->add_option("--beta", opt.cfg.beta, "failure probability beta");
  sub->add_option("--R", opt.cfg.R, "mean bound: mu assumed in [-R, R]");
  sub->add_option("--n", opt.cfg.n,
                  "sample size (KnownBF/ZTest: estimation sample on top of the histogram "
                  "phase; others: total pool; 0 = smallest valid)");
  sub->add_option("--audit", opt.audit_path,
                  "write the per-user audit log as JSON lines (single runs only)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Locally differentially private mean and quantile estimation harness"};
  app.require_subcommand(1);

  CliOptions opt;
  try {
    opt.cfg.seed = DefaultSeed();
  } catch (const ldp::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  auto* mean_known = app.add_subcommand("mean-known", "known-variance confidence interval");
  mean_known->add_option("--sigma", opt.cfg.sigma_known, "known data standard deviation");
  mean_known->add_flag("--laplace", opt.cfg.pure_epsilon_phase2,
                       "pure-epsilon variant: Laplace noise in phase 2 (no Z-test)");
  AddCommonFlags(mean_known, opt);
  mean_known->callback([&] { opt.cfg.estimator = ldp::EstimatorKind::kKnownBf; });

  auto* ztest = app.add_subcommand("ztest", "private two-sided Z-test");
  ztest->add_option("--sigma", opt.cfg.sigma_known, "known data standard deviation");
  ztest->add_option("--mu-alt", opt.cfg.data.mu, "data mean under the alternative");
  ztest->add_option("--mu0", opt.cfg.mu0, "hypothesized mean");
  ztest->add_option("--significance", opt.cfg.significance, "rejection threshold");
  AddCommonFlags(ztest, opt);
  ztest->callback([&] { opt.cfg.estimator = ldp::EstimatorKind::kZTest; });

  auto* quantile = app.add_subcommand("quantile", "binary-search quantile estimation");
  quantile->add_option("--p", opt.cfg.p_star, "target quantile p* in (0,1)");
  quantile->add_option("--q-min", opt.cfg.q_min, "lower bracket bound");
  quantile->add_option("--q-max", opt.cfg.q_max, "upper bracket bound");
  quantile->add_option("--lambda", opt.cfg.lambda, "quantile-mass tolerance");
  quantile->add_option("--tau", opt.cfg.tau, "bracket resolution (sets iteration budget)");
  quantile->add_option("--trace", opt.trace_path,
                       "write per-iteration search trace as JSON lines (single runs only)");
  AddCommonFlags(quantile, opt);
  quantile->callback([&] { opt.cfg.estimator = ldp::EstimatorKind::kBinRr; });

  auto* mean_unknown = app.add_subcommand("mean-unknown", "bounded unknown-variance interval");
  mean_unknown->add_option("--sigma-min", opt.cfg.sigma_min, "lower bound on sigma");
  mean_unknown->add_option("--sigma-max", opt.cfg.sigma_max, "upper bound on sigma (0 = 2R)");
  AddCommonFlags(mean_unknown, opt);
  mean_unknown->callback([&] { opt.cfg.estimator = ldp::EstimatorKind::kUnkVar; });

  auto* mean_large = app.add_subcommand("mean-large", "very-large-variance interval");
  AddCommonFlags(mean_large, opt);
  mean_large->callback([&] { opt.cfg.estimator = ldp::EstimatorKind::kLargeVar; });

  auto* mean_auto = app.add_subcommand("mean-auto", "regime-detecting unknown-variance interval");
  mean_auto->add_option("--sigma-min", opt.cfg.sigma_min, "lower bound on sigma");
  AddCommonFlags(mean_auto, opt);
  mean_auto->callback([&] { opt.cfg.estimator = ldp::EstimatorKind::kAuto; });

  auto* experiment = app.add_subcommand("experiment", "run from a JSON config file");
  experiment->add_option("--config", opt.config_path, "JSON ExperimentConfig file")->required();
  AddCommonFlags(experiment, opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (app.got_subcommand(experiment)) {
      std::ifstream in(opt.config_path);
      if (!in) throw ldp::ConfigError("cannot open config file: " + opt.config_path);
      ldp::json j = ldp::json::parse(in);
      ldp::ExperimentConfig file_cfg = ldp::experiment_config_from_json(j);
      // Command-line seed/trials/jobs take precedence over the file.
      if (opt.seed_given) file_cfg.seed = opt.cfg.seed;
      if (experiment->count("--trials") > 0) file_cfg.trials = opt.cfg.trials;
      if (experiment->count("--jobs") > 0) file_cfg.jobs = opt.cfg.jobs;
      if (!opt.seed_given && !j.contains("seed")) file_cfg.seed = opt.cfg.seed;
      opt.cfg = file_cfg;
    } else {
      // The data defaults to the configured known sigma for the estimators
      // that take one, unless --sigma-true overrides it.
      if ((opt.cfg.estimator == ldp::EstimatorKind::kKnownBf ||
           opt.cfg.estimator == ldp::EstimatorKind::kZTest) &&
          !opt.sigma_true_given) {
        opt.cfg.data.sigma = opt.cfg.sigma_known;
      }
    }
    return Execute(opt);
  } catch (const ldp::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}
