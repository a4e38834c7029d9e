#pragma once

#include <map>
#include <string>
#include <vector>

#include "pbvf/algorithms.hpp"
#include "pbvf/config.hpp"

namespace pbvf {

using ConfigValues = std::map<std::string, std::string>;

// Parses flat `key = value` text ('#' starts a comment). Malformed lines and
// unknown keys raise ConfigError naming the line.
ConfigValues parse_config_text(const std::string& text);
ConfigValues read_config_file(const std::string& path);

// Resolves a RunConfig: defaults for (algo, env), then the tuned presets for
// any of lr_actor / lr_critic / sigma not given, then file values, then CLI
// values. Values outside the tuning grids are rejected unless `force`.
RunConfig resolve_config(const ConfigValues& file_values, const ConfigValues& cli_values, bool force = false);
const std::vector<std::string>& config_keys();

// Metrics over the 100 evaluation points of a run.
double avg_metric(const LearningCurve& curve);
// Mean of the last 20% of points.
double final_metric(const LearningCurve& curve);

struct SummaryRow {
  std::string algo;
  std::string env;
  std::string arch;
  int seed_count = 0;
  double avg_metric_mean = 0.0;
  double avg_metric_std = 0.0;
  double final_metric_mean = 0.0;
  double final_metric_std = 0.0;
};

struct LandscapeRow {
  double theta_w = 0.0;
  double theta_b = 0.0;
  double true_j = 0.0;
  double predicted_v = 0.0;
};

struct OracleRow {
  int instance = 0;
  double thm1_maxerr = 0.0;
  double thm3_maxerr = 0.0;
  double degris_bias = 0.0;
};

// Shortest round-trip decimal form.
std::string format_number(double x);
double parse_number(const std::string& text);

void write_curve_csv(const std::string& path, const LearningCurve& curve);
LearningCurve read_curve_csv(const std::string& path);
void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows);
std::vector<SummaryRow> read_summary_csv(const std::string& path);
void write_landscape_csv(const std::string& path, const std::vector<LandscapeRow>& rows);
std::vector<LandscapeRow> read_landscape_csv(const std::string& path);
void write_oracle_csv(const std::string& path, const std::vector<OracleRow>& rows);
std::vector<OracleRow> read_oracle_csv(const std::string& path);
// episode,theta_w,theta_b
void write_trajectory_csv(const std::string& path, const std::vector<Vector>& thetas);

std::string curve_file_name(const RunConfig& config);

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  LearningCurve curve;
  double avg = 0.0;
  double final = 0.0;
  std::string curve_path;
};

struct ExperimentResult {
  std::vector<SeedOutcome> seeds;
  SummaryRow summary;
  std::string summary_path;
};

// One run per seed on up to `jobs` worker threads. Each run writes its own
// curve CSV; the summary is written once after all runs joined. A failing
// seed is reported without aborting the others.
ExperimentResult run_experiment(const RunConfig& config, const std::vector<std::uint64_t>& seeds, int jobs = 1);

// LQR grid over [lo, hi]^2 with `resolution` points per axis, w outer and b inner.
// true_j: one deterministic rollout of `horizon` steps discounted by `gamma`.
// predicted_v: V(theta), V(s0, theta) or Q(s0, pi(s0), theta) by critic kind.
std::vector<LandscapeRow> landscape_dump(const std::string& env, const PbvfCritic* critic, int resolution,
                                         double lo = -5.0, double hi = 5.0, int horizon = 50, double gamma = 1.0);

// Random MDPs (oracle_states states, 2 actions, gamma) with random logit tables
// for the target and behavior policies.
std::vector<OracleRow> run_oracle(const RunConfig& config, std::vector<OracleReport>* reports = nullptr);

double pearson(const std::vector<double>& x, const std::vector<double>& y);

// Riccati solution of the scalar LQR s' = s + a, r = -s^2 - a^2 discounted by gamma.
struct RiccatiSolution {
  double p = 0.0;
  double gain = 0.0;  // a = -gain * s
};
RiccatiSolution lqr_riccati(double gamma = 1.0);

}  // namespace pbvf
