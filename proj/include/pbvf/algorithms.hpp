#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pbvf/config.hpp"
#include "pbvf/critics.hpp"
#include "pbvf/environments.hpp"
#include "pbvf/policies.hpp"
#include "pbvf/replay_buffer.hpp"

namespace pbvf {

struct EvalPoint {
  long env_steps = 0;
  double mean_return = 0.0;
  double std_return = 0.0;
  std::uint64_t seed = 0;
};

using LearningCurve = std::vector<EvalPoint>;

struct ReturnStats {
  double mean = 0.0;
  double std = 0.0;  // population std over episodes
  std::vector<double> returns;
};

// Noise-free rollouts of `policy` on a fresh env seeded with `seed`.
// Observations pass through `normalizer` (frozen) when it is non-null.
ReturnStats evaluate_policy(const std::string& env_name, const PolicyParams& policy,
                            const RunningNormalizer* normalizer, int n_episodes, std::uint64_t seed);
ReturnStats evaluate_policy(Env& env, const PolicyParams& policy, const RunningNormalizer* normalizer, int n_episodes);

// Undiscounted (gamma = 1) or discounted return of one deterministic rollout
// from a fresh env, truncated after `horizon` steps (0 = the env's own limit).
double rollout_return(const std::string& env_name, const PolicyParams& policy, std::uint64_t seed, double gamma,
                      int horizon);

// Evaluation schedule: point k (1..eval_count) is due at k * total / eval_count
// env steps and is taken at the first episode boundary at or after that.
class EvalSchedule {
 public:
  EvalSchedule(const RunConfig& config);

  // Records every point that has become due by `env_steps`.
  void at_boundary(long env_steps, const PolicyParams& policy, const RunningNormalizer* normalizer);
  bool complete() const { return next_ > count_; }
  const LearningCurve& curve() const { return curve_; }
  long due_step(int k) const;

 private:
  std::string env_;
  long total_;
  int count_;
  int episodes_;
  std::uint64_t seed_;
  int next_ = 1;
  LearningCurve curve_;
};

struct RunResult {
  LearningCurve curve;
  PolicyParams final_policy;
  std::shared_ptr<PbvfCritic> critic;
  RunningNormalizer normalizer;
  bool normalized = false;
  long env_steps = 0;
  long episodes = 0;
  long normalizer_calls = 0;
  // theta at the start of every training episode (ARS: every iteration).
  std::vector<Vector> theta_trace;
  // Undiscounted return of every training (perturbed) episode.
  std::vector<double> episode_returns;
  // Raw states kept for zero-shot training through PSVF/PAVF critics.
  Matrix state_sample;
  // PAVF runs: largest |exact - (biased + direct)| seen over all actor updates.
  double pavf_decomposition_gap = 0.0;
  // pavf-stoch runs: largest |rho - 1| over actor samples whose theta_tilde equals
  // the current theta, and how many such samples there were.
  double max_ratio_deviation = 0.0;
  long ratio_samples_checked = 0;
};

// Builds the policy a config starts from (init scheme or explicit theta).
PolicyParams initial_policy(const RunConfig& config, const Env& env, SeededRng& rng);

RunResult run_pssvf(const RunConfig& config);
RunResult run_psvf(const RunConfig& config);
enum class PavfMode { exact, biased };
RunResult run_pavf(const RunConfig& config, PavfMode mode);
RunResult run_pavf_stochastic(const RunConfig& config);
RunResult run_ars(const RunConfig& config);
// Dispatches on config.algo for the online training algorithms.
RunResult run_training(const RunConfig& config);

// Delta theta = alpha / (n_elite * sigma_R) * sum (r+ - r-) delta over the
// n_elite directions with the largest max(r+, r-); sigma_R is the population
// std of the 2 n_elite elite returns, replaced by 1 when it is zero.
Vector ars_update(const std::vector<Vector>& directions, const std::vector<double>& returns_plus,
                  const std::vector<double>& returns_minus, int n_elite, double alpha);

struct ZeroShotConfig {
  std::string env;
  PolicySpec spec;
  int n_policies = 5;
  double lr = 0.05;
  int steps = 200;
  int eval_every = 5;
  int eval_episodes = 5;
  std::uint64_t seed = 0;
};

struct ZeroShotResult {
  std::vector<LearningCurve> curves;  // env_steps holds the gradient step
  std::vector<PolicyParams> policies;
  double best_return = 0.0;
  std::vector<double> final_returns;
};

// Trains fresh policies by gradient ascent through a frozen critic. PSVF/PAVF
// critics need `states` (already normalized columns).
ZeroShotResult zero_shot_train(const PbvfCritic& critic, const ZeroShotConfig& config,
                               const RunningNormalizer* normalizer, const Matrix& states = Matrix());

struct OfflineCheckpoint {
  long critic_updates = 0;
  double holdout_td_loss = 0.0;
  ZeroShotResult zero_shot;
};

struct OfflineReport {
  long dataset_size = 0;
  long fragments = 0;
  // Env step at which each fragment's policy took over.
  std::vector<long> fragment_starts;
  double best_behavior_return = 0.0;
  long behavior_episodes = 0;
  std::vector<OfflineCheckpoint> checkpoints;
  double best_zero_shot_return = 0.0;
};

OfflineReport offline_psvf_experiment(const RunConfig& config);

// Exact softmax policy-gradient checks on an enumerable MDP. theta and b are
// S x A logit tables; gradients are flattened row-major (s * A + a).
struct OracleReport {
  Vector thm1_expression;
  Vector thm1_finite_diff;
  double thm1_maxerr = 0.0;
  Vector thm3_expression;
  Vector thm3_finite_diff;
  double thm3_maxerr = 0.0;
  Vector degris_expression;
  double degris_bias = 0.0;
  double j = 0.0;
  double j_b = 0.0;
};

TabularPolicy softmax_policy(const Matrix& logits);
// sum_s mu0(s) V(s)
double exact_objective(const FiniteMdp& mdp, const Matrix& logits);
// sum_s d_inf(s) V^theta(s) with d_inf fixed.
double exact_off_policy_objective(const FiniteMdp& mdp, const Matrix& logits, const Vector& d_inf);
// mu0^T (I - gamma P_pi)^-1: discounted state weighting counted from t = 0.
Vector discounted_state_weighting(const FiniteMdp& mdp, const TabularPolicy& policy);
OracleReport pg_theorem_oracle(const FiniteMdp& mdp, const Matrix& theta, const Matrix& b);

}  // namespace pbvf
