#include <algorithm>
#include <cmath>
#include <numeric>

#include "pbvf/algorithms.hpp"
#include "run_streams.hpp"

namespace pbvf {

Vector ars_update(const std::vector<Vector>& directions, const std::vector<double>& returns_plus,
                  const std::vector<double>& returns_minus, int n_elite, double alpha) {
  const std::size_t n = directions.size();
  if (n == 0) throw InputError("ars_update: no directions");
  if (returns_plus.size() != n || returns_minus.size() != n) throw ShapeError("ars_update: one return pair per direction");
  if (n_elite < 1 || static_cast<std::size_t>(n_elite) > n) {
    throw InputError("ars_update: n_elite must lie in [1, n_directions]");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::max(returns_plus[a], returns_minus[a]) > std::max(returns_plus[b], returns_minus[b]);
  });
  std::vector<double> elite_returns;
  for (int k = 0; k < n_elite; ++k) {
    elite_returns.push_back(returns_plus[order[k]]);
    elite_returns.push_back(returns_minus[order[k]]);
  }
  const double mean = std::accumulate(elite_returns.begin(), elite_returns.end(), 0.0) / elite_returns.size();
  double sq = 0.0;
  for (double r : elite_returns) sq += (r - mean) * (r - mean);
  double sigma_r = std::sqrt(sq / elite_returns.size());
  if (sigma_r == 0.0) sigma_r = 1.0;
  Vector step = Vector::Zero(directions.front().size());
  for (int k = 0; k < n_elite; ++k) {
    const std::size_t i = order[k];
    step += (returns_plus[i] - returns_minus[i]) * directions[i];
  }
  return (alpha / (n_elite * sigma_r)) * step;
}

RunResult run_ars(const RunConfig& config) {
  if (config.ars_elite < 1 || config.ars_elite > config.ars_directions) {
    throw ConfigError("ars: need 1 <= elite directions <= directions");
  }
  const std::uint64_t seed = config.seed;
  auto env = make_env(config.env, derive_seed(seed, streams::kEnv));
  SeededRng init_rng(derive_seed(seed, streams::kPolicyInit));
  SeededRng noise_rng(derive_seed(seed, streams::kNoise));
  SeededRng action_rng(derive_seed(seed, streams::kActions));
  RunResult result;
  PolicyParams policy = initial_policy(config, *env, init_rng);
  RunningNormalizer normalizer(env->state_dim());
  const RunningNormalizer* frozen = config.obs_normalization ? &normalizer : nullptr;
  EvalSchedule schedule(config);
  long t = 0;

  auto rollout = [&](const Vector& theta) {
    PolicyParams p = policy;
    p.theta = theta;
    Vector s = env->reset();
    double total = 0.0;
    while (true) {
      const Vector x = config.obs_normalization ? normalizer.update_apply(s) : s;
      StepResult step = env->step(act_sample(p, x, action_rng).action);
      total += step.reward;
      ++t;
      if (step.done()) break;
      s = std::move(step.state);
    }
    result.episode_returns.push_back(total);
    ++result.episodes;
    schedule.at_boundary(t, policy, frozen);
    return total;
  };

  const int dim = static_cast<int>(policy.theta.size());
  while (!schedule.complete()) {
    result.theta_trace.push_back(policy.theta);
    std::vector<Vector> directions;
    std::vector<double> plus, minus;
    for (int k = 0; k < config.ars_directions && !schedule.complete(); ++k) {
      directions.push_back(gaussian_sample(noise_rng, dim, 1.0));
      plus.push_back(rollout(policy.theta + config.sigma * directions.back()));
      minus.push_back(rollout(policy.theta - config.sigma * directions.back()));
    }
    // The step budget may end mid-iteration; the last partial batch is dropped.
    if (static_cast<int>(directions.size()) < config.ars_directions) break;
    policy.theta += ars_update(directions, plus, minus, config.ars_elite, config.lr_actor);
  }

  result.curve = schedule.curve();
  result.final_policy = policy;
  result.normalizer = normalizer;
  result.normalized = config.obs_normalization;
  result.env_steps = t;
  result.normalizer_calls = normalizer.calls();
  return result;
}

}  // namespace pbvf
