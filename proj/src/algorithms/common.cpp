#include <cmath>
#include <string>

#include "pbvf/algorithms.hpp"
#include "run_streams.hpp"

namespace pbvf {

ReturnStats evaluate_policy(Env& env, const PolicyParams& policy, const RunningNormalizer* normalizer,
                            int n_episodes) {
  if (n_episodes < 1) throw InputError("evaluate_policy: need at least one episode");
  ReturnStats stats;
  stats.returns.reserve(n_episodes);
  for (int e = 0; e < n_episodes; ++e) {
    Vector s = env.reset();
    double total = 0.0;
    while (true) {
      const Vector a = normalizer != nullptr ? act(policy, normalizer->apply(s)) : act(policy, s);
      StepResult step = env.step(a);
      total += step.reward;
      if (step.done()) break;
      s = std::move(step.state);
    }
    stats.returns.push_back(total);
  }
  double sum = 0.0;
  for (double r : stats.returns) sum += r;
  stats.mean = sum / n_episodes;
  double sq = 0.0;
  for (double r : stats.returns) sq += (r - stats.mean) * (r - stats.mean);
  stats.std = std::sqrt(sq / n_episodes);
  return stats;
}

ReturnStats evaluate_policy(const std::string& env_name, const PolicyParams& policy,
                            const RunningNormalizer* normalizer, int n_episodes, std::uint64_t seed) {
  auto env = make_env(env_name, seed);
  return evaluate_policy(*env, policy, normalizer, n_episodes);
}

double rollout_return(const std::string& env_name, const PolicyParams& policy, std::uint64_t seed, double gamma,
                      int horizon) {
  std::unique_ptr<Env> env;
  if (env_name == "lqr" && horizon > 0) {
    env = std::make_unique<LqrEnv>(seed, horizon);
  } else {
    env = make_env(env_name, seed);
  }
  Vector s = env->reset();
  double total = 0.0;
  double discount = 1.0;
  for (int t = 0; horizon <= 0 || t < horizon; ++t) {
    StepResult step = env->step(act(policy, s));
    total += discount * step.reward;
    discount *= gamma;
    if (step.done()) break;
    s = std::move(step.state);
  }
  return total;
}

EvalSchedule::EvalSchedule(const RunConfig& config)
    : env_(config.env),
      total_(config.total_env_steps),
      count_(config.eval_count),
      episodes_(config.eval_episodes),
      seed_(config.seed) {
  if (total_ < 1) throw ConfigError("total_env_steps must be positive");
  if (count_ < 1) throw ConfigError("eval_count must be positive");
  if (episodes_ < 1) throw ConfigError("eval_episodes must be positive");
  curve_.reserve(count_);
}

long EvalSchedule::due_step(int k) const { return static_cast<long>((static_cast<__int128>(k) * total_) / count_); }

void EvalSchedule::at_boundary(long env_steps, const PolicyParams& policy, const RunningNormalizer* normalizer) {
  while (next_ <= count_ && due_step(next_) <= env_steps) {
    const std::uint64_t eval_seed = derive_seed(seed_, streams::kEval, static_cast<std::uint64_t>(next_));
    const ReturnStats stats = evaluate_policy(env_, policy, normalizer, episodes_, eval_seed);
    curve_.push_back({env_steps, stats.mean, stats.std, seed_});
    ++next_;
  }
}

PolicyParams initial_policy(const RunConfig& config, const Env& env, SeededRng& rng) {
  const PolicySpec spec = policy_spec_for(env, config.arch, config.stochastic);
  PolicyParams p = policy_init(spec, config.init, rng);
  if (!config.init_theta.empty()) {
    if (config.init_theta.size() != static_cast<std::size_t>(p.theta.size())) {
      throw ConfigError("init_theta has " + std::to_string(config.init_theta.size()) + " entries, the policy has " +
                        std::to_string(p.theta.size()) + " parameters");
    }
    for (std::size_t i = 0; i < config.init_theta.size(); ++i) p.theta[static_cast<Eigen::Index>(i)] = config.init_theta[i];
  }
  return p;
}

RunResult run_training(const RunConfig& config) {
  switch (config.algo) {
    case Algo::pssvf:
      return run_pssvf(config);
    case Algo::psvf:
      return run_psvf(config);
    case Algo::pavf:
      return run_pavf(config, PavfMode::exact);
    case Algo::pavf_biased:
      return run_pavf(config, PavfMode::biased);
    case Algo::pavf_stoch:
      return run_pavf_stochastic(config);
    case Algo::ars:
      return run_ars(config);
    default:
      throw ConfigError("run_training: '" + std::string(to_string(config.algo)) + "' is not an online training algorithm");
  }
}

}  // namespace pbvf
