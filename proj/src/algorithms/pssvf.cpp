#include <memory>

#include "pbvf/algorithms.hpp"
#include "run_streams.hpp"

namespace pbvf {

RunResult run_pssvf(const RunConfig& config) {
  const std::uint64_t seed = config.seed;
  auto env = make_env(config.env, derive_seed(seed, streams::kEnv));
  SeededRng init_rng(derive_seed(seed, streams::kPolicyInit));
  SeededRng critic_rng(derive_seed(seed, streams::kCriticInit));
  SeededRng noise_rng(derive_seed(seed, streams::kNoise));
  SeededRng sample_rng(derive_seed(seed, streams::kSampling));
  SeededRng action_rng(derive_seed(seed, streams::kActions));

  RunResult result;
  PolicyParams policy = initial_policy(config, *env, init_rng);
  const int theta_dim = static_cast<int>(policy.theta.size());
  PbvfCritic critic(CriticKind::pssvf, 0, 0, theta_dim,
                    CriticConfig{config.critic_hidden, config.critic_activation, config.lr_critic}, critic_rng);
  AdamState actor(policy.theta.size(), config.lr_actor);
  ReplayBuffer<ReturnRecord> buffer(config.buffer_capacity);
  RunningNormalizer normalizer(env->state_dim());
  const RunningNormalizer* frozen = config.obs_normalization ? &normalizer : nullptr;
  EvalSchedule schedule(config);

  long t = 0;
  Matrix thetas(theta_dim, config.batch_size);
  Vector returns(config.batch_size);
  while (!schedule.complete()) {
    result.theta_trace.push_back(policy.theta);
    const PerturbedPolicy perturbed = perturb(policy, config.sigma, noise_rng);
    auto theta_tilde = std::make_shared<const Vector>(perturbed.policy.theta);

    Vector s = env->reset();
    double episode_return = 0.0;
    while (true) {
      const Vector x = config.obs_normalization ? normalizer.update_apply(s) : s;
      const ActionSample a = act_sample(perturbed.policy, x, action_rng);
      StepResult step = env->step(a.action);
      episode_return += step.reward;
      ++t;
      if (step.done()) break;
      s = std::move(step.state);
    }
    buffer.push({theta_tilde, episode_return});
    result.episode_returns.push_back(episode_return);
    ++result.episodes;

    for (int u = 0; u < config.critic_updates; ++u) {
      const auto idx = buffer.sample_indices(static_cast<std::size_t>(config.batch_size), sample_rng);
      for (int j = 0; j < config.batch_size; ++j) {
        thetas.col(j) = *buffer[idx[j]].theta_tilde;
        returns[j] = buffer[idx[j]].episode_return;
      }
      critic.mc_update(thetas, returns);
    }
    for (int u = 0; u < config.actor_updates; ++u) {
      const Vector g = critic.actor_grad_pssvf(policy.theta);
      adam_step(actor, policy.theta, -g);
    }
    schedule.at_boundary(t, policy, frozen);
  }

  result.curve = schedule.curve();
  result.final_policy = policy;
  result.critic = std::make_shared<PbvfCritic>(std::move(critic));
  result.normalizer = normalizer;
  result.normalized = config.obs_normalization;
  result.env_steps = t;
  result.normalizer_calls = normalizer.calls();
  return result;
}

}  // namespace pbvf
