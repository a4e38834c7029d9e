#include <algorithm>
#include <limits>
#include <memory>

#include "pbvf/algorithms.hpp"
#include "run_streams.hpp"

namespace pbvf {

namespace {

constexpr int kZeroShotBatch = 128;

Matrix sample_columns(const Matrix& states, int n, SeededRng& rng) {
  Matrix out(states.rows(), n);
  for (int j = 0; j < n; ++j) out.col(j) = states.col(static_cast<Eigen::Index>(rng.uniform_index(states.cols())));
  return out;
}

}  // namespace

ZeroShotResult zero_shot_train(const PbvfCritic& critic, const ZeroShotConfig& config,
                               const RunningNormalizer* normalizer, const Matrix& states) {
  if (critic.kind() != CriticKind::pssvf && states.cols() == 0) {
    throw InputError("zero_shot_train: psvf/pavf critics need a batch of states");
  }
  if (config.eval_every < 1 || config.steps < 0 || config.n_policies < 1) {
    throw ConfigError("zero_shot_train: invalid schedule");
  }
  ZeroShotResult result;
  result.best_return = -std::numeric_limits<double>::infinity();
  for (int p = 0; p < config.n_policies; ++p) {
    SeededRng rng(derive_seed(config.seed, streams::kZeroShot, static_cast<std::uint64_t>(p)));
    PolicyParams policy = policy_init(config.spec, InitScheme::reference_default, rng);
    AdamState adam(policy.theta.size(), config.lr);
    LearningCurve curve;
    for (int step = 0;; ++step) {
      if (step % config.eval_every == 0 || step == config.steps) {
        const std::uint64_t eval_seed =
            derive_seed(config.seed, streams::kEval, (static_cast<std::uint64_t>(p) << 32) | static_cast<std::uint64_t>(step));
        const ReturnStats stats = evaluate_policy(config.env, policy, normalizer, config.eval_episodes, eval_seed);
        curve.push_back({step, stats.mean, stats.std, config.seed});
        result.best_return = std::max(result.best_return, stats.mean);
      }
      if (step == config.steps) break;
      Vector g;
      switch (critic.kind()) {
        case CriticKind::pssvf:
          g = critic.actor_grad_pssvf(policy.theta);
          break;
        case CriticKind::psvf:
          g = critic.actor_grad_psvf(sample_columns(states, kZeroShotBatch, rng), policy.theta);
          break;
        case CriticKind::pavf:
          g = critic.actor_grad_pavf(sample_columns(states, kZeroShotBatch, rng), policy).exact;
          break;
      }
      adam_step(adam, policy.theta, -g);
    }
    result.final_returns.push_back(curve.back().mean_return);
    result.curves.push_back(std::move(curve));
    result.policies.push_back(std::move(policy));
  }
  return result;
}

OfflineReport offline_psvf_experiment(const RunConfig& config) {
  if (config.offline_fragment < 1 || config.offline_dataset < 1) throw ConfigError("offline: invalid dataset shape");
  if (config.offline_checkpoints < 1) throw ConfigError("offline: need at least one checkpoint");
  const std::uint64_t seed = config.seed;
  auto env = make_env(config.env, derive_seed(seed, streams::kEnv));
  SeededRng init_rng(derive_seed(seed, streams::kPolicyInit));
  SeededRng critic_rng(derive_seed(seed, streams::kCriticInit));
  SeededRng noise_rng(derive_seed(seed, streams::kNoise));
  SeededRng sample_rng(derive_seed(seed, streams::kSampling));
  SeededRng action_rng(derive_seed(seed, streams::kActions));
  if (config.stochastic) throw ConfigError("offline-psvf uses deterministic behavior policies");

  OfflineReport report;
  const PolicyParams base = initial_policy(config, *env, init_rng);
  RunningNormalizer normalizer(env->state_dim());
  std::vector<TransitionRecord> data;
  data.reserve(static_cast<std::size_t>(config.offline_dataset));

  // Phase 1: fragmented behavior. A new perturbation of the base policy takes
  // over every `offline_fragment` env steps, also in the middle of episodes.
  PerturbedPolicy behavior = perturb(base, config.offline_sigma, noise_rng);
  auto theta_tilde = std::make_shared<const Vector>(behavior.policy.theta);
  report.fragment_starts.push_back(0);
  report.best_behavior_return = -std::numeric_limits<double>::infinity();
  long t = 0;
  Vector s = env->reset();
  double episode_return = 0.0;
  while (t < config.offline_dataset) {
    if (t > 0 && t % config.offline_fragment == 0) {
      behavior = perturb(base, config.offline_sigma, noise_rng);
      theta_tilde = std::make_shared<const Vector>(behavior.policy.theta);
      report.fragment_starts.push_back(t);
    }
    const Vector x = config.obs_normalization ? normalizer.update_apply(s) : s;
    StepResult step = env->step(act_sample(behavior.policy, x, action_rng).action);
    episode_return += step.reward;
    data.push_back({s, Vector(), theta_tilde, 0.0, step.reward, step.state, step.terminated});
    ++t;
    if (step.done()) {
      report.best_behavior_return = std::max(report.best_behavior_return, episode_return);
      ++report.behavior_episodes;
      episode_return = 0.0;
      s = env->reset();
    } else {
      s = std::move(step.state);
    }
  }
  report.dataset_size = static_cast<long>(data.size());
  report.fragments = static_cast<long>(report.fragment_starts.size());

  // Phase 2: TD-only PSVF training on the frozen dataset.
  PbvfCritic critic(CriticKind::psvf, env->state_dim(), 0, static_cast<int>(base.theta.size()),
                    CriticConfig{config.critic_hidden, config.critic_activation, config.lr_critic}, critic_rng);
  auto normalize = [&](const Matrix& raw) { return config.obs_normalization ? normalizer.apply_batch(raw) : raw; };
  auto make_batch = [&](const std::vector<std::size_t>& idx) {
    const Eigen::Index n = static_cast<Eigen::Index>(idx.size());
    TdBatch b;
    Matrix st(env->state_dim(), n), sn(env->state_dim(), n);
    b.thetas.resize(base.theta.size(), n);
    b.rewards.resize(n);
    b.terminal.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const TransitionRecord& rec = data[idx[j]];
      st.col(j) = rec.s;
      sn.col(j) = rec.s_next;
      b.thetas.col(j) = *rec.theta_tilde;
      b.rewards[j] = rec.r;
      b.terminal[j] = rec.terminal ? 1.0 : 0.0;
    }
    b.states = normalize(st);
    b.next_states = normalize(sn);
    return b;
  };
  auto random_indices = [&](std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (auto& i : idx) i = sample_rng.uniform_index(data.size());
    return idx;
  };
  const TdBatch holdout = make_batch(random_indices(static_cast<std::size_t>(config.offline_holdout)));
  Matrix raw_states(env->state_dim(), 4096);
  {
    const auto idx = random_indices(static_cast<std::size_t>(raw_states.cols()));
    for (Eigen::Index j = 0; j < raw_states.cols(); ++j) raw_states.col(j) = data[idx[j]].s;
  }
  const Matrix states = normalize(raw_states);

  ZeroShotConfig zs;
  zs.env = config.env;
  zs.spec = base.spec;
  zs.n_policies = config.zs_policies;
  zs.lr = config.zs_lr;
  zs.steps = config.zs_steps;
  zs.eval_every = config.zs_eval_every;
  zs.eval_episodes = config.zs_eval_episodes;
  const RunningNormalizer* frozen = config.obs_normalization ? &normalizer : nullptr;

  report.best_zero_shot_return = -std::numeric_limits<double>::infinity();
  const long per_checkpoint = std::max(1L, config.offline_critic_updates / config.offline_checkpoints);
  long updates = 0;
  for (int c = 0; c < config.offline_checkpoints; ++c) {
    for (long u = 0; u < per_checkpoint; ++u) {
      critic.td_update(make_batch(random_indices(static_cast<std::size_t>(config.batch_size))), config.gamma,
                       config.td_gradient);
      ++updates;
    }
    OfflineCheckpoint cp;
    cp.critic_updates = updates;
    cp.holdout_td_loss = critic.td_loss(holdout, config.gamma);
    zs.seed = derive_seed(seed, streams::kOffline, static_cast<std::uint64_t>(c));
    cp.zero_shot = zero_shot_train(critic, zs, frozen, states);
    report.best_zero_shot_return = std::max(report.best_zero_shot_return, cp.zero_shot.best_return);
    report.checkpoints.push_back(std::move(cp));
  }
  return report;
}

}  // namespace pbvf
