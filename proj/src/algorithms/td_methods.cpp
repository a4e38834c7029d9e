#include <algorithm>
#include <cmath>
#include <memory>

#include "pbvf/algorithms.hpp"
#include "run_streams.hpp"

namespace pbvf {

namespace {

enum class TdVariant { psvf, pavf_exact, pavf_biased, pavf_stoch };

bool uses_actions(TdVariant v) { return v != TdVariant::psvf; }

class TdLearner {
 public:
  TdLearner(const RunConfig& config, TdVariant variant)
      : config_(config),
        variant_(variant),
        env_(make_env(config.env, derive_seed(config.seed, streams::kEnv))),
        noise_rng_(derive_seed(config.seed, streams::kNoise)),
        sample_rng_(derive_seed(config.seed, streams::kSampling)),
        action_rng_(derive_seed(config.seed, streams::kActions)),
        buffer_(config.buffer_capacity),
        normalizer_(env_->state_dim()),
        schedule_(config) {
    SeededRng init_rng(derive_seed(config.seed, streams::kPolicyInit));
    SeededRng critic_rng(derive_seed(config.seed, streams::kCriticInit));
    const ActionSpace space = env_->action_space();
    if (uses_actions(variant_) && space.kind != ActionKind::continuous) {
      throw ConfigError(std::string(to_string(config.algo)) + " needs a continuous action space; '" + config.env +
                        "' is discrete");
    }
    if (variant_ == TdVariant::pavf_stoch && !config.stochastic) {
      throw ConfigError("pavf-stoch needs the gaussian head (--stochastic)");
    }
    if ((variant_ == TdVariant::pavf_exact || variant_ == TdVariant::pavf_biased) && config.stochastic) {
      throw ConfigError("pavf and pavf-biased need a deterministic policy");
    }
    policy_ = initial_policy(config, *env_, init_rng);
    const int theta_dim = static_cast<int>(policy_.theta.size());
    critic_ = PbvfCritic(uses_actions(variant_) ? CriticKind::pavf : CriticKind::psvf, env_->state_dim(),
                         policy_.spec.action_dim(), theta_dim,
                         CriticConfig{config.critic_hidden, config.critic_activation, config.lr_critic}, critic_rng);
    actor_ = AdamState(policy_.theta.size(), config.lr_actor);
    if (config.update_every < 1) throw ConfigError("update_every must be positive for TD methods");
  }

  RunResult run() {
    RunResult result;
    long t = 0;
    while (!schedule_.complete()) {
      result.theta_trace.push_back(policy_.theta);
      const PerturbedPolicy perturbed = perturb(policy_, config_.sigma, noise_rng_);
      auto theta_tilde = std::make_shared<const Vector>(perturbed.policy.theta);
      Vector s = env_->reset();
      double episode_return = 0.0;
      while (true) {
        const Vector x = config_.obs_normalization ? normalizer_.update_apply(s) : s;
        const ActionSample a = act_sample(perturbed.policy, x, action_rng_);
        StepResult step = env_->step(a.action);
        episode_return += step.reward;
        TransitionRecord rec;
        rec.s = s;
        if (uses_actions(variant_)) rec.a = variant_ == TdVariant::pavf_stoch ? a.pre_squash : a.action;
        rec.theta_tilde = theta_tilde;
        rec.behavior_log_prob = a.log_prob;
        rec.r = step.reward;
        rec.s_next = step.state;
        rec.terminal = step.terminated;
        buffer_.push(std::move(rec));
        ++t;
        if (t % config_.update_every == 0) update(result);
        if (step.done()) break;
        s = std::move(step.state);
      }
      result.episode_returns.push_back(episode_return);
      ++result.episodes;
      schedule_.at_boundary(t, policy_, frozen());
    }
    result.curve = schedule_.curve();
    result.final_policy = policy_;
    result.normalizer = normalizer_;
    result.normalized = config_.obs_normalization;
    result.env_steps = t;
    result.state_sample = state_sample(1024);
    result.critic = std::make_shared<PbvfCritic>(std::move(critic_));
    result.normalizer_calls = normalizer_.calls();
    return result;
  }

 private:
  const RunningNormalizer* frozen() const { return config_.obs_normalization ? &normalizer_ : nullptr; }

  Matrix normalize(const Matrix& raw) const { return config_.obs_normalization ? normalizer_.apply_batch(raw) : raw; }

  TdBatch make_batch(const std::vector<std::size_t>& idx) {
    const Eigen::Index n = static_cast<Eigen::Index>(idx.size());
    const int sd = env_->state_dim();
    const int ad = policy_.spec.action_dim();
    TdBatch b;
    Matrix s(sd, n), s_next(sd, n);
    b.thetas.resize(policy_.theta.size(), n);
    b.rewards.resize(n);
    b.terminal.resize(n);
    if (uses_actions(variant_)) b.actions.resize(ad, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const TransitionRecord& rec = buffer_[idx[j]];
      s.col(j) = rec.s;
      s_next.col(j) = rec.s_next;
      b.thetas.col(j) = *rec.theta_tilde;
      b.rewards[j] = rec.r;
      b.terminal[j] = rec.terminal ? 1.0 : 0.0;
      if (uses_actions(variant_)) b.actions.col(j) = rec.a;
    }
    b.states = normalize(s);
    b.next_states = normalize(s_next);
    if (uses_actions(variant_)) {
      b.next_actions.resize(ad, n);
      PolicyParams behavior = policy_;
      for (Eigen::Index j = 0; j < n; ++j) {
        behavior.theta = b.thetas.col(j);
        if (variant_ == TdVariant::pavf_stoch) {
          b.next_actions.col(j) = act_sample(behavior, b.next_states.col(j), action_rng_).pre_squash;
        } else {
          b.next_actions.col(j) = act(behavior, b.next_states.col(j));
        }
      }
    }
    return b;
  }

  void update(RunResult& result) {
    for (int u = 0; u < config_.critic_updates; ++u) {
      const auto idx = buffer_.sample_indices(static_cast<std::size_t>(config_.batch_size), sample_rng_);
      critic_.td_update(make_batch(idx), config_.gamma, config_.td_gradient);
    }
    for (int u = 0; u < config_.actor_updates; ++u) {
      const auto idx = buffer_.sample_indices(static_cast<std::size_t>(config_.actor_batch_size), sample_rng_);
      const Eigen::Index n = static_cast<Eigen::Index>(idx.size());
      Matrix raw(env_->state_dim(), n);
      for (Eigen::Index j = 0; j < n; ++j) raw.col(j) = buffer_[idx[j]].s;
      const Matrix states = normalize(raw);
      Vector g;
      switch (variant_) {
        case TdVariant::psvf:
          g = critic_.actor_grad_psvf(states, policy_.theta);
          break;
        case TdVariant::pavf_exact:
        case TdVariant::pavf_biased: {
          const PavfActorGrad terms = critic_.actor_grad_pavf(states, policy_);
          const Vector recombined = terms.biased() + terms.direct_path;
          result.pavf_decomposition_gap =
              std::max(result.pavf_decomposition_gap, (terms.exact - recombined).lpNorm<Eigen::Infinity>());
          g = variant_ == TdVariant::pavf_exact ? terms.exact : terms.biased();
          break;
        }
        case TdVariant::pavf_stoch: {
          StochasticBatch sb;
          sb.states = states;
          sb.actions.resize(policy_.spec.action_dim(), n);
          sb.behavior_log_probs.resize(n);
          for (Eigen::Index j = 0; j < n; ++j) {
            const TransitionRecord& rec = buffer_[idx[j]];
            sb.actions.col(j) = rec.a;
            // With normalization on, the stored log-prob saw the statistics of acting time; re-evaluate
            // it on the current normalized state so both densities share one input.
            if (config_.obs_normalization) {
              PolicyParams behavior = policy_;
              behavior.theta = *rec.theta_tilde;
              sb.behavior_log_probs[j] = log_prob(behavior, states.col(j), rec.a);
            } else {
              sb.behavior_log_probs[j] = rec.behavior_log_prob;
            }
            const double rho = std::exp(log_prob(policy_, states.col(j), rec.a) - sb.behavior_log_probs[j]);
            if (*rec.theta_tilde == policy_.theta) {
              result.max_ratio_deviation = std::max(result.max_ratio_deviation, std::abs(rho - 1.0));
              ++result.ratio_samples_checked;
            }
          }
          g = critic_.actor_grad_pavf_stochastic(sb, policy_);
          break;
        }
      }
      adam_step(actor_, policy_.theta, -g);
    }
  }

  Matrix state_sample(std::size_t n) {
    if (buffer_.empty()) return Matrix(env_->state_dim(), 0);
    const auto idx = buffer_.sample_indices(n, sample_rng_);
    Matrix out(env_->state_dim(), static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) out.col(static_cast<Eigen::Index>(j)) = buffer_[idx[j]].s;
    return out;
  }

  const RunConfig& config_;
  TdVariant variant_;
  std::unique_ptr<Env> env_;
  SeededRng noise_rng_;
  SeededRng sample_rng_;
  SeededRng action_rng_;
  ReplayBuffer<TransitionRecord> buffer_;
  RunningNormalizer normalizer_;
  EvalSchedule schedule_;
  PolicyParams policy_;
  PbvfCritic critic_;
  AdamState actor_;
};

}  // namespace

RunResult run_psvf(const RunConfig& config) { return TdLearner(config, TdVariant::psvf).run(); }

RunResult run_pavf(const RunConfig& config, PavfMode mode) {
  return TdLearner(config, mode == PavfMode::exact ? TdVariant::pavf_exact : TdVariant::pavf_biased).run();
}

RunResult run_pavf_stochastic(const RunConfig& config) { return TdLearner(config, TdVariant::pavf_stoch).run(); }

}  // namespace pbvf
