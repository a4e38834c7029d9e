#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "pbvf/numerics.hpp"
#include "pbvf/policies.hpp"

namespace pbvf {

enum class CriticKind { pssvf, psvf, pavf };

std::string_view to_string(CriticKind kind);
CriticKind critic_kind_from_string(std::string_view name);

struct CriticConfig {
  std::vector<int> hidden{512, 512};
  Activation activation = Activation::relu;
  double lr = 1e-3;
};

// Semi-gradient treats the bootstrap target as a constant; residual also
// differentiates through it.
enum class TdGradient { semi, residual };

// Column-major batch of transitions as the critic sees them (states already
// normalized by the caller). `next_actions` is only read by PAVF critics and
// holds the action the target policy takes in s'.
struct TdBatch {
  Matrix states;
  Matrix actions;
  Matrix thetas;
  Vector rewards;
  Matrix next_states;
  Matrix next_actions;
  // 1 where s' is terminal (no bootstrap), 0 otherwise.
  Vector terminal;

  Eigen::Index size() const { return rewards.size(); }
};

struct PavfActorGrad {
  Vector action_path;  // grad_a Q(s, a, theta)|a=pi(s) times d pi / d theta
  Vector direct_path;  // grad_theta Q(s, a, theta)|a=pi(s)
  Vector exact;        // action_path + direct_path
  const Vector& biased() const { return action_path; }
};

// Off-policy batch for the stochastic PAVF gradient: pre-squash actions u and
// the behavioral log-densities log pi_b(u|s).
struct StochasticBatch {
  Matrix states;
  Matrix actions;
  Vector behavior_log_probs;
};

// A parameter-based value function: V(theta), V(s, theta) or Q(s, a, theta)
// realized as an MLP over state || action || theta.
class PbvfCritic {
 public:
  PbvfCritic() = default;
  PbvfCritic(CriticKind kind, int state_dim, int action_dim, int theta_dim, const CriticConfig& config,
             SeededRng& rng);

  CriticKind kind() const { return kind_; }
  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }
  int theta_dim() const { return theta_dim_; }
  int input_dim() const { return state_dim_ + action_dim_ + theta_dim_; }
  const CriticConfig& config() const { return config_; }

  MlpNet& net() { return net_; }
  const MlpNet& net() const { return net_; }
  AdamState& adam() { return adam_; }

  // Absent parts are passed as empty vectors; the parts must match the kind.
  Vector assemble(const ConstVectorRef& s, const ConstVectorRef& a, const ConstVectorRef& theta) const;
  double predict(const ConstVectorRef& s, const ConstVectorRef& a, const ConstVectorRef& theta) const;
  // Column-wise batch of already assembled inputs.
  Vector predict_batch(const Matrix& inputs) const;
  Matrix assemble_batch(const Matrix& states, const Matrix& actions, const Matrix& thetas) const;

  // One Adam step on mean (return - V(theta))^2; returns the pre-step loss.
  double mc_update(const Matrix& thetas, const Vector& returns);
  double mc_loss(const Matrix& thetas, const Vector& returns) const;

  double td_target(double r, const ConstVectorRef& next_state, const ConstVectorRef& next_action,
                   const ConstVectorRef& theta, bool terminal, double gamma) const;
  Vector td_targets(const TdBatch& batch, double gamma) const;
  double td_loss(const TdBatch& batch, double gamma) const;
  // Gradient of the TD loss w.r.t. the critic weights (targets frozen for semi).
  Vector td_loss_grad(const TdBatch& batch, double gamma, TdGradient mode = TdGradient::semi) const;
  double td_update(const TdBatch& batch, double gamma, TdGradient mode = TdGradient::semi);

  // grad_theta V(theta).
  Vector actor_grad_pssvf(const ConstVectorRef& theta) const;
  // Mean over the state columns of grad_theta V(s, theta).
  Vector actor_grad_psvf(const Matrix& states, const ConstVectorRef& theta) const;
  // Deterministic PAVF gradient at a = pi_theta(s), both terms kept separately.
  PavfActorGrad actor_grad_pavf(const Matrix& states, const PolicyParams& policy) const;
  // Mean of rho (Q grad log pi + grad_theta Q) with rho = pi_theta(u|s) / pi_b(u|s).
  Vector actor_grad_pavf_stochastic(const StochasticBatch& batch, const PolicyParams& policy) const;

  void save(const std::string& path) const;
  static PbvfCritic load(const std::string& path);

 private:
  void require_kind(CriticKind expected, const char* op) const;
  // d V / d input for every column, (input_dim x batch), each column scaled by `weights`.
  Matrix input_grad(const Matrix& inputs, const Vector& weights, Vector* values = nullptr) const;

  CriticKind kind_ = CriticKind::pssvf;
  int state_dim_ = 0;
  int action_dim_ = 0;
  int theta_dim_ = 0;
  CriticConfig config_;
  MlpNet net_;
  AdamState adam_;
};

}  // namespace pbvf
