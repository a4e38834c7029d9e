#pragma once

#include <string>
#include <string_view>

#include "pbvf/environments.hpp"
#include "pbvf/numerics.hpp"

namespace pbvf {

enum class PolicyArch { linear, mlp32, mlp64x64 };

// det_continuous: a = tanh(f(s)). det_discrete: argmax of logits f(s).
// gaussian: u ~ N(f(s), exp(2 Omega)), a = tanh(u). unsquashed: a = f(s) (LQR).
enum class PolicyHead { det_continuous, det_discrete, gaussian, unsquashed };

enum class InitScheme { reference_default, zeros };

std::string_view to_string(PolicyArch arch);
// Accepts the CLI names "lin", "mlp32", "mlp64x64" (and "linear").
PolicyArch policy_arch_from_string(std::string_view name);
std::string_view to_string(PolicyHead head);
std::vector<int> hidden_layers(PolicyArch arch);

struct PolicySpec {
  PolicyArch arch = PolicyArch::linear;
  PolicyHead head = PolicyHead::det_continuous;
  int state_dim = 1;
  // Continuous heads: action components. Discrete head: number of actions.
  int output_dim = 1;
  // Gaussian head only: apply tanh to the sampled u (false for LQR).
  bool squash = true;

  // Body network; hidden layers are tanh, output is linear.
  MlpShape body_shape() const;
  std::size_t num_params() const;
  // Length of the action vector handed to the environment / critic.
  int action_dim() const { return head == PolicyHead::det_discrete ? 1 : output_dim; }

  friend bool operator==(const PolicySpec&, const PolicySpec&) = default;
};

// Picks the head matching the environment's action space.
PolicySpec policy_spec_for(const Env& env, PolicyArch arch, bool stochastic);

struct PolicyParams {
  PolicySpec spec;
  // Body parameters in MlpShape layout, then (gaussian only) Omega.
  Vector theta;

  std::size_t body_size() const { return spec.body_shape().num_params(); }
};

PolicyParams policy_init(const PolicySpec& spec, InitScheme scheme, SeededRng& rng);

// Body output f_theta(s): the mean for the gaussian head, logits for the discrete head.
Vector policy_body(const PolicyParams& policy, const ConstVectorRef& s);

// Deterministic action; the gaussian head returns tanh of its mean.
Vector act(const PolicyParams& policy, const ConstVectorRef& s);

struct ActionSample {
  Vector action;      // what the environment receives
  Vector pre_squash;  // u before tanh (gaussian), otherwise equal to action
  double log_prob = 0.0;
};

// Samples from the gaussian head; deterministic heads act deterministically
// with log_prob 0.
ActionSample act_sample(const PolicyParams& policy, const ConstVectorRef& s, SeededRng& rng);

struct PerturbedPolicy {
  PolicyParams policy;  // theta_tilde = base theta + noise
  Vector noise;
  double sigma = 0.0;
};

PerturbedPolicy perturb(const PolicyParams& policy, double sigma, SeededRng& rng);

// upstream^T d pi_theta(s) / d theta, including the tanh squash. Continuous
// deterministic heads only.
Vector policy_vjp(const PolicyParams& policy, const ConstVectorRef& s, const ConstVectorRef& upstream);
// Columns of `states` and `upstream` are samples; the result is summed.
Vector policy_vjp_batch(const PolicyParams& policy, const Matrix& states, const Matrix& upstream);
// pi_theta(s) for every column of `states`.
Matrix act_batch(const PolicyParams& policy, const Matrix& states);

double log_prob(const PolicyParams& policy, const ConstVectorRef& s, const ConstVectorRef& u);

struct LogProbGrad {
  double log_prob = 0.0;
  Vector grad;  // w.r.t. all of theta, Omega included
};

LogProbGrad log_prob_grad(const PolicyParams& policy, const ConstVectorRef& s, const ConstVectorRef& u);

}  // namespace pbvf
