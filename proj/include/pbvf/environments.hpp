#pragma once

#include <limits>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "pbvf/numerics.hpp"

namespace pbvf {

enum class ActionKind { continuous, discrete };

struct ActionSpace {
  ActionKind kind = ActionKind::continuous;
  // Continuous: number of action components. Discrete: 1 (the index).
  int dim = 1;
  // Discrete: number of actions.
  int n = 0;
  // Continuous bounds; `bounded` is false for the unsquashed LQR action.
  double low = -1.0;
  double high = 1.0;
  bool bounded = true;
};

struct StepResult {
  Vector state;
  double reward = 0.0;
  // Reached a terminal state of the MDP.
  bool terminated = false;
  // Hit the episode step limit without terminating.
  bool truncated = false;

  bool done() const { return terminated || truncated; }
};

// Episodic environment. Discrete actions are passed as a one-element vector
// holding the action index.
class Env {
 public:
  virtual ~Env() = default;

  virtual std::string_view name() const = 0;
  virtual int state_dim() const = 0;
  virtual ActionSpace action_space() const = 0;
  // Declared observation bounds; emitted states always lie inside them.
  virtual Vector observation_low() const = 0;
  virtual Vector observation_high() const = 0;
  virtual Vector observation() const = 0;

  int max_episode_steps() const { return max_episode_steps_; }
  int elapsed_steps() const { return elapsed_; }
  bool done() const { return done_; }

  Vector reset();
  StepResult step(const Vector& action);

 protected:
  Env(int max_episode_steps, std::uint64_t seed) : max_episode_steps_(max_episode_steps), rng_(seed) {}

  virtual void reset_state(SeededRng& rng) = 0;
  // Advances the internal state; sets `terminated` and `reward`.
  virtual StepResult advance(const Vector& action) = 0;

  int discrete_index(const Vector& action, int n) const;
  SeededRng& rng() { return rng_; }

 private:
  int max_episode_steps_;
  SeededRng rng_;
  int elapsed_ = 0;
  bool done_ = true;
};

// 1-D linear quadratic regulator: s' = clip(s + a, -2, 2), r = -s^2 - a^2
// evaluated on the pre-transition state, start state 1, no terminal state.
class LqrEnv final : public Env {
 public:
  static constexpr double kStateBound = 2.0;
  static constexpr double kStartState = 1.0;
  static constexpr int kHorizon = 50;

  explicit LqrEnv(std::uint64_t seed = 0, int horizon = kHorizon) : Env(horizon, seed) {}

  std::string_view name() const override { return "lqr"; }
  int state_dim() const override { return 1; }
  ActionSpace action_space() const override {
    return {ActionKind::continuous, 1, 0, -std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity(), false};
  }
  Vector observation_low() const override { return Vector::Constant(1, -kStateBound); }
  Vector observation_high() const override { return Vector::Constant(1, kStateBound); }
  Vector observation() const override { return Vector::Constant(1, state_); }

  void set_state(double s) { state_ = s; }

 protected:
  void reset_state(SeededRng&) override { state_ = kStartState; }
  StepResult advance(const Vector& action) override;

 private:
  double state_ = kStartState;
};

// CartPole-v1 with the Gym constants and explicit Euler integration.
class CartPoleEnv final : public Env {
 public:
  static constexpr double kGravity = 9.8;
  static constexpr double kMassCart = 1.0;
  static constexpr double kMassPole = 0.1;
  static constexpr double kTotalMass = kMassPole + kMassCart;
  static constexpr double kHalfLength = 0.5;
  static constexpr double kPoleMassLength = kMassPole * kHalfLength;
  static constexpr double kForceMag = 10.0;
  static constexpr double kTau = 0.02;
  static constexpr double kXThreshold = 2.4;
  static const double kThetaThreshold;  // 12 degrees in radians

  explicit CartPoleEnv(std::uint64_t seed = 0) : Env(500, seed) {}

  std::string_view name() const override { return "cartpole"; }
  int state_dim() const override { return 4; }
  ActionSpace action_space() const override { return {ActionKind::discrete, 1, 2, 0.0, 1.0, true}; }
  Vector observation_low() const override;
  Vector observation_high() const override;
  Vector observation() const override { return state_; }

  void set_state(const Vector& s) { state_ = s; }

 protected:
  void reset_state(SeededRng& rng) override;
  StepResult advance(const Vector& action) override;

 private:
  Vector state_ = Vector::Zero(4);
};

// MountainCarContinuous-v0. As in Gym, the state is rounded to float32 after
// every step; arithmetic inside the step is double precision.
class MountainCarContinuousEnv final : public Env {
 public:
  static constexpr double kMinPosition = -1.2;
  static constexpr double kMaxPosition = 0.6;
  static constexpr double kMaxSpeed = 0.07;
  static constexpr double kGoalPosition = 0.45;
  static constexpr double kGoalVelocity = 0.0;
  static constexpr double kPower = 0.0015;

  explicit MountainCarContinuousEnv(std::uint64_t seed = 0) : Env(999, seed) {}

  std::string_view name() const override { return "mountaincar-cont"; }
  int state_dim() const override { return 2; }
  ActionSpace action_space() const override { return {ActionKind::continuous, 1, 0, -1.0, 1.0, true}; }
  Vector observation_low() const override { return Vector{{kMinPosition, -kMaxSpeed}}; }
  Vector observation_high() const override { return Vector{{kMaxPosition, kMaxSpeed}}; }
  Vector observation() const override { return Vector{{position_, velocity_}}; }

  // `float32_state` marks a state already rounded to float32 by a previous step.
  void set_state(double position, double velocity, bool float32_state = false) {
    position_ = position;
    velocity_ = velocity;
    float32_state_ = float32_state;
  }

 protected:
  void reset_state(SeededRng& rng) override;
  StepResult advance(const Vector& action) override;

 private:
  double position_ = -0.5;
  double velocity_ = 0.0;
  bool float32_state_ = false;
};

// Acrobot-v1 ("book" dynamics, RK4 over dt = 0.2). Observation is
// (cos t1, sin t1, cos t2, sin t2, dt1, dt2).
class AcrobotEnv final : public Env {
 public:
  static constexpr double kDt = 0.2;
  static constexpr double kLinkLength1 = 1.0;
  static constexpr double kLinkMass1 = 1.0;
  static constexpr double kLinkMass2 = 1.0;
  static constexpr double kLinkComPos1 = 0.5;
  static constexpr double kLinkComPos2 = 0.5;
  static constexpr double kLinkMoi = 1.0;
  static const double kMaxVel1;
  static const double kMaxVel2;

  explicit AcrobotEnv(std::uint64_t seed = 0) : Env(500, seed) {}

  std::string_view name() const override { return "acrobot"; }
  int state_dim() const override { return 6; }
  ActionSpace action_space() const override { return {ActionKind::discrete, 1, 3, 0.0, 2.0, true}; }
  Vector observation_low() const override;
  Vector observation_high() const override;
  Vector observation() const override;

  // Internal (theta1, theta2, dtheta1, dtheta2).
  const Vector& internal_state() const { return state_; }
  void set_internal_state(const Vector& s) { state_ = s; }

 protected:
  void reset_state(SeededRng& rng) override;
  StepResult advance(const Vector& action) override;

 private:
  Vector state_ = Vector::Zero(4);
};

// Finite MDP with explicit tensors, used by the exact oracles.
struct FiniteMdp {
  int n_states = 0;
  int n_actions = 0;
  // transition[a](s, s') = P(s' | s, a)
  std::vector<Matrix> transition;
  // reward(s, a)
  Matrix reward;
  Vector mu0;
  double gamma = 0.9;

  // Throws InputError unless every distribution sums to 1 within 1e-12.
  void validate() const;
};

// Row s is the action distribution in state s.
using TabularPolicy = Matrix;

// Two-state chain: action 0 stays with probability 0.9, action 1 switches with
// probability 0.9; reward 1 in state 1, start in state 0, gamma 0.9.
FiniteMdp make_chain2();
// Random MDP with strictly positive transition probabilities.
FiniteMdp make_random_mdp(int n_states, int n_actions, double gamma, SeededRng& rng);

// P_pi(s, s') = sum_a pi(a|s) P(s'|s,a)
Matrix induced_transition(const FiniteMdp& mdp, const TabularPolicy& policy);
// Limiting state distribution by power iteration (residual 1e-12, cap 1e6 iterations).
Vector exact_stationary_distribution(const FiniteMdp& mdp, const TabularPolicy& policy);
// Solves Q = R + gamma P Pi Q exactly.
Matrix exact_q_values(const FiniteMdp& mdp, const TabularPolicy& policy);
Vector exact_state_values(const FiniteMdp& mdp, const TabularPolicy& policy);

// Samples a FiniteMdp as an episodic environment with one-hot observations.
class FiniteMdpEnv final : public Env {
 public:
  FiniteMdpEnv(FiniteMdp mdp, std::uint64_t seed = 0, int horizon = 100);

  std::string_view name() const override { return "chain2"; }
  int state_dim() const override { return mdp_.n_states; }
  ActionSpace action_space() const override { return {ActionKind::discrete, 1, mdp_.n_actions, 0.0, 0.0, true}; }
  Vector observation_low() const override { return Vector::Zero(mdp_.n_states); }
  Vector observation_high() const override { return Vector::Ones(mdp_.n_states); }
  Vector observation() const override;

  const FiniteMdp& mdp() const { return mdp_; }
  int current_state() const { return state_; }

 protected:
  void reset_state(SeededRng& rng) override;
  StepResult advance(const Vector& action) override;

 private:
  int sample_from(const Eigen::Ref<const Eigen::RowVectorXd>& probs);

  FiniteMdp mdp_;
  int state_ = 0;
};

const std::vector<std::string>& env_names();
// Accepts "lqr", "cartpole", "mountaincar-cont", "acrobot", "chain2".
std::unique_ptr<Env> make_env(std::string_view name, std::uint64_t seed);

}  // namespace pbvf
