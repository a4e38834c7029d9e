#include <cmath>
#include <string>

#include <Eigen/LU>

#include "pbvf/environments.hpp"

namespace pbvf {

namespace {

constexpr double kSumTolerance = 1e-12;

void check_distribution(const Eigen::Ref<const Eigen::RowVectorXd>& p, const std::string& what) {
  if ((p.array() < 0.0).any() || std::abs(p.sum() - 1.0) > kSumTolerance) {
    throw InputError("finite mdp: " + what + " is not a probability distribution");
  }
}

void check_policy(const FiniteMdp& mdp, const TabularPolicy& policy) {
  if (policy.rows() != mdp.n_states || policy.cols() != mdp.n_actions) {
    throw ShapeError("finite mdp: policy must be " + std::to_string(mdp.n_states) + " x " +
                     std::to_string(mdp.n_actions));
  }
  for (int s = 0; s < mdp.n_states; ++s) check_distribution(policy.row(s), "policy row " + std::to_string(s));
}

}  // namespace

void FiniteMdp::validate() const {
  if (n_states < 1 || n_actions < 1) throw InputError("finite mdp: needs at least one state and one action");
  if (static_cast<int>(transition.size()) != n_actions) throw ShapeError("finite mdp: one transition matrix per action");
  for (int a = 0; a < n_actions; ++a) {
    if (transition[a].rows() != n_states || transition[a].cols() != n_states) {
      throw ShapeError("finite mdp: transition matrix has the wrong shape");
    }
    for (int s = 0; s < n_states; ++s) {
      check_distribution(transition[a].row(s), "P(.|s=" + std::to_string(s) + ",a=" + std::to_string(a) + ")");
    }
  }
  if (reward.rows() != n_states || reward.cols() != n_actions) throw ShapeError("finite mdp: reward must be S x A");
  if (mu0.size() != n_states) throw ShapeError("finite mdp: mu0 must have one entry per state");
  check_distribution(mu0.transpose(), "mu0");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InputError("finite mdp: gamma must lie in [0, 1)");
}

FiniteMdp make_chain2() {
  FiniteMdp mdp;
  mdp.n_states = 2;
  mdp.n_actions = 2;
  Matrix stay(2, 2);
  stay << 0.9, 0.1, 0.1, 0.9;
  Matrix swap(2, 2);
  swap << 0.1, 0.9, 0.9, 0.1;
  mdp.transition = {stay, swap};
  mdp.reward = Matrix::Zero(2, 2);
  mdp.reward.row(1).setOnes();
  mdp.mu0 = Vector{{1.0, 0.0}};
  mdp.gamma = 0.9;
  return mdp;
}

FiniteMdp make_random_mdp(int n_states, int n_actions, double gamma, SeededRng& rng) {
  FiniteMdp mdp;
  mdp.n_states = n_states;
  mdp.n_actions = n_actions;
  mdp.gamma = gamma;
  for (int a = 0; a < n_actions; ++a) {
    Matrix p(n_states, n_states);
    for (int s = 0; s < n_states; ++s) {
      for (int t = 0; t < n_states; ++t) p(s, t) = 0.05 + rng.uniform();
      p.row(s) /= p.row(s).sum();
    }
    mdp.transition.push_back(std::move(p));
  }
  mdp.reward.resize(n_states, n_actions);
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) mdp.reward(s, a) = rng.uniform(-1.0, 1.0);
  }
  mdp.mu0.resize(n_states);
  for (int s = 0; s < n_states; ++s) mdp.mu0[s] = 0.05 + rng.uniform();
  mdp.mu0 /= mdp.mu0.sum();
  mdp.validate();
  return mdp;
}

Matrix induced_transition(const FiniteMdp& mdp, const TabularPolicy& policy) {
  check_policy(mdp, policy);
  Matrix p = Matrix::Zero(mdp.n_states, mdp.n_states);
  for (int a = 0; a < mdp.n_actions; ++a) p += policy.col(a).asDiagonal() * mdp.transition[a];
  return p;
}

Vector exact_stationary_distribution(const FiniteMdp& mdp, const TabularPolicy& policy) {
  const Matrix p = induced_transition(mdp, policy);
  Eigen::RowVectorXd d = Eigen::RowVectorXd::Constant(mdp.n_states, 1.0 / mdp.n_states);
  constexpr long kMaxIterations = 1000000;
  for (long it = 0; it < kMaxIterations; ++it) {
    Eigen::RowVectorXd next = d * p;
    next /= next.sum();
    const double residual = (next - d).lpNorm<1>();
    d = std::move(next);
    if (residual < 1e-12) return d.transpose();
  }
  throw NumericError("exact_stationary_distribution: power iteration did not converge in 1e6 iterations");
}

Vector exact_state_values(const FiniteMdp& mdp, const TabularPolicy& policy) {
  const Matrix p = induced_transition(mdp, policy);
  const Vector r_pi = policy.cwiseProduct(mdp.reward).rowwise().sum();
  const Matrix system = Matrix::Identity(mdp.n_states, mdp.n_states) - mdp.gamma * p;
  Eigen::FullPivLU<Matrix> lu(system);
  if (!lu.isInvertible()) throw NumericError("exact_state_values: singular Bellman system");
  return lu.solve(r_pi);
}

Matrix exact_q_values(const FiniteMdp& mdp, const TabularPolicy& policy) {
  const Vector v = exact_state_values(mdp, policy);
  Matrix q = mdp.reward;
  for (int a = 0; a < mdp.n_actions; ++a) q.col(a) += mdp.gamma * (mdp.transition[a] * v);
  return q;
}

FiniteMdpEnv::FiniteMdpEnv(FiniteMdp mdp, std::uint64_t seed, int horizon) : Env(horizon, seed), mdp_(std::move(mdp)) {
  mdp_.validate();
}

Vector FiniteMdpEnv::observation() const {
  Vector o = Vector::Zero(mdp_.n_states);
  o[state_] = 1.0;
  return o;
}

int FiniteMdpEnv::sample_from(const Eigen::Ref<const Eigen::RowVectorXd>& probs) {
  const double u = rng().uniform();
  double cumulative = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    cumulative += probs[i];
    if (u < cumulative) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

void FiniteMdpEnv::reset_state(SeededRng&) { state_ = sample_from(mdp_.mu0.transpose()); }

StepResult FiniteMdpEnv::advance(const Vector& action) {
  const int a = discrete_index(action, mdp_.n_actions);
  const double reward = mdp_.reward(state_, a);
  state_ = sample_from(mdp_.transition[a].row(state_));
  return {observation(), reward, false, false};
}

}  // namespace pbvf
