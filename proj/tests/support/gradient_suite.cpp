#include "gradient_suite.hpp"

#include <algorithm>
#include <cmath>

#include "pbvf/critics.hpp"
#include "pbvf/numerics.hpp"
#include "pbvf/policies.hpp"

namespace pbvf::testing {

namespace {

constexpr double kEps = 1e-5;

Vector random_vector(SeededRng& rng, Eigen::Index n, double scale = 1.0) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = scale * rng.normal();
  return v;
}

Matrix random_matrix(SeededRng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

Activation pick_activation(SeededRng& rng) {
  static const Activation all[] = {Activation::tanh, Activation::relu, Activation::identity};
  return all[rng.uniform_index(3)];
}

PolicyArch pick_arch(int i) {
  static const PolicyArch all[] = {PolicyArch::linear, PolicyArch::mlp32, PolicyArch::mlp64x64};
  return all[i % 3];
}

PolicyParams random_policy(PolicyArch arch, PolicyHead head, int state_dim, int action_dim, SeededRng& rng) {
  PolicySpec spec;
  spec.arch = arch;
  spec.head = head;
  spec.state_dim = state_dim;
  spec.output_dim = action_dim;
  PolicyParams p = policy_init(spec, InitScheme::reference_default, rng);
  if (head == PolicyHead::gaussian) {
    for (int k = 0; k < action_dim; ++k) p.theta[p.theta.size() - action_dim + k] = rng.uniform(-0.7, 0.3);
  }
  return p;
}

PbvfCritic random_critic(CriticKind kind, int state_dim, int action_dim, int theta_dim, SeededRng& rng, int i) {
  CriticConfig cfg;
  static const std::vector<int> shapes[] = {{32, 32}, {16}, {24, 12}, {64}};
  cfg.hidden = shapes[i % 4];
  cfg.activation = i % 2 == 0 ? Activation::relu : Activation::tanh;
  cfg.lr = 1e-3;
  return PbvfCritic(kind, state_dim, action_dim, theta_dim, cfg, rng);
}

double worst(double a, double b) { return std::isnan(b) ? b : std::max(a, b); }

constexpr double kKinkMargin = 1e-3;
constexpr double kTanhLimit = 3.0;

// Central differences need f smooth and well scaled within eps of every input column.
bool well_posed(const MlpShape& shape, const Vector& params, const Matrix& inputs) {
  const auto layers = unflatten(shape, params);
  Matrix h = inputs;
  for (int l = 0; l < shape.num_layers(); ++l) {
    Matrix z = (layers[l].weights * h).colwise() + layers[l].bias;
    const Activation a = shape.activation_of(l);
    if (a == Activation::relu && z.cwiseAbs().minCoeff() < kKinkMargin) return false;
    if (a == Activation::tanh && l + 1 == shape.num_layers() && z.cwiseAbs().maxCoeff() > kTanhLimit) return false;
    if (a == Activation::relu) z = z.cwiseMax(0.0);
    if (a == Activation::tanh) z = z.array().tanh().matrix();
    h = std::move(z);
  }
  return true;
}

Matrix critic_inputs(const PbvfCritic& c, const Matrix& states, const Matrix& actions, const Vector& theta) {
  return c.assemble_batch(states, actions, theta.replicate(1, states.cols()));
}

}  // namespace

GradientCheck check_mlp_backward(int instances) {
  GradientCheck out{"mlp_backward", 0, 0.0};
  SeededRng rng(101);
  for (int i = 0; out.instances < instances; ++i) {
    std::vector<int> sizes{1 + static_cast<int>(rng.uniform_index(6))};
    const int hidden = 1 + static_cast<int>(rng.uniform_index(3));
    for (int h = 0; h < hidden; ++h) sizes.push_back(1 + static_cast<int>(rng.uniform_index(16)));
    sizes.push_back(1 + static_cast<int>(rng.uniform_index(3)));
    const MlpShape shape(sizes, pick_activation(rng), pick_activation(rng));
    const Vector w = random_vector(rng, static_cast<Eigen::Index>(shape.num_params()), 0.6);
    const Vector x = random_vector(rng, shape.input_dim());
    const Vector u = random_vector(rng, shape.output_dim());
    if (!well_posed(shape, w, x)) {
      ++out.rejected;
      continue;
    }
    const MlpGradients g = mlp_backward(shape, w, x, u);
    const Vector fd_w = finite_diff([&](const Vector& p) { return u.dot(mlp_forward(shape, p, x)); }, w, kEps);
    const Vector fd_x = finite_diff([&](const Vector& xx) { return u.dot(mlp_forward(shape, w, xx)); }, x, kEps);
    out.worst_relative_error = worst(out.worst_relative_error, max_relative_error(g.weights, fd_w));
    out.worst_relative_error = worst(out.worst_relative_error, max_relative_error(g.input, fd_x));
    ++out.instances;
  }
  return out;
}

GradientCheck check_policy_vjp(int instances) {
  GradientCheck out{"policy_vjp", 0, 0.0};
  SeededRng rng(202);
  for (int i = 0; i < instances; ++i) {
    const int sd = 1 + static_cast<int>(rng.uniform_index(5));
    const int ad = 1 + static_cast<int>(rng.uniform_index(3));
    const PolicyHead head = i % 4 == 3 ? PolicyHead::unsquashed : PolicyHead::det_continuous;
    PolicyParams p = random_policy(pick_arch(i), head, sd, ad, rng);
    const Vector s = random_vector(rng, sd);
    const Vector u = random_vector(rng, ad);
    const Vector g = policy_vjp(p, s, u);
    const Vector fd = finite_diff(
        [&](const Vector& th) {
          PolicyParams q = p;
          q.theta = th;
          return u.dot(act(q, s));
        },
        p.theta, kEps);
    out.worst_relative_error = worst(out.worst_relative_error, max_relative_error(g, fd));
    ++out.instances;
  }
  return out;
}

GradientCheck check_log_prob_grad(int instances) {
  GradientCheck out{"log_prob_grad", 0, 0.0};
  SeededRng rng(303);
  for (int i = 0; i < instances; ++i) {
    const int sd = 1 + static_cast<int>(rng.uniform_index(5));
    const int ad = 1 + static_cast<int>(rng.uniform_index(3));
    PolicyParams p = random_policy(pick_arch(i), PolicyHead::gaussian, sd, ad, rng);
    const Vector s = random_vector(rng, sd);
    const Vector u = policy_body(p, s) + random_vector(rng, ad, 0.8);
    const LogProbGrad lg = log_prob_grad(p, s, u);
    const Vector fd = finite_diff(
        [&](const Vector& th) {
          PolicyParams q = p;
          q.theta = th;
          return log_prob(q, s, u);
        },
        p.theta, kEps);
    out.worst_relative_error = worst(out.worst_relative_error, max_relative_error(lg.grad, fd));
    ++out.instances;
  }
  return out;
}

GradientCheck check_actor_grad_psvf(int instances) {
  GradientCheck out{"actor_grad_psvf", 0, 0.0};
  SeededRng rng(404);
  for (int i = 0; out.instances < instances; ++i) {
    const int sd = 1 + static_cast<int>(rng.uniform_index(4));
    const PolicyParams p = random_policy(pick_arch(i % 2), PolicyHead::det_continuous, sd, 1, rng);
    const int td = static_cast<int>(p.theta.size());
    const PbvfCritic critic = random_critic(CriticKind::psvf, sd, 0, td, rng, i);
    const Matrix states = random_matrix(rng, sd, 8);
    if (!well_posed(critic.net().shape(), critic.net().params(), critic_inputs(critic, states, Matrix(0, 8), p.theta))) {
      ++out.rejected;
      continue;
    }
    const Vector g = critic.actor_grad_psvf(states, p.theta);
    const Vector fd = finite_diff(
        [&](const Vector& th) {
          double total = 0.0;
          for (Eigen::Index j = 0; j < states.cols(); ++j) total += critic.predict(states.col(j), Vector(), th);
          return total / static_cast<double>(states.cols());
        },
        p.theta, kEps);
    out.worst_relative_error = worst(out.worst_relative_error, max_relative_error(g, fd));
    ++out.instances;
  }
  return out;
}

GradientCheck check_actor_grad_pavf(int instances) {
  GradientCheck out{"actor_grad_pavf_exact", 0, 0.0};
  SeededRng rng(505);
  for (int i = 0; out.instances < instances; ++i) {
    const int sd = 1 + static_cast<int>(rng.uniform_index(4));
    const int ad = 1 + static_cast<int>(rng.uniform_index(2));
    const PolicyHead head = i % 5 == 4 ? PolicyHead::unsquashed : PolicyHead::det_continuous;
    const PolicyParams p = random_policy(pick_arch(i % 2), head, sd, ad, rng);
    const int td = static_cast<int>(p.theta.size());
    const PbvfCritic critic = random_critic(CriticKind::pavf, sd, ad, td, rng, i);
    const Matrix states = random_matrix(rng, sd, 8);
    if (!well_posed(critic.net().shape(), critic.net().params(),
                    critic_inputs(critic, states, act_batch(p, states), p.theta))) {
      ++out.rejected;
      continue;
    }
    const PavfActorGrad g = critic.actor_grad_pavf(states, p);
    const Vector fd = finite_diff(
        [&](const Vector& th) {
          PolicyParams q = p;
          q.theta = th;
          double total = 0.0;
          for (Eigen::Index j = 0; j < states.cols(); ++j) total += critic.predict(states.col(j), act(q, states.col(j)), th);
          return total / static_cast<double>(states.cols());
        },
        p.theta, kEps);
    out.worst_relative_error = worst(out.worst_relative_error, max_relative_error(g.exact, fd));
    ++out.instances;
  }
  return out;
}

GradientCheck check_actor_grad_pavf_stochastic(int instances) {
  GradientCheck out{"actor_grad_pavf_stochastic", 0, 0.0};
  SeededRng rng(606);
  for (int i = 0; out.instances < instances; ++i) {
    const int sd = 1 + static_cast<int>(rng.uniform_index(4));
    const int ad = 1 + static_cast<int>(rng.uniform_index(2));
    const PolicyParams p = random_policy(pick_arch(i % 2), PolicyHead::gaussian, sd, ad, rng);
    PolicyParams behavior = p;
    behavior.theta += random_vector(rng, p.theta.size(), 0.1);
    const int td = static_cast<int>(p.theta.size());
    const PbvfCritic critic = random_critic(CriticKind::pavf, sd, ad, td, rng, i);
    StochasticBatch batch;
    const int n = 8;
    batch.states = random_matrix(rng, sd, n);
    batch.actions.resize(ad, n);
    batch.behavior_log_probs.resize(n);
    for (int j = 0; j < n; ++j) {
      const ActionSample a = act_sample(behavior, batch.states.col(j), rng);
      batch.actions.col(j) = a.pre_squash;
      batch.behavior_log_probs[j] = a.log_prob;
    }
    if (!well_posed(critic.net().shape(), critic.net().params(),
                    critic_inputs(critic, batch.states, batch.actions, p.theta))) {
      ++out.rejected;
      continue;
    }
    const Vector g = critic.actor_grad_pavf_stochastic(batch, p);
    // d/dtheta of mean rho Q equals the IS-weighted two-term expression.
    const Vector fd = finite_diff(
        [&](const Vector& th) {
          PolicyParams q = p;
          q.theta = th;
          double total = 0.0;
          for (int j = 0; j < n; ++j) {
            const double rho = std::exp(log_prob(q, batch.states.col(j), batch.actions.col(j)) - batch.behavior_log_probs[j]);
            total += rho * critic.predict(batch.states.col(j), batch.actions.col(j), th);
          }
          return total / n;
        },
        p.theta, kEps);
    out.worst_relative_error = worst(out.worst_relative_error, max_relative_error(g, fd));
    ++out.instances;
  }
  return out;
}

std::vector<GradientCheck> run_gradient_suite(int instances) {
  return {check_mlp_backward(instances),   check_policy_vjp(instances),      check_log_prob_grad(instances),
          check_actor_grad_psvf(instances), check_actor_grad_pavf(instances), check_actor_grad_pavf_stochastic(instances)};
}

}  // namespace pbvf::testing
