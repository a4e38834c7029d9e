#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "pbvf/policies.hpp"

namespace pbvf {

namespace {

// Keeps squashed actions strictly inside (-1, 1) even when tanh rounds to 1.
const double kSquashBound = std::nextafter(1.0, 0.0);

double squash(double x) { return std::clamp(std::tanh(x), -kSquashBound, kSquashBound); }

void check_state(const PolicyParams& policy, const ConstVectorRef& s) {
  if (s.size() != policy.spec.state_dim) {
    throw ShapeError("policy: state has " + std::to_string(s.size()) + " entries, expected " +
                     std::to_string(policy.spec.state_dim));
  }
  if (static_cast<std::size_t>(policy.theta.size()) != policy.spec.num_params()) {
    throw ShapeError("policy: theta has " + std::to_string(policy.theta.size()) + " entries, expected " +
                     std::to_string(policy.spec.num_params()));
  }
}

void require_continuous_deterministic(const PolicyParams& policy, const char* op) {
  if (policy.spec.head != PolicyHead::det_continuous && policy.spec.head != PolicyHead::unsquashed) {
    throw UnsupportedHeadError(std::string(op) + ": needs a deterministic continuous head, got " +
                               std::string(to_string(policy.spec.head)));
  }
}

void require_gaussian(const PolicyParams& policy, const char* op) {
  if (policy.spec.head != PolicyHead::gaussian) {
    throw UnsupportedHeadError(std::string(op) + ": needs the gaussian head, got " +
                               std::string(to_string(policy.spec.head)));
  }
}

Eigen::Map<const Vector> body_params(const PolicyParams& p) {
  return Eigen::Map<const Vector>(p.theta.data(), static_cast<Eigen::Index>(p.body_size()));
}

Eigen::Map<const Vector> omega(const PolicyParams& p) {
  return Eigen::Map<const Vector>(p.theta.data() + p.body_size(), p.spec.output_dim);
}

}  // namespace

std::string_view to_string(PolicyArch arch) {
  switch (arch) {
    case PolicyArch::linear:
      return "lin";
    case PolicyArch::mlp32:
      return "mlp32";
    case PolicyArch::mlp64x64:
      return "mlp64x64";
  }
  return "lin";
}

PolicyArch policy_arch_from_string(std::string_view name) {
  if (name == "lin" || name == "linear") return PolicyArch::linear;
  if (name == "mlp32") return PolicyArch::mlp32;
  if (name == "mlp64x64") return PolicyArch::mlp64x64;
  throw ConfigError("unknown policy architecture '" + std::string(name) + "' (expected lin, mlp32 or mlp64x64)");
}

std::string_view to_string(PolicyHead head) {
  switch (head) {
    case PolicyHead::det_continuous:
      return "det_continuous";
    case PolicyHead::det_discrete:
      return "det_discrete";
    case PolicyHead::gaussian:
      return "gaussian";
    case PolicyHead::unsquashed:
      return "unsquashed";
  }
  return "det_continuous";
}

std::vector<int> hidden_layers(PolicyArch arch) {
  switch (arch) {
    case PolicyArch::linear:
      return {};
    case PolicyArch::mlp32:
      return {32};
    case PolicyArch::mlp64x64:
      return {64, 64};
  }
  return {};
}

MlpShape PolicySpec::body_shape() const {
  std::vector<int> sizes{state_dim};
  for (int h : hidden_layers(arch)) sizes.push_back(h);
  sizes.push_back(output_dim);
  return MlpShape(std::move(sizes), Activation::tanh, Activation::identity);
}

std::size_t PolicySpec::num_params() const {
  return body_shape().num_params() + (head == PolicyHead::gaussian ? static_cast<std::size_t>(output_dim) : 0);
}

PolicySpec policy_spec_for(const Env& env, PolicyArch arch, bool stochastic) {
  const ActionSpace space = env.action_space();
  PolicySpec spec;
  spec.arch = arch;
  spec.state_dim = env.state_dim();
  if (space.kind == ActionKind::discrete) {
    if (stochastic) throw ConfigError(std::string(env.name()) + ": the gaussian head needs a continuous action space");
    spec.head = PolicyHead::det_discrete;
    spec.output_dim = space.n;
  } else {
    spec.output_dim = space.dim;
    if (stochastic) {
      spec.head = PolicyHead::gaussian;
      spec.squash = space.bounded;
    } else {
      spec.head = space.bounded ? PolicyHead::det_continuous : PolicyHead::unsquashed;
    }
  }
  return spec;
}

PolicyParams policy_init(const PolicySpec& spec, InitScheme scheme, SeededRng& rng) {
  PolicyParams p{spec, Vector::Zero(static_cast<Eigen::Index>(spec.num_params()))};
  if (scheme == InitScheme::zeros) return p;
  const MlpShape shape = spec.body_shape();
  const auto& sizes = shape.layer_sizes();
  for (int l = 0; l < shape.num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes[l]));
    const std::size_t begin = shape.weight_offset(l);
    const std::size_t end = shape.bias_offset(l) + static_cast<std::size_t>(sizes[l + 1]);
    for (std::size_t i = begin; i < end; ++i) p.theta[static_cast<Eigen::Index>(i)] = rng.uniform(-bound, bound);
  }
  // Omega stays 0 (unit std).
  return p;
}

Vector policy_body(const PolicyParams& policy, const ConstVectorRef& s) {
  check_state(policy, s);
  return mlp_forward(policy.spec.body_shape(), body_params(policy), s);
}

Vector act(const PolicyParams& policy, const ConstVectorRef& s) {
  Vector f = policy_body(policy, s);
  switch (policy.spec.head) {
    case PolicyHead::det_discrete: {
      Eigen::Index best = 0;
      for (Eigen::Index i = 1; i < f.size(); ++i) {
        if (f[i] > f[best]) best = i;
      }
      return Vector::Constant(1, static_cast<double>(best));
    }
    case PolicyHead::gaussian:
      if (!policy.spec.squash) return f;
      return f.unaryExpr([](double x) { return squash(x); });
    case PolicyHead::det_continuous:
      return f.unaryExpr([](double x) { return squash(x); });
    case PolicyHead::unsquashed:
      return f;
  }
  return f;
}

Matrix act_batch(const PolicyParams& policy, const Matrix& states) {
  require_continuous_deterministic(policy, "act_batch");
  if (states.rows() != policy.spec.state_dim) throw ShapeError("act_batch: state rows do not match the policy");
  Matrix f = mlp_forward_batch(policy.spec.body_shape(), body_params(policy), states);
  if (policy.spec.head == PolicyHead::det_continuous) f = f.unaryExpr([](double x) { return squash(x); });
  return f;
}

ActionSample act_sample(const PolicyParams& policy, const ConstVectorRef& s, SeededRng& rng) {
  if (policy.spec.head != PolicyHead::gaussian) {
    Vector a = act(policy, s);
    return {a, a, 0.0};
  }
  const Vector mean = policy_body(policy, s);
  const auto om = omega(policy);
  Vector u(mean.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = mean[i] + std::exp(om[i]) * rng.normal();
  ActionSample out;
  out.action = policy.spec.squash ? Vector(u.unaryExpr([](double x) { return squash(x); })) : u;
  out.log_prob = log_prob(policy, s, u);
  out.pre_squash = std::move(u);
  return out;
}

PerturbedPolicy perturb(const PolicyParams& policy, double sigma, SeededRng& rng) {
  if (!(sigma >= 0.0)) throw InputError("perturb: sigma must be >= 0");
  PerturbedPolicy out;
  out.sigma = sigma;
  out.noise = gaussian_sample(rng, static_cast<int>(policy.theta.size()), sigma);
  out.policy = policy;
  out.policy.theta += out.noise;
  return out;
}

Vector policy_vjp(const PolicyParams& policy, const ConstVectorRef& s, const ConstVectorRef& upstream) {
  require_continuous_deterministic(policy, "policy_vjp");
  check_state(policy, s);
  if (upstream.size() != policy.spec.output_dim) throw ShapeError("policy_vjp: upstream length must equal action_dim");
  return policy_vjp_batch(policy, Matrix(s), Matrix(upstream));
}

Vector policy_vjp_batch(const PolicyParams& policy, const Matrix& states, const Matrix& upstream) {
  require_continuous_deterministic(policy, "policy_vjp");
  if (states.rows() != policy.spec.state_dim || upstream.rows() != policy.spec.output_dim ||
      upstream.cols() != states.cols()) {
    throw ShapeError("policy_vjp: states / upstream dimensions do not match the policy");
  }
  const MlpShape shape = policy.spec.body_shape();
  const auto params = body_params(policy);
  MlpCache cache;
  const Matrix f = mlp_forward_batch(shape, params, states, &cache);
  Matrix up = upstream;
  if (policy.spec.head == PolicyHead::det_continuous) up.array() *= 1.0 - f.array().tanh().square();
  Vector grad = Vector::Zero(policy.theta.size());
  Vector body_grad = Vector::Zero(static_cast<Eigen::Index>(shape.num_params()));
  mlp_backward_batch(shape, params, cache, up, &body_grad, nullptr);
  grad.head(body_grad.size()) = body_grad;
  return grad;
}

double log_prob(const PolicyParams& policy, const ConstVectorRef& s, const ConstVectorRef& u) {
  require_gaussian(policy, "log_prob");
  if (u.size() != policy.spec.output_dim) throw ShapeError("log_prob: action length must equal action_dim");
  const Vector mean = policy_body(policy, s);
  const auto om = omega(policy);
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  double lp = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double z = u[i] - mean[i];
    lp += -om[i] - 0.5 * z * z * std::exp(-2.0 * om[i]) - half_log_2pi;
  }
  return lp;
}

LogProbGrad log_prob_grad(const PolicyParams& policy, const ConstVectorRef& s, const ConstVectorRef& u) {
  require_gaussian(policy, "log_prob_grad");
  check_state(policy, s);
  if (u.size() != policy.spec.output_dim) throw ShapeError("log_prob_grad: action length must equal action_dim");
  const MlpShape shape = policy.spec.body_shape();
  const auto params = body_params(policy);
  MlpCache cache;
  const Matrix mean = mlp_forward_batch(shape, params, Matrix(s), &cache);
  const auto om = omega(policy);
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  LogProbGrad out;
  out.grad = Vector::Zero(policy.theta.size());
  Matrix d_mean(u.size(), 1);
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double z = u[i] - mean(i, 0);
    const double inv_var = std::exp(-2.0 * om[i]);
    out.log_prob += -om[i] - 0.5 * z * z * inv_var - half_log_2pi;
    d_mean(i, 0) = z * inv_var;
    out.grad[static_cast<Eigen::Index>(policy.body_size()) + i] = -1.0 + z * z * inv_var;
  }
  Vector body_grad = Vector::Zero(static_cast<Eigen::Index>(shape.num_params()));
  mlp_backward_batch(shape, params, cache, d_mean, &body_grad, nullptr);
  out.grad.head(body_grad.size()) = body_grad;
  return out;
}

}  // namespace pbvf
