#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "pbvf/critics.hpp"

namespace pbvf {

namespace {

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text, const std::string& context) {
  double x = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto res = std::from_chars(begin, end, x);
  if (res.ec != std::errc() || res.ptr != end) throw InputError(context + ": cannot parse number '" + text + "'");
  return x;
}

void check_part(const char* name, Eigen::Index got, int expected, CriticKind kind) {
  if (got != expected) {
    throw InputError("critic (" + std::string(to_string(kind)) + "): " + name + " has " + std::to_string(got) +
                     " entries, expected " + std::to_string(expected));
  }
}

}  // namespace

std::string_view to_string(CriticKind kind) {
  switch (kind) {
    case CriticKind::pssvf:
      return "pssvf";
    case CriticKind::psvf:
      return "psvf";
    case CriticKind::pavf:
      return "pavf";
  }
  return "pssvf";
}

CriticKind critic_kind_from_string(std::string_view name) {
  if (name == "pssvf") return CriticKind::pssvf;
  if (name == "psvf") return CriticKind::psvf;
  if (name == "pavf") return CriticKind::pavf;
  throw InputError("unknown critic kind '" + std::string(name) + "'");
}

PbvfCritic::PbvfCritic(CriticKind kind, int state_dim, int action_dim, int theta_dim, const CriticConfig& config,
                       SeededRng& rng)
    : kind_(kind),
      state_dim_(kind == CriticKind::pssvf ? 0 : state_dim),
      action_dim_(kind == CriticKind::pavf ? action_dim : 0),
      theta_dim_(theta_dim),
      config_(config) {
  if (theta_dim_ < 1) throw InputError("critic: theta_dim must be >= 1");
  if (kind_ != CriticKind::pssvf && state_dim_ < 1) throw InputError("critic: state_dim must be >= 1");
  if (kind_ == CriticKind::pavf && action_dim_ < 1) throw InputError("critic: action_dim must be >= 1");
  std::vector<int> sizes{input_dim()};
  for (int h : config_.hidden) sizes.push_back(h);
  sizes.push_back(1);
  MlpShape shape(std::move(sizes), config_.activation, Activation::identity);
  Vector params(static_cast<Eigen::Index>(shape.num_params()));
  const auto& ls = shape.layer_sizes();
  for (int l = 0; l < shape.num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(ls[l]));
    const std::size_t end = shape.bias_offset(l) + static_cast<std::size_t>(ls[l + 1]);
    for (std::size_t i = shape.weight_offset(l); i < end; ++i) {
      params[static_cast<Eigen::Index>(i)] = rng.uniform(-bound, bound);
    }
  }
  net_ = MlpNet(std::move(shape), std::move(params));
  adam_ = AdamState(net_.shape().num_params(), config_.lr);
}

void PbvfCritic::require_kind(CriticKind expected, const char* op) const {
  if (kind_ != expected) {
    throw InputError(std::string(op) + ": needs a " + std::string(to_string(expected)) + " critic, got " +
                     std::string(to_string(kind_)));
  }
}

Vector PbvfCritic::assemble(const ConstVectorRef& s, const ConstVectorRef& a, const ConstVectorRef& theta) const {
  check_part("state", s.size(), state_dim_, kind_);
  check_part("action", a.size(), action_dim_, kind_);
  check_part("theta", theta.size(), theta_dim_, kind_);
  Vector x(input_dim());
  x << s, a, theta;
  return x;
}

Matrix PbvfCritic::assemble_batch(const Matrix& states, const Matrix& actions, const Matrix& thetas) const {
  const Eigen::Index n = thetas.cols();
  check_part("state", states.rows(), state_dim_, kind_);
  check_part("action", actions.rows(), action_dim_, kind_);
  check_part("theta", thetas.rows(), theta_dim_, kind_);
  if ((state_dim_ > 0 && states.cols() != n) || (action_dim_ > 0 && actions.cols() != n)) {
    throw ShapeError("critic: batch parts have different sample counts");
  }
  Matrix x(input_dim(), n);
  if (state_dim_ > 0) x.topRows(state_dim_) = states;
  if (action_dim_ > 0) x.middleRows(state_dim_, action_dim_) = actions;
  x.bottomRows(theta_dim_) = thetas;
  return x;
}

double PbvfCritic::predict(const ConstVectorRef& s, const ConstVectorRef& a, const ConstVectorRef& theta) const {
  return net_.forward(assemble(s, a, theta))[0];
}

Vector PbvfCritic::predict_batch(const Matrix& inputs) const {
  return mlp_forward_batch(net_.shape(), net_.params(), inputs).row(0).transpose();
}

Matrix PbvfCritic::input_grad(const Matrix& inputs, const Vector& weights, Vector* values) const {
  MlpCache cache;
  const Matrix out = mlp_forward_batch(net_.shape(), net_.params(), inputs, &cache);
  if (values != nullptr) *values = out.row(0).transpose();
  Matrix grad_input;
  mlp_backward_batch(net_.shape(), net_.params(), cache, Matrix(weights.transpose()), nullptr, &grad_input);
  return grad_input;
}

double PbvfCritic::mc_loss(const Matrix& thetas, const Vector& returns) const {
  require_kind(CriticKind::pssvf, "mc_loss");
  if (returns.size() == 0) throw InputError("mc_update: empty batch");
  if (thetas.cols() != returns.size()) throw ShapeError("mc_update: one return per theta column");
  const Vector v = predict_batch(assemble_batch(Matrix(0, thetas.cols()), Matrix(0, thetas.cols()), thetas));
  return (returns - v).squaredNorm() / static_cast<double>(returns.size());
}

double PbvfCritic::mc_update(const Matrix& thetas, const Vector& returns) {
  require_kind(CriticKind::pssvf, "mc_update");
  if (returns.size() == 0) throw InputError("mc_update: empty batch");
  if (thetas.cols() != returns.size()) throw ShapeError("mc_update: one return per theta column");
  const Matrix inputs = assemble_batch(Matrix(0, thetas.cols()), Matrix(0, thetas.cols()), thetas);
  MlpCache cache;
  const Vector v = mlp_forward_batch(net_.shape(), net_.params(), inputs, &cache).row(0).transpose();
  const double n = static_cast<double>(returns.size());
  const Vector err = v - returns;
  const double loss = err.squaredNorm() / n;
  Vector grad = Vector::Zero(net_.params().size());
  mlp_backward_batch(net_.shape(), net_.params(), cache, Matrix((2.0 / n) * err.transpose()), &grad, nullptr);
  adam_step(adam_, net_.params(), grad);
  return loss;
}

double PbvfCritic::td_target(double r, const ConstVectorRef& next_state, const ConstVectorRef& next_action,
                             const ConstVectorRef& theta, bool terminal, double gamma) const {
  if (kind_ == CriticKind::pssvf) throw InputError("td_target: pssvf critics are trained by Monte Carlo");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InputError("td_target: gamma must lie in [0, 1)");
  if (terminal) return r;
  if (kind_ != CriticKind::pavf) return r + gamma * predict(next_state, Vector(), theta);
  return r + gamma * predict(next_state, next_action, theta);
}

Vector PbvfCritic::td_targets(const TdBatch& batch, double gamma) const {
  if (kind_ == CriticKind::pssvf) throw InputError("td_target: pssvf critics are trained by Monte Carlo");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InputError("td_target: gamma must lie in [0, 1)");
  if (batch.size() == 0) throw InputError("td_update: empty batch");
  const Eigen::Index n = batch.size();
  const Matrix next_actions = kind_ == CriticKind::pavf ? batch.next_actions : Matrix(0, n);
  const Vector bootstrap = predict_batch(assemble_batch(batch.next_states, next_actions, batch.thetas));
  Vector targets(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    targets[j] = batch.terminal[j] != 0.0 ? batch.rewards[j] : batch.rewards[j] + gamma * bootstrap[j];
  }
  return targets;
}

double PbvfCritic::td_loss(const TdBatch& batch, double gamma) const {
  const Vector targets = td_targets(batch, gamma);
  const Matrix actions = kind_ == CriticKind::pavf ? batch.actions : Matrix(0, batch.size());
  const Vector v = predict_batch(assemble_batch(batch.states, actions, batch.thetas));
  return (v - targets).squaredNorm() / static_cast<double>(batch.size());
}

Vector PbvfCritic::td_loss_grad(const TdBatch& batch, double gamma, TdGradient mode) const {
  // The target snapshot is taken once, before any gradient work.
  const Vector targets = td_targets(batch, gamma);
  const Eigen::Index n = batch.size();
  const Matrix actions = kind_ == CriticKind::pavf ? batch.actions : Matrix(0, n);
  MlpCache cache;
  const Vector v =
      mlp_forward_batch(net_.shape(), net_.params(), assemble_batch(batch.states, actions, batch.thetas), &cache)
          .row(0)
          .transpose();
  const Vector scaled = (2.0 / static_cast<double>(n)) * (v - targets);
  Vector grad = Vector::Zero(net_.params().size());
  mlp_backward_batch(net_.shape(), net_.params(), cache, Matrix(scaled.transpose()), &grad, nullptr);
  if (mode == TdGradient::residual) {
    const Matrix next_actions = kind_ == CriticKind::pavf ? batch.next_actions : Matrix(0, n);
    MlpCache next_cache;
    mlp_forward_batch(net_.shape(), net_.params(), assemble_batch(batch.next_states, next_actions, batch.thetas),
                      &next_cache);
    Matrix up(1, n);
    for (Eigen::Index j = 0; j < n; ++j) up(0, j) = batch.terminal[j] != 0.0 ? 0.0 : -gamma * scaled[j];
    mlp_backward_batch(net_.shape(), net_.params(), next_cache, up, &grad, nullptr);
  }
  return grad;
}

double PbvfCritic::td_update(const TdBatch& batch, double gamma, TdGradient mode) {
  const double loss = td_loss(batch, gamma);
  const Vector grad = td_loss_grad(batch, gamma, mode);
  adam_step(adam_, net_.params(), grad);
  return loss;
}

Vector PbvfCritic::actor_grad_pssvf(const ConstVectorRef& theta) const {
  require_kind(CriticKind::pssvf, "actor_grad_pssvf");
  const Vector x = assemble(Vector(), Vector(), theta);
  return net_.backward(x, Vector::Ones(1)).input;
}

Vector PbvfCritic::actor_grad_psvf(const Matrix& states, const ConstVectorRef& theta) const {
  require_kind(CriticKind::psvf, "actor_grad_psvf");
  const Eigen::Index n = states.cols();
  if (n == 0) throw InputError("actor_grad_psvf: empty state batch");
  check_part("theta", theta.size(), theta_dim_, kind_);
  const Matrix inputs = assemble_batch(states, Matrix(0, n), theta.replicate(1, n));
  const Matrix g = input_grad(inputs, Vector::Constant(n, 1.0 / static_cast<double>(n)));
  return g.bottomRows(theta_dim_).rowwise().sum();
}

PavfActorGrad PbvfCritic::actor_grad_pavf(const Matrix& states, const PolicyParams& policy) const {
  require_kind(CriticKind::pavf, "actor_grad_pavf");
  const Eigen::Index n = states.cols();
  if (n == 0) throw InputError("actor_grad_pavf: empty state batch");
  check_part("theta", policy.theta.size(), theta_dim_, kind_);
  const Matrix actions = act_batch(policy, states);
  const Matrix inputs = assemble_batch(states, actions, policy.theta.replicate(1, n));
  const Matrix g = input_grad(inputs, Vector::Constant(n, 1.0 / static_cast<double>(n)));
  PavfActorGrad out;
  out.action_path = policy_vjp_batch(policy, states, g.middleRows(state_dim_, action_dim_));
  out.direct_path = g.bottomRows(theta_dim_).rowwise().sum();
  out.exact = out.action_path + out.direct_path;
  return out;
}

Vector PbvfCritic::actor_grad_pavf_stochastic(const StochasticBatch& batch, const PolicyParams& policy) const {
  require_kind(CriticKind::pavf, "actor_grad_pavf_stochastic");
  if (policy.spec.head != PolicyHead::gaussian) {
    throw UnsupportedHeadError("actor_grad_pavf_stochastic: needs the gaussian head");
  }
  const Eigen::Index n = batch.states.cols();
  if (n == 0) throw InputError("actor_grad_pavf_stochastic: empty batch");
  if (batch.behavior_log_probs.size() != n || batch.actions.cols() != n) {
    throw ShapeError("actor_grad_pavf_stochastic: batch parts have different sample counts");
  }
  check_part("theta", policy.theta.size(), theta_dim_, kind_);
  const Matrix inputs = assemble_batch(batch.states, batch.actions, policy.theta.replicate(1, n));
  Vector q;
  const Matrix g = input_grad(inputs, Vector::Ones(n), &q);
  Vector grad = Vector::Zero(theta_dim_);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double lp_b = batch.behavior_log_probs[j];
    if (!std::isfinite(lp_b)) {
      throw NumericError("actor_grad_pavf_stochastic: behavioral density is zero at sample " + std::to_string(j));
    }
    const LogProbGrad lp = log_prob_grad(policy, batch.states.col(j), batch.actions.col(j));
    const double rho = std::exp(lp.log_prob - lp_b);
    if (!std::isfinite(rho)) throw NumericError("actor_grad_pavf_stochastic: importance ratio overflowed");
    grad += rho * (q[j] * lp.grad + g.col(j).tail(theta_dim_));
  }
  return grad / static_cast<double>(n);
}

void PbvfCritic::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw InputError("critic: cannot open '" + path + "' for writing");
  out << "pbvf-critic v1\n";
  out << "kind " << to_string(kind_) << "\n";
  out << "dims " << state_dim_ << " " << action_dim_ << " " << theta_dim_ << "\n";
  out << "hidden";
  for (int h : config_.hidden) out << " " << h;
  out << "\n";
  out << "activation " << to_string(config_.activation) << "\n";
  out << "lr " << format_double(config_.lr) << "\n";
  out << "params " << net_.params().size() << "\n";
  for (Eigen::Index i = 0; i < net_.params().size(); ++i) out << format_double(net_.params()[i]) << "\n";
  if (!out) throw InputError("critic: write to '" + path + "' failed");
}

PbvfCritic PbvfCritic::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("critic: cannot open '" + path + "'");
  auto next_line = [&](const char* key) {
    std::string line;
    if (!std::getline(in, line)) throw InputError("critic checkpoint '" + path + "': missing '" + key + "' line");
    std::istringstream fields(line);
    std::string got;
    fields >> got;
    if (got != key) throw InputError("critic checkpoint '" + path + "': expected '" + key + "', got '" + got + "'");
    std::string rest;
    std::getline(fields, rest);
    return rest;
  };
  std::string header;
  std::getline(in, header);
  if (header != "pbvf-critic v1") throw InputError("critic checkpoint '" + path + "': unknown header");
  PbvfCritic c;
  std::string kind_name = next_line("kind");
  std::istringstream(kind_name) >> kind_name;
  c.kind_ = critic_kind_from_string(kind_name);
  std::istringstream(next_line("dims")) >> c.state_dim_ >> c.action_dim_ >> c.theta_dim_;
  c.config_.hidden.clear();
  {
    std::istringstream hs(next_line("hidden"));
    int h = 0;
    while (hs >> h) c.config_.hidden.push_back(h);
  }
  std::string act_name;
  std::istringstream(next_line("activation")) >> act_name;
  c.config_.activation = activation_from_string(act_name);
  std::string lr_text;
  std::istringstream(next_line("lr")) >> lr_text;
  c.config_.lr = parse_double(lr_text, "critic checkpoint lr");
  long count = 0;
  std::istringstream(next_line("params")) >> count;
  std::vector<int> sizes{c.input_dim()};
  for (int h : c.config_.hidden) sizes.push_back(h);
  sizes.push_back(1);
  MlpShape shape(std::move(sizes), c.config_.activation, Activation::identity);
  if (count != static_cast<long>(shape.num_params())) {
    throw InputError("critic checkpoint '" + path + "': parameter count does not match the layer sizes");
  }
  Vector params(count);
  std::string line;
  for (long i = 0; i < count; ++i) {
    if (!std::getline(in, line)) throw InputError("critic checkpoint '" + path + "': truncated parameter list");
    params[i] = parse_double(line, "critic checkpoint");
  }
  c.net_ = MlpNet(std::move(shape), std::move(params));
  c.adam_ = AdamState(c.net_.shape().num_params(), c.config_.lr);
  return c;
}

}  // namespace pbvf
