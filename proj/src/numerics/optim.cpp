#include <cmath>
#include <limits>
#include <string>

#include "pbvf/numerics.hpp"

namespace pbvf {

AdamState::AdamState(std::size_t num_params, double lr_, double beta1_, double beta2_, double epsilon_)
    : m(Vector::Zero(static_cast<Eigen::Index>(num_params))),
      v(Vector::Zero(static_cast<Eigen::Index>(num_params))),
      lr(lr_),
      beta1(beta1_),
      beta2(beta2_),
      epsilon(epsilon_) {}

void adam_step(AdamState& state, Eigen::Ref<Vector> params, const ConstVectorRef& grads) {
  if (params.size() != grads.size() || params.size() != state.m.size() || params.size() != state.v.size()) {
    throw ShapeError("adam_step: params (" + std::to_string(params.size()) + "), grads (" +
                     std::to_string(grads.size()) + ") and moments (" + std::to_string(state.m.size()) +
                     ") must have equal lengths");
  }
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads.cwiseProduct(grads);
  const double m_correction = 1.0 - std::pow(state.beta1, t);
  const double v_correction = 1.0 - std::pow(state.beta2, t);
  params.array() -= state.lr * (state.m.array() / m_correction) /
                    ((state.v.array() / v_correction).sqrt() + state.epsilon);
}

Vector finite_diff(const std::function<double(const Vector&)>& f, const Vector& x, double eps) {
  if (!(eps > 0.0)) throw InputError("finite_diff: eps must be positive");
  Vector grad(x.size());
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + eps;
    const double up = f(probe);
    probe[i] = x[i] - eps;
    const double down = f(probe);
    probe[i] = x[i];
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("finite_diff: non-finite function value at coordinate " + std::to_string(i));
    }
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

double max_relative_error(const ConstVectorRef& a, const ConstVectorRef& b) {
  if (a.size() != b.size()) throw ShapeError("max_relative_error: length mismatch");
  if (a.size() == 0) return 0.0;
  const double scale = std::max(a.lpNorm<Eigen::Infinity>(), b.lpNorm<Eigen::Infinity>());
  if (scale == 0.0) return 0.0;
  return (a - b).lpNorm<Eigen::Infinity>() / scale;
}

}  // namespace pbvf
