#pragma once

#include <string>
#include <vector>

namespace pbvf::testing {

struct GradientCheck {
  std::string name;
  int instances = 0;
  double worst_relative_error = 0.0;
  // Draws skipped because central differences are ill-posed there.
  int rejected = 0;
};

// Randomized finite-difference checks (eps 1e-5, central differences). A draw
// with a relu pre-activation within 1e-3 of its kink, or a saturated tanh
// output, is redrawn.
GradientCheck check_mlp_backward(int instances);
GradientCheck check_policy_vjp(int instances);
GradientCheck check_log_prob_grad(int instances);
GradientCheck check_actor_grad_psvf(int instances);
GradientCheck check_actor_grad_pavf(int instances);
GradientCheck check_actor_grad_pavf_stochastic(int instances);

std::vector<GradientCheck> run_gradient_suite(int instances);

}  // namespace pbvf::testing
