#include <Eigen/LU>

#include "pbvf/algorithms.hpp"

namespace pbvf {

namespace {

Matrix unflatten_logits(const Vector& flat, int rows, int cols) {
  Matrix m(rows, cols);
  for (int s = 0; s < rows; ++s) {
    for (int a = 0; a < cols; ++a) m(s, a) = flat[s * cols + a];
  }
  return m;
}

Vector flatten_logits(const Matrix& m) {
  Vector flat(m.size());
  for (int s = 0; s < m.rows(); ++s) {
    for (int a = 0; a < m.cols(); ++a) flat[s * m.cols() + a] = m(s, a);
  }
  return flat;
}

// (I - gamma P_pi)^-1
Matrix resolvent(const FiniteMdp& mdp, const TabularPolicy& pi) {
  const Matrix system = Matrix::Identity(mdp.n_states, mdp.n_states) - mdp.gamma * induced_transition(mdp, pi);
  return system.fullPivLu().inverse();
}

}  // namespace

TabularPolicy softmax_policy(const Matrix& logits) {
  TabularPolicy pi(logits.rows(), logits.cols());
  for (Eigen::Index s = 0; s < logits.rows(); ++s) {
    const double m = logits.row(s).maxCoeff();
    Eigen::RowVectorXd e = (logits.row(s).array() - m).exp();
    pi.row(s) = e / e.sum();
  }
  return pi;
}

double exact_objective(const FiniteMdp& mdp, const Matrix& logits) {
  return mdp.mu0.dot(exact_state_values(mdp, softmax_policy(logits)));
}

double exact_off_policy_objective(const FiniteMdp& mdp, const Matrix& logits, const Vector& d_inf) {
  return d_inf.dot(exact_state_values(mdp, softmax_policy(logits)));
}

Vector discounted_state_weighting(const FiniteMdp& mdp, const TabularPolicy& policy) {
  return resolvent(mdp, policy).transpose() * mdp.mu0;
}

OracleReport pg_theorem_oracle(const FiniteMdp& mdp, const Matrix& theta, const Matrix& b) {
  mdp.validate();
  if (mdp.n_states > 5 || mdp.n_actions > 3) {
    throw InputError("pg_theorem_oracle: exact enumeration is limited to 5 states and 3 actions");
  }
  if (theta.rows() != mdp.n_states || theta.cols() != mdp.n_actions || b.rows() != theta.rows() ||
      b.cols() != theta.cols()) {
    throw ShapeError("pg_theorem_oracle: logit tables must be S x A");
  }
  const int S = mdp.n_states;
  const int A = mdp.n_actions;
  const TabularPolicy pi = softmax_policy(theta);
  const Matrix q = exact_q_values(mdp, pi);
  const Vector v = exact_state_values(mdp, pi);
  const Matrix m = resolvent(mdp, pi);
  const Vector d = m.transpose() * mdp.mu0;
  const Vector d_inf = exact_stationary_distribution(mdp, softmax_policy(b));

  // psi(s, c) = sum_a d pi(a|s) / d theta[s][c] * Q(s, a) = pi(c|s) (Q(s, c) - V(s))
  Matrix psi(S, A);
  for (int s = 0; s < S; ++s) {
    for (int c = 0; c < A; ++c) psi(s, c) = pi(s, c) * (q(s, c) - v[s]);
  }
  // grad V(s') w.r.t. theta[s''][c] = M(s', s'') psi(s'', c)
  auto grad_v = [&](int s_prime) {
    Matrix g(S, A);
    for (int s2 = 0; s2 < S; ++s2) g.row(s2) = m(s_prime, s2) * psi.row(s2);
    return g;
  };

  OracleReport r;
  Matrix thm1(S, A), thm3 = Matrix::Zero(S, A), degris(S, A);
  for (int s = 0; s < S; ++s) {
    thm1.row(s) = d[s] * psi.row(s);
    degris.row(s) = d_inf[s] * psi.row(s);
  }
  // Exact off-policy gradient: E_{d_inf}[ sum_a grad pi Q + sum_a pi grad Q ] with
  // grad Q(s, a) = gamma sum_s' P(s'|s,a) grad V(s').
  for (int s = 0; s < S; ++s) {
    Matrix grad_q_term = Matrix::Zero(S, A);
    for (int a = 0; a < A; ++a) {
      Matrix grad_q = Matrix::Zero(S, A);
      for (int sp = 0; sp < S; ++sp) grad_q += mdp.gamma * mdp.transition[a](s, sp) * grad_v(sp);
      grad_q_term += pi(s, a) * grad_q;
    }
    Matrix local = Matrix::Zero(S, A);
    local.row(s) = psi.row(s);
    thm3 += d_inf[s] * (local + grad_q_term);
  }

  const Vector x0 = flatten_logits(theta);
  r.thm1_expression = flatten_logits(thm1);
  r.thm1_finite_diff =
      finite_diff([&](const Vector& x) { return exact_objective(mdp, unflatten_logits(x, S, A)); }, x0, 1e-5);
  r.thm3_expression = flatten_logits(thm3);
  r.thm3_finite_diff = finite_diff(
      [&](const Vector& x) { return exact_off_policy_objective(mdp, unflatten_logits(x, S, A), d_inf); }, x0, 1e-5);
  r.degris_expression = flatten_logits(degris);
  r.thm1_maxerr = (r.thm1_expression - r.thm1_finite_diff).lpNorm<Eigen::Infinity>();
  r.thm3_maxerr = (r.thm3_expression - r.thm3_finite_diff).lpNorm<Eigen::Infinity>();
  r.degris_bias = (r.degris_expression - r.thm3_expression).norm();
  r.j = mdp.mu0.dot(v);
  r.j_b = d_inf.dot(v);
  return r;
}

}  // namespace pbvf
