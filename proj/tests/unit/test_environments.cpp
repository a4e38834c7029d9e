#include <cmath>

#include "doctest.h"
#include "golden.hpp"
#include "pbvf/environments.hpp"
#include "pbvf/errors.hpp"

using namespace pbvf;

namespace {

constexpr double kGoldenTol = 1e-10;

Vector a1(double a) { return Vector::Constant(1, a); }

void check_close(const Vector& got, const Vector& want, double tol) {
  REQUIRE(got.size() == want.size());
  for (Eigen::Index i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - want[i]) <= tol);
}

// Two-state chain whose action probabilities come from pi; P(stay) differs per action.
FiniteMdp two_state(double stay0, double stay1) {
  FiniteMdp m;
  m.n_states = 2;
  m.n_actions = 2;
  Matrix p0(2, 2), p1(2, 2);
  p0 << stay0, 1 - stay0, 1 - stay0, stay0;
  p1 << stay1, 1 - stay1, 1 - stay1, stay1;
  m.transition = {p0, p1};
  m.reward = Matrix::Zero(2, 2);
  m.mu0 = Vector{{1.0, 0.0}};
  m.gamma = 0.9;
  return m;
}

}  // namespace

TEST_SUITE("environments") {
  TEST_CASE("lqr reset and transitions") {
    LqrEnv env;
    CHECK(env.reset()[0] == 1.0);
    StepResult r = env.step(a1(-0.5));
    CHECK(r.state[0] == 0.5);
    CHECK(r.reward == -1.25);
    CHECK_FALSE(r.done());
  }

  TEST_CASE("lqr clips the state") {
    LqrEnv env;
    env.reset();
    env.step(a1(0.8));  // s = 1.8
    const StepResult r = env.step(a1(1.0));
    CHECK(r.state[0] == 2.0);
    CHECK(r.reward == doctest::Approx(-1.8 * 1.8 - 1.0));
  }

  TEST_CASE("lqr zero policy returns -50 over the 50-step horizon") {
    LqrEnv env;
    env.reset();
    double total = 0.0;
    int steps = 0;
    while (!env.done()) {
      total += env.step(a1(0.0)).reward;
      ++steps;
    }
    CHECK(steps == 50);
    CHECK(total == -50.0);
  }

  TEST_CASE("lqr states stay in bounds and per-step reward matches -s^2 - a^2") {
    LqrEnv env;
    SeededRng rng(3);
    double s = env.reset()[0];
    while (!env.done()) {
      const double a = 4.0 * rng.normal();
      const StepResult r = env.step(a1(a));
      CHECK(r.reward == doctest::Approx(-s * s - a * a));
      CHECK(std::abs(r.state[0]) <= 2.0);
      s = r.state[0];
    }
  }

  TEST_CASE("step after done is a protocol error") {
    LqrEnv env(0, 1);
    env.reset();
    CHECK(env.step(a1(0.0)).truncated);
    CHECK_THROWS_AS(env.step(a1(0.0)), ProtocolError);
    CartPoleEnv cp;
    CHECK_THROWS_AS(cp.step(a1(0.0)), ProtocolError);  // never reset
  }

  TEST_CASE("discrete actions are validated") {
    CartPoleEnv env(1);
    env.reset();
    CHECK_THROWS_AS(env.step(a1(2.0)), InputError);
    CHECK_THROWS_AS(env.step(a1(-1.0)), InputError);
    CHECK_THROWS_AS(env.step(a1(0.5)), InputError);
    AcrobotEnv ac(1);
    ac.reset();
    CHECK_THROWS_AS(ac.step(a1(3.0)), InputError);
  }

  TEST_CASE("cartpole reset bounds and reproducible reset streams") {
    CartPoleEnv a(17), b(17), c(18);
    for (int i = 0; i < 50; ++i) {
      const Vector s = a.reset();
      CHECK(s.cwiseAbs().maxCoeff() <= 0.05);
      CHECK(s == b.reset());
    }
    CHECK(a.reset() != c.reset());
  }

  TEST_CASE("episodes end by the step limit at the latest") {
    for (const char* name : {"cartpole", "mountaincar-cont", "acrobot", "lqr"}) {
      auto env = make_env(name, 5);
      env->reset();
      int t = 0;
      const Vector lo = env->observation_low(), hi = env->observation_high();
      const ActionSpace sp = env->action_space();
      while (!env->done()) {
        const Vector a = sp.kind == ActionKind::discrete ? a1(t % sp.n) : a1(0.3);
        const StepResult r = env->step(a);
        CHECK(((r.state.array() >= lo.array()) && (r.state.array() <= hi.array())).all());
        ++t;
      }
      CHECK(t <= env->max_episode_steps());
    }
  }

  TEST_CASE("unknown env names are rejected") { CHECK_THROWS_AS(make_env("hopper", 0), ConfigError); }

  TEST_CASE("golden trace: cartpole") {
    const auto traces = testing::load_golden("cartpole.csv");
    REQUIRE(traces.size() == 3);
    for (const auto& tr : traces) {
      CartPoleEnv env(0);
      env.reset();
      env.set_state(tr.init);
      for (const auto& st : tr.steps) {
        const StepResult r = env.step(a1(st.action));
        check_close(r.state, st.state, kGoldenTol);
        CHECK(r.reward == st.reward);
        CHECK(r.terminated == st.terminated);
        CHECK(r.truncated == st.truncated);
      }
    }
    CHECK(traces[2].steps.back().terminated);
  }

  TEST_CASE("golden trace: mountaincar-cont") {
    const auto traces = testing::load_golden("mountaincar_cont.csv");
    REQUIRE(traces.size() == 3);
    for (const auto& tr : traces) {
      MountainCarContinuousEnv env(0);
      env.reset();
      env.set_state(tr.init[0], tr.init[1]);
      for (const auto& st : tr.steps) {
        // The reference receives float32 actions.
        const double a = static_cast<double>(static_cast<float>(st.action));
        const StepResult r = env.step(a1(a));
        check_close(r.state, st.state, kGoldenTol);
        CHECK(std::abs(r.reward - st.reward) <= kGoldenTol);
        CHECK(r.terminated == st.terminated);
      }
    }
    // The third trace reaches the goal and collects the bonus.
    CHECK(traces[2].steps.back().terminated);
    CHECK(traces[2].steps.back().reward > 99.0);
  }

  TEST_CASE("golden trace: acrobot") {
    const auto traces = testing::load_golden("acrobot.csv");
    REQUIRE(traces.size() == 3);
    for (const auto& tr : traces) {
      AcrobotEnv env(0);
      env.reset();
      env.set_internal_state(tr.init);
      for (const auto& st : tr.steps) {
        const StepResult r = env.step(a1(st.action));
        check_close(env.internal_state(), st.state, kGoldenTol);
        CHECK(r.reward == st.reward);
        CHECK(r.terminated == st.terminated);
      }
    }
  }

  TEST_CASE("finite mdp validation") {
    FiniteMdp m = make_chain2();
    CHECK_NOTHROW(m.validate());
    m.transition[0](0, 0) += 1e-9;
    CHECK_THROWS_AS(m.validate(), InputError);
  }

  TEST_CASE("stationary distribution of a symmetric chain under a uniform policy") {
    const FiniteMdp m = two_state(0.7, 0.3);
    const Vector d = exact_stationary_distribution(m, Matrix::Constant(2, 2, 0.5));
    CHECK(std::abs(d[0] - 0.5) < 1e-12);
    CHECK(std::abs(d[1] - 0.5) < 1e-12);
  }

  TEST_CASE("stationary distribution matches a long simulation") {
    // State 0 stays with 0.9, state 1 stays with 0.5: d = (5/6, 1/6).
    FiniteMdp m;
    m.n_states = 2;
    m.n_actions = 1;
    Matrix p(2, 2);
    p << 0.9, 0.1, 0.5, 0.5;
    m.transition = {p};
    m.reward = Matrix::Zero(2, 1);
    m.mu0 = Vector{{1.0, 0.0}};
    const Vector d = exact_stationary_distribution(m, Matrix::Ones(2, 1));
    CHECK(std::abs(d[0] - 5.0 / 6.0) < 1e-12);
    FiniteMdpEnv env(m, 99, 1000000);
    env.reset();
    long visits0 = 0;
    const long n = 1000000;
    for (long t = 0; t < n; ++t) {
      env.step(Vector::Zero(1));
      if (env.current_state() == 0) ++visits0;
    }
    CHECK(std::abs(static_cast<double>(visits0) / n - d[0]) < 1e-3);
  }

  TEST_CASE("stationary distributions of random mdps sum to one") {
    SeededRng rng(4);
    for (int i = 0; i < 20; ++i) {
      const FiniteMdp m = make_random_mdp(3, 2, 0.9, rng);
      Matrix pi(3, 2);
      for (int s = 0; s < 3; ++s) {
        const double p = rng.uniform(0.05, 0.95);
        pi(s, 0) = p;
        pi(s, 1) = 1 - p;
      }
      const Vector d = exact_stationary_distribution(m, pi);
      CHECK(std::abs(d.sum() - 1.0) < 1e-12);
      CHECK((d.array() >= 0).all());
      // d is a fixed point of the induced chain
      CHECK((induced_transition(m, pi).transpose() * d - d).lpNorm<Eigen::Infinity>() < 1e-11);
    }
  }

  TEST_CASE("exact q values") {
    SUBCASE("gamma = 0 gives the reward table") {
      SeededRng rng(1);
      FiniteMdp m = make_random_mdp(3, 2, 0.0, rng);
      const Matrix q = exact_q_values(m, Matrix::Constant(3, 2, 0.5));
      CHECK((q - m.reward).lpNorm<Eigen::Infinity>() < 1e-15);
    }
    SUBCASE("single absorbing state") {
      FiniteMdp m;
      m.n_states = 1;
      m.n_actions = 1;
      m.transition = {Matrix::Ones(1, 1)};
      m.reward = Matrix::Constant(1, 1, 2.0);
      m.mu0 = Vector::Ones(1);
      m.gamma = 0.9;
      CHECK(exact_q_values(m, Matrix::Ones(1, 1))(0, 0) == doctest::Approx(2.0 / 0.1).epsilon(1e-14));
    }
    SUBCASE("matches value iteration and satisfies the Bellman equation") {
      SeededRng rng(2);
      const FiniteMdp m = make_random_mdp(3, 2, 0.9, rng);
      const Matrix pi = (Matrix(3, 2) << 0.2, 0.8, 0.5, 0.5, 0.9, 0.1).finished();
      const Matrix q = exact_q_values(m, pi);
      Matrix qv = Matrix::Zero(3, 2);
      for (int it = 0; it < 2000; ++it) {
        Matrix next(3, 2);
        const Vector v = (pi.array() * qv.array()).rowwise().sum();
        for (int a = 0; a < 2; ++a) next.col(a) = m.reward.col(a) + m.gamma * m.transition[a] * v;
        const double change = (next - qv).lpNorm<Eigen::Infinity>();
        qv = next;
        if (change < 1e-13) break;
      }
      CHECK((q - qv).lpNorm<Eigen::Infinity>() < 1e-11);
      const Vector v = (pi.array() * q.array()).rowwise().sum();
      Matrix residual(3, 2);
      for (int a = 0; a < 2; ++a) residual.col(a) = q.col(a) - (m.reward.col(a) + m.gamma * m.transition[a] * v);
      CHECK(residual.lpNorm<Eigen::Infinity>() < 1e-10);
      CHECK((exact_state_values(m, pi) - v).lpNorm<Eigen::Infinity>() < 1e-12);
    }
  }

  TEST_CASE("chain2 environment") {
    auto env = make_env("chain2", 3);
    const Vector s = env->reset();
    CHECK(s == Vector{{1.0, 0.0}});
    CHECK(env->action_space().n == 2);
  }
}
