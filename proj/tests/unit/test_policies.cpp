#include <cmath>
#include <cstring>

#include "doctest.h"
#include "gradient_suite.hpp"
#include "pbvf/errors.hpp"
#include "pbvf/policies.hpp"

using namespace pbvf;

namespace {

PolicySpec make_spec(PolicyArch arch, PolicyHead head, int sd, int od) {
  PolicySpec s;
  s.arch = arch;
  s.head = head;
  s.state_dim = sd;
  s.output_dim = od;
  return s;
}

}  // namespace

TEST_SUITE("policies") {
  TEST_CASE("parameter counts") {
    CHECK(make_spec(PolicyArch::linear, PolicyHead::det_continuous, 2, 1).num_params() == 3);
    CHECK(make_spec(PolicyArch::mlp32, PolicyHead::det_discrete, 4, 2).num_params() == 4 * 32 + 32 + 32 * 2 + 2);
    CHECK(make_spec(PolicyArch::mlp64x64, PolicyHead::det_continuous, 2, 1).num_params() ==
          2 * 64 + 64 + 64 * 64 + 64 + 64 + 1);
    // Omega appended per action component
    CHECK(make_spec(PolicyArch::linear, PolicyHead::gaussian, 3, 2).num_params() == 3 * 2 + 2 + 2);
  }

  TEST_CASE("zeros init has the documented length") {
    SeededRng rng(1);
    for (PolicyArch arch : {PolicyArch::linear, PolicyArch::mlp32, PolicyArch::mlp64x64}) {
      const PolicySpec spec = make_spec(arch, PolicyHead::gaussian, 6, 1);
      const PolicyParams p = policy_init(spec, InitScheme::zeros, rng);
      CHECK(p.theta.size() == static_cast<Eigen::Index>(spec.num_params()));
      CHECK(p.theta.isZero(0.0));
    }
  }

  TEST_CASE("reference init bounds, Omega at zero, reproducible") {
    SeededRng rng(2), rng2(2);
    const PolicySpec spec = make_spec(PolicyArch::linear, PolicyHead::det_continuous, 2, 1);
    const PolicyParams p = policy_init(spec, InitScheme::reference_default, rng);
    CHECK(p.theta.cwiseAbs().maxCoeff() < 1.0 / std::sqrt(2.0));
    CHECK(p.theta == policy_init(spec, InitScheme::reference_default, rng2).theta);
    const PolicySpec g = make_spec(PolicyArch::mlp32, PolicyHead::gaussian, 3, 2);
    const PolicyParams pg = policy_init(g, InitScheme::reference_default, rng);
    CHECK(pg.theta.tail(2).isZero(0.0));
    // hidden layer fan-in is 32 for the output layer
    const MlpShape shape = g.body_shape();
    const Vector out_w = pg.theta.segment(static_cast<Eigen::Index>(shape.weight_offset(1)), 32 * 2);
    CHECK(out_w.cwiseAbs().maxCoeff() < 1.0 / std::sqrt(32.0));
  }

  TEST_CASE("zero linear continuous policy acts 0") {
    SeededRng rng(0);
    const PolicyParams p = policy_init(make_spec(PolicyArch::linear, PolicyHead::det_continuous, 3, 1), InitScheme::zeros, rng);
    CHECK(act(p, Vector{{0.3, -2.0, 7.0}})[0] == 0.0);
  }

  TEST_CASE("zero logits pick action 0") {
    SeededRng rng(0);
    const PolicyParams p = policy_init(make_spec(PolicyArch::mlp32, PolicyHead::det_discrete, 4, 2), InitScheme::zeros, rng);
    CHECK(act(p, Vector{{1.0, 2.0, 3.0, 4.0}})[0] == 0.0);
  }

  TEST_CASE("continuous actions stay strictly inside (-1, 1)") {
    PolicyParams p{make_spec(PolicyArch::linear, PolicyHead::det_continuous, 1, 1), Vector{{1000.0, 0.0}}};
    const double a = act(p, Vector{{5.0}})[0];
    CHECK(a < 1.0);
    CHECK(a > 0.99);
    CHECK(act(p, Vector{{-5.0}})[0] > -1.0);
  }

  TEST_CASE("gaussian log-prob at u = 0.5 with mean 0 and Omega 0") {
    SeededRng rng(0);
    const PolicyParams p = policy_init(make_spec(PolicyArch::linear, PolicyHead::gaussian, 2, 1), InitScheme::zeros, rng);
    const double lp = log_prob(p, Vector{{0.4, -0.1}}, Vector{{0.5}});
    CHECK(lp == doctest::Approx(-0.5 * 0.25 - 0.5 * std::log(2 * M_PI)).epsilon(1e-14));
    CHECK(lp == doctest::Approx(-1.04394).epsilon(1e-5));
  }

  TEST_CASE("sampled actions are squashed and report their pre-squash log-prob") {
    SeededRng rng(5);
    PolicyParams p = policy_init(make_spec(PolicyArch::mlp32, PolicyHead::gaussian, 2, 1), InitScheme::reference_default, rng);
    const Vector s{{0.2, 0.1}};
    for (int i = 0; i < 20; ++i) {
      const ActionSample a = act_sample(p, s, rng);
      CHECK(a.action[0] == doctest::Approx(std::tanh(a.pre_squash[0])));
      CHECK(a.log_prob == doctest::Approx(log_prob(p, s, a.pre_squash)).epsilon(1e-14));
    }
    SeededRng r1(9), r2(9);
    CHECK(act_sample(p, s, r1).pre_squash == act_sample(p, s, r2).pre_squash);
  }

  TEST_CASE("perturb") {
    SeededRng rng(3);
    const PolicyParams base =
        policy_init(make_spec(PolicyArch::mlp32, PolicyHead::det_continuous, 2, 1), InitScheme::reference_default, rng);
    const Vector copy = base.theta;
    SUBCASE("sigma 0 is the identity") {
      const PerturbedPolicy pp = perturb(base, 0.0, rng);
      CHECK(pp.policy.theta == base.theta);
    }
    SUBCASE("recorded noise, untouched base, same seed same draw") {
      SeededRng a(10), b(10);
      const PerturbedPolicy pa = perturb(base, 0.5, a);
      const PerturbedPolicy pb = perturb(base, 0.5, b);
      CHECK(pa.policy.theta == pb.policy.theta);
      CHECK(pa.policy.theta == base.theta + pa.noise);
      CHECK(std::memcmp(base.theta.data(), copy.data(), sizeof(double) * copy.size()) == 0);
    }
    SUBCASE("expected squared norm is sigma^2 dim") {
      const double sigma = 0.3;
      const int n = 100000;
      PolicyParams small{make_spec(PolicyArch::linear, PolicyHead::det_continuous, 4, 1), Vector::Zero(5)};
      double sum = 0.0;
      for (int i = 0; i < n; ++i) sum += perturb(small, sigma, rng).noise.squaredNorm();
      CHECK(std::abs(sum / n - sigma * sigma * 5) < 0.02 * sigma * sigma * 5);
    }
  }

  TEST_CASE("policy_vjp") {
    SeededRng rng(6);
    PolicyParams lin{make_spec(PolicyArch::linear, PolicyHead::unsquashed, 1, 1), Vector{{0.7, -0.2}}};
    SUBCASE("zero upstream") { CHECK(policy_vjp(lin, Vector{{1.5}}, Vector::Zero(1)).isZero(0.0)); }
    SUBCASE("unsquashed affine policy") {
      const Vector g = policy_vjp(lin, Vector{{1.5}}, Vector{{2.0}});
      CHECK(g[0] == 3.0);
      CHECK(g[1] == 2.0);
    }
    SUBCASE("mlp64x64 squashed matches central differences") {
      PolicyParams p =
          policy_init(make_spec(PolicyArch::mlp64x64, PolicyHead::det_continuous, 3, 2), InitScheme::reference_default, rng);
      const Vector s{{0.4, -1.0, 0.3}};
      const Vector u{{0.5, -1.5}};
      const Vector fd = finite_diff(
          [&](const Vector& th) {
            PolicyParams q = p;
            q.theta = th;
            return u.dot(act(q, s));
          },
          p.theta, 1e-5);
      CHECK(max_relative_error(policy_vjp(p, s, u), fd) < 1e-6);
    }
    SUBCASE("discrete head is unsupported") {
      PolicyParams d = policy_init(make_spec(PolicyArch::linear, PolicyHead::det_discrete, 4, 2), InitScheme::zeros, rng);
      CHECK_THROWS_AS(policy_vjp(d, Vector::Zero(4), Vector::Zero(1)), UnsupportedHeadError);
    }
  }

  TEST_CASE("randomized policy gradient suites") {
    const auto vjp = testing::check_policy_vjp(50);
    const auto lp = testing::check_log_prob_grad(50);
    CHECK(vjp.worst_relative_error < 1e-6);
    CHECK(lp.worst_relative_error < 1e-6);
  }

  TEST_CASE("log_prob_grad at the mean") {
    SeededRng rng(7);
    PolicyParams p =
        policy_init(make_spec(PolicyArch::mlp32, PolicyHead::gaussian, 2, 2), InitScheme::reference_default, rng);
    const Vector s{{0.1, 0.9}};
    const LogProbGrad g = log_prob_grad(p, s, policy_body(p, s));
    const Eigen::Index body = static_cast<Eigen::Index>(p.body_size());
    CHECK(g.grad.head(body).cwiseAbs().maxCoeff() == 0.0);
    CHECK(g.grad[body] == -1.0);
    CHECK(g.grad[body + 1] == -1.0);
  }

  TEST_CASE("log_prob quadratic term scales with the squared offset") {
    SeededRng rng(8);
    PolicyParams p = policy_init(make_spec(PolicyArch::linear, PolicyHead::gaussian, 1, 1), InitScheme::reference_default, rng);
    const Vector s{{0.5}};
    const double mu = policy_body(p, s)[0];
    const double at_mean = log_prob(p, s, Vector{{mu}});
    const double d1 = at_mean - log_prob(p, s, Vector{{mu + 0.3}});
    const double d2 = at_mean - log_prob(p, s, Vector{{mu + 0.6}});
    CHECK(d2 == doctest::Approx(4.0 * d1).epsilon(1e-12));
  }

  TEST_CASE("log_prob_grad needs the gaussian head") {
    SeededRng rng(0);
    PolicyParams p = policy_init(make_spec(PolicyArch::linear, PolicyHead::det_continuous, 2, 1), InitScheme::zeros, rng);
    CHECK_THROWS_AS(log_prob_grad(p, Vector::Zero(2), Vector::Zero(1)), UnsupportedHeadError);
  }

  TEST_CASE("policy specs follow the environment") {
    LqrEnv lqr;
    CHECK(policy_spec_for(lqr, PolicyArch::linear, false).head == PolicyHead::unsquashed);
    CHECK_FALSE(policy_spec_for(lqr, PolicyArch::linear, true).squash);
    CartPoleEnv cp;
    CHECK(policy_spec_for(cp, PolicyArch::linear, false).head == PolicyHead::det_discrete);
    CHECK_THROWS_AS(policy_spec_for(cp, PolicyArch::linear, true), ConfigError);
    MountainCarContinuousEnv mc;
    CHECK(policy_spec_for(mc, PolicyArch::mlp32, true).head == PolicyHead::gaussian);
    CHECK(policy_arch_from_string("lin") == PolicyArch::linear);
    CHECK_THROWS_AS(policy_arch_from_string("mlp16"), ConfigError);
  }

  TEST_CASE("batched actions match per-state actions") {
    SeededRng rng(12);
    PolicyParams p =
        policy_init(make_spec(PolicyArch::mlp32, PolicyHead::det_continuous, 3, 2), InitScheme::reference_default, rng);
    Matrix states(3, 6);
    for (Eigen::Index i = 0; i < states.size(); ++i) states.data()[i] = rng.normal();
    const Matrix a = act_batch(p, states);
    for (Eigen::Index j = 0; j < 6; ++j) CHECK((a.col(j) - act(p, states.col(j))).norm() < 1e-15);
  }
}
