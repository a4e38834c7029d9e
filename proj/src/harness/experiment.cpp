#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <thread>

#include "pbvf/errors.hpp"
#include "pbvf/harness.hpp"

namespace pbvf {

namespace {

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double population_std(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const double m = mean_of(v);
  double sq = 0.0;
  for (double x : v) sq += (x - m) * (x - m);
  return std::sqrt(sq / static_cast<double>(v.size()));
}

std::string seed_suffix(const RunConfig& c) { return "_seed" + std::to_string(c.seed); }

std::string run_stem(const RunConfig& c) {
  return std::string(to_string(c.algo)) + "_" + c.env + "_" + std::string(to_string(c.arch)) +
         (c.stochastic ? "_stoch" : "");
}

// Learning curve of one seed; side artifacts go next to it in out_dir.
LearningCurve run_one(const RunConfig& c) {
  namespace fs = std::filesystem;
  const fs::path dir(c.out_dir);
  switch (c.algo) {
    case Algo::pg_oracle:
      throw ConfigError("pg-oracle has no learning curve; use the oracle command");
    case Algo::offline_psvf: {
      const OfflineReport report = offline_psvf_experiment(c);
      // One point per checkpoint: best zero-shot return after that many critic updates.
      LearningCurve curve;
      for (std::size_t i = 0; i < report.checkpoints.size(); ++i) {
        const OfflineCheckpoint& cp = report.checkpoints[i];
        curve.push_back({cp.critic_updates, cp.zero_shot.best_return, 0.0, c.seed});
        write_curve_csv((dir / (run_stem(c) + seed_suffix(c) + "_checkpoint" + std::to_string(i) +
                                "_zs0.csv")).string(),
                        cp.zero_shot.curves.front());
      }
      return curve;
    }
    case Algo::zero_shot: {
      RunConfig base = c;
      base.algo = c.zs_base;
      const RunResult trained = run_training(base);
      ZeroShotConfig zs;
      zs.env = c.env;
      zs.spec = trained.final_policy.spec;
      zs.n_policies = c.zs_policies;
      zs.lr = c.zs_lr;
      zs.steps = c.zs_steps;
      zs.eval_every = c.zs_eval_every;
      zs.eval_episodes = c.zs_eval_episodes;
      zs.seed = c.seed;
      const RunningNormalizer* norm = trained.normalized ? &trained.normalizer : nullptr;
      const Matrix states = norm ? norm->apply_batch(trained.state_sample) : trained.state_sample;
      const ZeroShotResult result = zero_shot_train(*trained.critic, zs, norm, states);
      for (std::size_t i = 0; i < result.curves.size(); ++i) {
        write_curve_csv((dir / (run_stem(c) + seed_suffix(c) + "_policy" + std::to_string(i) + ".csv")).string(),
                        result.curves[i]);
      }
      return trained.curve;
    }
    default: {
      const RunResult r = run_training(c);
      if (c.env == "lqr") write_trajectory_csv((dir / ("trajectory_" + run_stem(c) + seed_suffix(c) + ".csv")).string(),
                                               r.theta_trace);
      return r.curve;
    }
  }
}

}  // namespace

double avg_metric(const LearningCurve& curve) {
  if (curve.empty()) throw InputError("avg_metric: empty curve");
  double s = 0.0;
  for (const EvalPoint& p : curve) s += p.mean_return;
  return s / static_cast<double>(curve.size());
}

double final_metric(const LearningCurve& curve) {
  if (curve.empty()) throw InputError("final_metric: empty curve");
  const std::size_t n = curve.size();
  const std::size_t tail = std::max<std::size_t>(1, n / 5);
  double s = 0.0;
  for (std::size_t i = n - tail; i < n; ++i) s += curve[i].mean_return;
  return s / static_cast<double>(tail);
}

std::string curve_file_name(const RunConfig& config) { return "curve_" + run_stem(config) + seed_suffix(config) + ".csv"; }

ExperimentResult run_experiment(const RunConfig& config, const std::vector<std::uint64_t>& seeds, int jobs) {
  if (seeds.empty()) throw ConfigError("run_experiment: no seeds");
  std::filesystem::create_directories(config.out_dir);
  ExperimentResult result;
  result.seeds.resize(seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      SeedOutcome& o = result.seeds[i];
      RunConfig c = config;
      c.seed = seeds[i];
      o.seed = seeds[i];
      try {
        o.curve = run_one(c);
        o.curve_path = (std::filesystem::path(c.out_dir) / curve_file_name(c)).string();
        write_curve_csv(o.curve_path, o.curve);
        o.avg = avg_metric(o.curve);
        o.final = final_metric(o.curve);
        o.ok = true;
      } catch (const std::exception& e) {
        o.error = e.what();
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(seeds.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::vector<double> avgs, finals;
  for (const SeedOutcome& o : result.seeds) {
    if (!o.ok) continue;
    avgs.push_back(o.avg);
    finals.push_back(o.final);
  }
  SummaryRow& s = result.summary;
  s.algo = std::string(to_string(config.algo));
  s.env = config.env;
  s.arch = std::string(to_string(config.arch));
  s.seed_count = static_cast<int>(avgs.size());
  s.avg_metric_mean = mean_of(avgs);
  s.avg_metric_std = population_std(avgs);
  s.final_metric_mean = mean_of(finals);
  s.final_metric_std = population_std(finals);
  result.summary_path = (std::filesystem::path(config.out_dir) / ("summary_" + run_stem(config) + ".csv")).string();
  write_summary_csv(result.summary_path, {s});
  return result;
}

std::vector<LandscapeRow> landscape_dump(const std::string& env, const PbvfCritic* critic, int resolution, double lo,
                                         double hi, int horizon, double gamma) {
  if (env != "lqr") throw ConfigError("landscape_dump: only the lqr env has a 2-parameter policy");
  if (resolution < 2) throw ConfigError("landscape_dump: resolution must be at least 2");
  if (!(hi > lo)) throw ConfigError("landscape_dump: empty range");
  LqrEnv probe;
  const PolicySpec spec = policy_spec_for(probe, PolicyArch::linear, false);
  if (critic && critic->theta_dim() != spec.num_params()) throw ShapeError("landscape_dump: critic theta size mismatch");
  PolicyParams policy{spec, Vector::Zero(spec.num_params())};
  const Vector s0 = Vector::Constant(1, LqrEnv::kStartState);
  std::vector<LandscapeRow> rows;
  rows.reserve(static_cast<std::size_t>(resolution) * resolution);
  const double step = (hi - lo) / (resolution - 1);
  for (int i = 0; i < resolution; ++i) {
    for (int j = 0; j < resolution; ++j) {
      LandscapeRow r;
      r.theta_w = lo + i * step;
      r.theta_b = lo + j * step;
      policy.theta << r.theta_w, r.theta_b;
      r.true_j = rollout_return(env, policy, 0, gamma, horizon);
      if (critic) {
        const Vector none(0);
        switch (critic->kind()) {
          case CriticKind::pssvf:
            r.predicted_v = critic->predict(none, none, policy.theta);
            break;
          case CriticKind::psvf:
            r.predicted_v = critic->predict(s0, none, policy.theta);
            break;
          case CriticKind::pavf:
            r.predicted_v = critic->predict(s0, act(policy, s0), policy.theta);
            break;
        }
      }
      rows.push_back(r);
    }
  }
  return rows;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InputError("pearson: need two equally long samples");
  const double mx = mean_of(x), my = mean_of(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

RiccatiSolution lqr_riccati(double gamma) {
  // Fixed point of P = 1 + gamma P - gamma^2 P^2 / (1 + gamma P).
  double p = 1.0;
  for (int it = 0; it < 100000; ++it) {
    const double next = 1.0 + gamma * p - gamma * gamma * p * p / (1.0 + gamma * p);
    if (std::abs(next - p) < 1e-15) {
      p = next;
      break;
    }
    p = next;
  }
  return {p, gamma * p / (1.0 + gamma * p)};
}

std::vector<OracleRow> run_oracle(const RunConfig& config, std::vector<OracleReport>* reports) {
  std::vector<OracleRow> rows;
  for (int i = 0; i < config.oracle_instances; ++i) {
    SeededRng rng(derive_seed(config.seed, 10, static_cast<std::uint64_t>(i)));
    const FiniteMdp mdp = make_random_mdp(config.oracle_states, 2, config.gamma, rng);
    Matrix theta(mdp.n_states, mdp.n_actions), b(mdp.n_states, mdp.n_actions);
    for (Eigen::Index k = 0; k < theta.size(); ++k) theta.data()[k] = rng.normal();
    for (Eigen::Index k = 0; k < b.size(); ++k) b.data()[k] = rng.normal();
    OracleReport rep = pg_theorem_oracle(mdp, theta, b);
    rows.push_back({i, rep.thm1_maxerr, rep.thm3_maxerr, rep.degris_bias});
    if (reports) reports->push_back(std::move(rep));
  }
  return rows;
}

}  // namespace pbvf
