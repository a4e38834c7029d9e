#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pbvf/critics.hpp"
#include "pbvf/numerics.hpp"
#include "pbvf/policies.hpp"

namespace pbvf {

enum class Algo { pssvf, psvf, pavf, pavf_biased, pavf_stoch, ars, zero_shot, offline_psvf, pg_oracle };

std::string_view to_string(Algo algo);
Algo algo_from_string(std::string_view name);
const std::vector<std::string>& algo_names();

// Fully resolved experiment configuration. parse_config fills every field.
struct RunConfig {
  Algo algo = Algo::pssvf;
  std::string env = "lqr";
  PolicyArch arch = PolicyArch::linear;
  bool stochastic = false;
  std::uint64_t seed = 0;
  long total_env_steps = 100000;

  double lr_actor = 1e-3;
  double lr_critic = 1e-2;
  double sigma = 1.0;
  double gamma = 0.99;

  std::size_t buffer_capacity = 100000;
  int batch_size = 16;
  // Environment steps between update phases; 0 means "after every episode".
  int update_every = 0;
  int critic_updates = 10;
  int actor_updates = 10;
  // Size of the state batch fed to PSVF/PAVF actor gradients.
  int actor_batch_size = 128;

  std::vector<int> critic_hidden{512, 512};
  Activation critic_activation = Activation::relu;
  TdGradient td_gradient = TdGradient::semi;

  bool obs_normalization = true;
  int eval_count = 100;
  int eval_episodes = 10;

  InitScheme init = InitScheme::reference_default;
  // Overrides the initial theta when non-empty (LQR uses w = 3.2, b = -3.5).
  std::vector<double> init_theta;

  int ars_directions = 1;
  int ars_elite = 1;

  // zero-shot: the online algorithm whose critic is reused.
  Algo zs_base = Algo::pssvf;
  int zs_policies = 5;
  double zs_lr = 0.05;
  int zs_steps = 200;
  int zs_eval_every = 5;
  int zs_eval_episodes = 5;

  long offline_dataset = 100000;
  int offline_fragment = 200;
  double offline_sigma = 0.5;
  long offline_critic_updates = 20000;
  int offline_checkpoints = 5;
  int offline_holdout = 1024;

  int oracle_instances = 20;
  int oracle_states = 3;

  std::string out_dir = "out";
};

// Welford running mean / population variance with a 1e-8 std floor.
class RunningNormalizer {
 public:
  RunningNormalizer() = default;
  explicit RunningNormalizer(int dim);

  // Folds obs into the statistics, then normalizes it.
  Vector update_apply(const ConstVectorRef& obs);
  // Normalizes with the current (frozen) statistics.
  Vector apply(const ConstVectorRef& obs) const;
  Matrix apply_batch(const Matrix& obs) const;

  long count() const { return count_; }
  const Vector& mean() const { return mean_; }
  Vector variance() const;
  Vector stddev() const;
  int dim() const { return static_cast<int>(mean_.size()); }
  // Number of update_apply/apply/apply_batch calls.
  long calls() const { return calls_; }

 private:
  void check_dim(Eigen::Index n) const;

  long count_ = 0;
  Vector mean_;
  Vector m2_;
  mutable long calls_ = 0;
};

}  // namespace pbvf
