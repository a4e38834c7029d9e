#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "pbvf/errors.hpp"
#include "pbvf/harness.hpp"

namespace pbvf {

namespace {

constexpr std::array<std::pair<Algo, std::string_view>, 9> kAlgoNames{{
    {Algo::pssvf, "pssvf"},
    {Algo::psvf, "psvf"},
    {Algo::pavf, "pavf"},
    {Algo::pavf_biased, "pavf-biased"},
    {Algo::pavf_stoch, "pavf-stoch"},
    {Algo::ars, "ars"},
    {Algo::zero_shot, "zero-shot"},
    {Algo::offline_psvf, "offline-psvf"},
    {Algo::pg_oracle, "pg-oracle"},
}};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Accepts both spellings of a key: lr_actor and lr-actor.
std::string canonical_key(std::string key) {
  std::replace(key.begin(), key.end(), '-', '_');
  return key;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    return parse_number(v);
  } catch (const Error&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

long to_long(const std::string& key, const std::string& v) {
  long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return out;
}

int to_int(const std::string& key, const std::string& v) {
  const long x = to_long(key, v);
  if (x < INT32_MIN || x > INT32_MAX) throw ConfigError(key + ": out of range");
  return static_cast<int>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    t["algo"] = [](RunConfig& c, const auto&, const auto& v) { c.algo = algo_from_string(v); };
    t["env"] = [](RunConfig& c, const auto&, const auto& v) {
      const auto& names = env_names();
      if (std::find(names.begin(), names.end(), v) == names.end()) throw ConfigError("unknown env '" + v + "'");
      c.env = v;
    };
    t["arch"] = [](RunConfig& c, const auto&, const auto& v) { c.arch = policy_arch_from_string(v); };
    t["stochastic"] = [](RunConfig& c, const auto& k, const auto& v) { c.stochastic = to_bool(k, v); };
    t["seed"] = [](RunConfig& c, const auto& k, const auto& v) {
      const long s = to_long(k, v);
      if (s < 0) throw ConfigError("seed must be non-negative");
      c.seed = static_cast<std::uint64_t>(s);
    };
    t["steps"] = [](RunConfig& c, const auto& k, const auto& v) { c.total_env_steps = to_long(k, v); };
    t["lr_actor"] = [](RunConfig& c, const auto& k, const auto& v) { c.lr_actor = to_double(k, v); };
    t["lr_critic"] = [](RunConfig& c, const auto& k, const auto& v) { c.lr_critic = to_double(k, v); };
    t["sigma"] = [](RunConfig& c, const auto& k, const auto& v) { c.sigma = to_double(k, v); };
    t["gamma"] = [](RunConfig& c, const auto& k, const auto& v) { c.gamma = to_double(k, v); };
    t["buffer_capacity"] = [](RunConfig& c, const auto& k, const auto& v) {
      const long n = to_long(k, v);
      if (n < 1) throw ConfigError("buffer_capacity must be positive");
      c.buffer_capacity = static_cast<std::size_t>(n);
    };
    t["batch_size"] = [](RunConfig& c, const auto& k, const auto& v) { c.batch_size = to_int(k, v); };
    t["update_every"] = [](RunConfig& c, const auto& k, const auto& v) { c.update_every = to_int(k, v); };
    t["critic_updates"] = [](RunConfig& c, const auto& k, const auto& v) { c.critic_updates = to_int(k, v); };
    t["actor_updates"] = [](RunConfig& c, const auto& k, const auto& v) { c.actor_updates = to_int(k, v); };
    t["actor_batch_size"] = [](RunConfig& c, const auto& k, const auto& v) { c.actor_batch_size = to_int(k, v); };
    t["critic_hidden"] = [](RunConfig& c, const auto& k, const auto& v) {
      c.critic_hidden.clear();
      for (const auto& item : split_list(v)) c.critic_hidden.push_back(to_int(k, item));
    };
    t["critic_activation"] = [](RunConfig& c, const auto&, const auto& v) {
      c.critic_activation = activation_from_string(v);
    };
    t["td_gradient"] = [](RunConfig& c, const auto&, const auto& v) {
      if (v == "semi") {
        c.td_gradient = TdGradient::semi;
      } else if (v == "residual") {
        c.td_gradient = TdGradient::residual;
      } else {
        throw ConfigError("td_gradient: expected semi or residual, got '" + v + "'");
      }
    };
    t["obs_normalization"] = [](RunConfig& c, const auto& k, const auto& v) { c.obs_normalization = to_bool(k, v); };
    t["eval_count"] = [](RunConfig& c, const auto& k, const auto& v) { c.eval_count = to_int(k, v); };
    t["eval_episodes"] = [](RunConfig& c, const auto& k, const auto& v) { c.eval_episodes = to_int(k, v); };
    t["init"] = [](RunConfig& c, const auto&, const auto& v) {
      if (v == "reference" || v == "reference_default") {
        c.init = InitScheme::reference_default;
      } else if (v == "zeros") {
        c.init = InitScheme::zeros;
      } else {
        throw ConfigError("init: expected reference or zeros, got '" + v + "'");
      }
    };
    t["init_theta"] = [](RunConfig& c, const auto& k, const auto& v) {
      c.init_theta.clear();
      for (const auto& item : split_list(v)) c.init_theta.push_back(to_double(k, item));
    };
    t["ars_directions"] = [](RunConfig& c, const auto& k, const auto& v) { c.ars_directions = to_int(k, v); };
    t["ars_elite"] = [](RunConfig& c, const auto& k, const auto& v) { c.ars_elite = to_int(k, v); };
    t["zs_base"] = [](RunConfig& c, const auto&, const auto& v) { c.zs_base = algo_from_string(v); };
    t["zs_policies"] = [](RunConfig& c, const auto& k, const auto& v) { c.zs_policies = to_int(k, v); };
    t["zs_lr"] = [](RunConfig& c, const auto& k, const auto& v) { c.zs_lr = to_double(k, v); };
    t["zs_steps"] = [](RunConfig& c, const auto& k, const auto& v) { c.zs_steps = to_int(k, v); };
    t["zs_eval_every"] = [](RunConfig& c, const auto& k, const auto& v) { c.zs_eval_every = to_int(k, v); };
    t["zs_eval_episodes"] = [](RunConfig& c, const auto& k, const auto& v) { c.zs_eval_episodes = to_int(k, v); };
    t["offline_dataset"] = [](RunConfig& c, const auto& k, const auto& v) { c.offline_dataset = to_long(k, v); };
    t["offline_fragment"] = [](RunConfig& c, const auto& k, const auto& v) { c.offline_fragment = to_int(k, v); };
    t["offline_sigma"] = [](RunConfig& c, const auto& k, const auto& v) { c.offline_sigma = to_double(k, v); };
    t["offline_critic_updates"] = [](RunConfig& c, const auto& k, const auto& v) {
      c.offline_critic_updates = to_long(k, v);
    };
    t["offline_checkpoints"] = [](RunConfig& c, const auto& k, const auto& v) { c.offline_checkpoints = to_int(k, v); };
    t["offline_holdout"] = [](RunConfig& c, const auto& k, const auto& v) { c.offline_holdout = to_int(k, v); };
    t["oracle_instances"] = [](RunConfig& c, const auto& k, const auto& v) { c.oracle_instances = to_int(k, v); };
    t["oracle_states"] = [](RunConfig& c, const auto& k, const auto& v) { c.oracle_states = to_int(k, v); };
    t["out"] = [](RunConfig& c, const auto&, const auto& v) { c.out_dir = v; };
    return t;
  }();
  return table;
}

struct PbvfPreset {
  double lr_actor, lr_critic, sigma;
};

struct ArsPreset {
  double lr;
  int directions, elite;
  double sigma;
};

// Tuned for the final-metric column, indexed by arch (lin, mlp32, mlp64x64).
const std::map<std::string, std::array<PbvfPreset, 3>>& pssvf_presets() {
  static const std::map<std::string, std::array<PbvfPreset, 3>> t{
      {"acrobot", {{{1e-3, 1e-3, 1.0}, {1e-4, 1e-2, 0.1}, {1e-4, 1e-2, 0.1}}}},
      {"mountaincar-cont", {{{1e-3, 1e-2, 1.0}, {1e-4, 1e-2, 0.1}, {1e-4, 1e-2, 0.1}}}},
      {"cartpole", {{{1e-3, 1e-2, 1.0}, {1e-3, 1e-3, 1.0}, {1e-4, 1e-2, 0.1}}}},
  };
  return t;
}

const std::map<std::string, std::array<PbvfPreset, 3>>& psvf_presets() {
  static const std::map<std::string, std::array<PbvfPreset, 3>> t{
      {"acrobot", {{{1e-2, 1e-4, 1.0}, {1e-4, 1e-2, 0.1}, {1e-2, 1e-2, 0.1}}}},
      {"mountaincar-cont", {{{1e-3, 1e-3, 0.1}, {1e-4, 1e-4, 1.0}, {1e-4, 1e-3, 0.1}}}},
      {"cartpole", {{{1e-2, 1e-2, 1.0}, {1e-4, 1e-3, 0.1}, {1e-4, 1e-4, 0.1}}}},
  };
  return t;
}

const std::map<std::string, std::array<PbvfPreset, 3>>& pavf_presets() {
  static const std::map<std::string, std::array<PbvfPreset, 3>> t{
      {"mountaincar-cont", {{{1e-3, 1e-4, 0.1}, {1e-4, 1e-3, 0.1}, {1e-4, 1e-3, 0.1}}}},
  };
  return t;
}

const std::map<std::string, std::array<ArsPreset, 3>>& ars_presets() {
  static const std::map<std::string, std::array<ArsPreset, 3>> t{
      {"acrobot", {{{1e-3, 4, 4, 1e-3}, {1e-2, 1, 1, 0.1}, {1e-2, 1, 1, 0.1}}}},
      {"mountaincar-cont", {{{1e-2, 1, 1, 0.1}, {1e-2, 16, 4, 0.1}, {1e-2, 1, 1, 0.1}}}},
      {"cartpole", {{{1e-2, 4, 4, 1e-2}, {1e-2, 1, 1, 0.1}, {1e-2, 4, 1, 1e-2}}}},
  };
  return t;
}

bool is_td(Algo a) {
  return a == Algo::psvf || a == Algo::pavf || a == Algo::pavf_biased || a == Algo::pavf_stoch;
}

// The algorithm whose defaults apply (zero-shot inherits from its base).
Algo training_algo(const RunConfig& c) { return c.algo == Algo::zero_shot ? c.zs_base : c.algo; }

bool in_set(double x, std::initializer_list<double> grid) {
  for (double g : grid) {
    if (std::abs(x - g) <= 1e-12 * std::abs(g)) return true;
  }
  return false;
}

void apply_defaults(RunConfig& c, const ConfigValues& given) {
  const Algo a = training_algo(c);
  const bool lqr = c.env == "lqr";
  auto has = [&](const char* k) { return given.count(k) > 0; };
  auto set_lrs = [&](double lr_a, double lr_c, double sigma) {
    if (!has("lr_actor")) c.lr_actor = lr_a;
    if (!has("lr_critic")) c.lr_critic = lr_c;
    if (!has("sigma")) c.sigma = sigma;
  };
  const int arch = static_cast<int>(c.arch);

  if (a == Algo::pssvf) {
    c.batch_size = 16;
    c.update_every = 0;
    c.critic_updates = 10;
    c.actor_updates = 10;
  } else if (is_td(a) || a == Algo::offline_psvf) {
    c.batch_size = 128;
    c.update_every = 50;
    c.critic_updates = 5;
    c.actor_updates = 1;
  }
  if (a == Algo::ars) c.init = InitScheme::zeros;

  if (lqr) {
    c.obs_normalization = false;
    c.init_theta = {3.2, -3.5};
    if (a == Algo::pssvf) {
      c.total_env_steps = 50000;
      set_lrs(1e-3, 1e-2, 0.5);
    } else if (is_td(a)) {
      c.total_env_steps = 5000;
      c.update_every = 10;
      c.critic_updates = 10;
      c.actor_updates = 2;
      c.critic_hidden = {64};
      c.critic_activation = Activation::tanh;
      set_lrs(1e-2, 1e-1, 0.5);
    }
  } else if (a == Algo::pssvf) {
    if (auto it = pssvf_presets().find(c.env); it != pssvf_presets().end()) {
      const auto& p = it->second[arch];
      set_lrs(p.lr_actor, p.lr_critic, p.sigma);
    }
  } else if (a == Algo::psvf) {
    if (auto it = psvf_presets().find(c.env); it != psvf_presets().end()) {
      const auto& p = it->second[arch];
      set_lrs(p.lr_actor, p.lr_critic, p.sigma);
    }
  } else if (is_td(a)) {
    if (auto it = pavf_presets().find(c.env); it != pavf_presets().end()) {
      const auto& p = it->second[arch];
      set_lrs(p.lr_actor, p.lr_critic, p.sigma);
    }
  } else if (a == Algo::ars) {
    if (auto it = ars_presets().find(c.env); it != ars_presets().end()) {
      const auto& p = it->second[arch];
      if (!has("lr_actor")) c.lr_actor = p.lr;
      if (!has("sigma")) c.sigma = p.sigma;
      if (!has("ars_directions")) c.ars_directions = p.directions;
      if (!has("ars_elite")) c.ars_elite = p.elite;
    }
  }

  if (c.algo == Algo::offline_psvf) {
    c.zs_lr = 0.02;
    if (!has("lr_critic")) c.lr_critic = 1e-3;
  }
  if (c.algo == Algo::pg_oracle) c.gamma = 0.9;
}

void check_grid(const RunConfig& c) {
  // LQR runs use their own published settings; the oracle has no learning rates.
  if (c.env == "lqr" || c.env == "chain2" || c.algo == Algo::pg_oracle) return;
  const Algo a = training_algo(c);
  auto fail = [](const std::string& what) {
    throw ConfigError(what + " lies outside the tuning grid (pass --force to override)");
  };
  if (a == Algo::ars) {
    if (!in_set(c.lr_actor, {1e-2, 1e-3, 1e-4})) fail("lr " + format_number(c.lr_actor));
    if (!in_set(c.sigma, {1.0, 1e-1, 1e-2, 1e-3})) fail("sigma " + format_number(c.sigma));
    const std::pair<int, int> d{c.ars_directions, c.ars_elite};
    static const std::vector<std::pair<int, int>> grid{{1, 1}, {4, 1}, {4, 4}, {16, 1}, {16, 4}, {16, 16}};
    if (std::find(grid.begin(), grid.end(), d) == grid.end()) {
      fail("(directions, elite) (" + std::to_string(d.first) + ", " + std::to_string(d.second) + ")");
    }
    return;
  }
  if (!in_set(c.lr_actor, {1e-2, 1e-3, 1e-4})) fail("lr_actor " + format_number(c.lr_actor));
  if (!in_set(c.lr_critic, {1e-2, 1e-3, 1e-4})) fail("lr_critic " + format_number(c.lr_critic));
  // Stochastic policies also admit sigma = 0.
  const bool sigma_ok = in_set(c.sigma, {1.0, 1e-1}) || (c.stochastic && c.sigma == 0.0);
  if (c.algo != Algo::offline_psvf && !sigma_ok) fail("sigma " + format_number(c.sigma));
}

void check_ranges(const RunConfig& c) {
  if (c.total_env_steps < 1) throw ConfigError("steps must be positive");
  if (!(c.gamma >= 0.0 && c.gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
  if (!(c.sigma >= 0.0) || !std::isfinite(c.sigma)) throw ConfigError("sigma must be a finite non-negative number");
  if (!(c.lr_actor > 0.0) || !(c.lr_critic > 0.0)) throw ConfigError("learning rates must be positive");
  if (c.batch_size < 1 || c.actor_batch_size < 1) throw ConfigError("batch sizes must be positive");
  if (c.update_every < 0 || c.critic_updates < 0 || c.actor_updates < 0) {
    throw ConfigError("update counts must be non-negative");
  }
  if (c.critic_hidden.empty()) throw ConfigError("critic_hidden needs at least one layer");
  for (int h : c.critic_hidden) {
    if (h < 1) throw ConfigError("critic_hidden sizes must be positive");
  }
  if (c.eval_count < 1 || c.eval_episodes < 1) throw ConfigError("eval_count and eval_episodes must be positive");
  if (c.algo == Algo::zero_shot && (c.zs_base == Algo::zero_shot || c.zs_base == Algo::offline_psvf ||
                                    c.zs_base == Algo::pg_oracle || c.zs_base == Algo::ars)) {
    throw ConfigError("zs_base must be a critic-training algorithm");
  }
  if (c.algo == Algo::pg_oracle && (c.oracle_states < 1 || c.oracle_states > 5 || c.oracle_instances < 1)) {
    throw ConfigError("oracle_states must lie in [1, 5] and oracle_instances be positive");
  }
}

}  // namespace

std::string_view to_string(Algo algo) {
  for (const auto& [a, n] : kAlgoNames) {
    if (a == algo) return n;
  }
  return "?";
}

Algo algo_from_string(std::string_view name) {
  for (const auto& [a, n] : kAlgoNames) {
    if (n == name) return a;
  }
  throw ConfigError("unknown algo '" + std::string(name) + "'");
}

const std::vector<std::string>& algo_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& p : kAlgoNames) v.emplace_back(p.second);
    return v;
  }();
  return names;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> v;
    for (const auto& kv : setters()) v.push_back(kv.first);
    return v;
  }();
  return keys;
}

ConfigValues parse_config_text(const std::string& text) {
  ConfigValues out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value', got '" + body + "'");
    }
    const std::string key = canonical_key(trim(std::string_view(body).substr(0, eq)));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (!setters().count(key)) throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    out[key] = value;
  }
  return out;
}

ConfigValues read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config_text(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

RunConfig resolve_config(const ConfigValues& file_values, const ConfigValues& cli_values, bool force) {
  ConfigValues merged;
  for (const auto& src : {&file_values, &cli_values}) {
    for (const auto& [k, v] : *src) {
      const std::string key = canonical_key(k);
      if (!setters().count(key)) throw ConfigError("unknown key '" + k + "'");
      merged[key] = v;
    }
  }
  for (const char* required : {"algo", "env"}) {
    if (!merged.count(required)) throw ConfigError(std::string("missing required field '") + required + "'");
  }
  RunConfig c;
  // Identity fields first so the defaults can depend on them.
  for (const char* k : {"algo", "env", "arch", "stochastic", "zs_base"}) {
    if (auto it = merged.find(k); it != merged.end()) setters().at(k)(c, k, it->second);
  }
  if (c.algo != Algo::pg_oracle && !merged.count("arch")) throw ConfigError("missing required field 'arch'");
  apply_defaults(c, merged);
  for (const auto& [k, v] : merged) setters().at(k)(c, k, v);
  check_ranges(c);
  if (!force) check_grid(c);
  return c;
}

}  // namespace pbvf
