// pbvf command line: run, sweep, landscape, oracle.
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "pbvf/errors.hpp"
#include "pbvf/harness.hpp"

namespace {

struct CommonOptions {
  std::map<std::string, std::string> flags;  // option name -> value, only if given
  std::vector<std::string> sets;             // extra key=value pairs
  std::string config_file;
  bool stochastic = false;
  bool force = false;
};

void add_common(CLI::App* app, CommonOptions& o) {
  for (const char* name : {"algo", "env", "arch", "seed", "steps", "lr-actor", "lr-critic", "sigma", "gamma", "out"}) {
    app->add_option_function<std::string>(std::string("--") + name,
                                          [&o, key = std::string(name)](const std::string& v) { o.flags[key] = v; });
  }
  app->add_flag("--stochastic", o.stochastic, "Gaussian policy head");
  app->add_option("--config", o.config_file, "key = value config file");
  app->add_option("--set", o.sets, "Extra config entries as key=value");
  app->add_flag("--force", o.force, "Accept values outside the tuning grids");
}

pbvf::RunConfig resolve(const CommonOptions& o) {
  pbvf::ConfigValues file = o.config_file.empty() ? pbvf::ConfigValues{} : pbvf::read_config_file(o.config_file);
  pbvf::ConfigValues cli = o.flags;
  if (o.stochastic) cli["stochastic"] = "true";
  for (const std::string& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw pbvf::ConfigError("--set expects key=value, got '" + kv + "'");
    cli[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  return pbvf::resolve_config(file, cli, o.force);
}

// "0..4" or "0,3,7"
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  if (const auto dots = text.find(".."); dots != std::string::npos) {
    const long lo = std::stol(text.substr(0, dots));
    const long hi = std::stol(text.substr(dots + 2));
    if (lo < 0 || hi < lo) throw pbvf::ConfigError("bad seed range '" + text + "'");
    for (long s = lo; s <= hi; ++s) seeds.push_back(static_cast<std::uint64_t>(s));
    return seeds;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const long s = std::stol(item);
    if (s < 0) throw pbvf::ConfigError("seeds must be non-negative");
    seeds.push_back(static_cast<std::uint64_t>(s));
  }
  if (seeds.empty()) throw pbvf::ConfigError("no seeds given");
  return seeds;
}

int report(const pbvf::ExperimentResult& r) {
  int failures = 0;
  for (const auto& s : r.seeds) {
    if (s.ok) {
      std::cout << "seed " << s.seed << ": avg " << pbvf::format_number(s.avg) << " final "
                << pbvf::format_number(s.final) << " -> " << s.curve_path << '\n';
    } else {
      ++failures;
      std::cerr << "seed " << s.seed << " failed: " << s.error << '\n';
    }
  }
  std::cout << "summary: " << r.summary_path << '\n';
  return failures == 0 ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parameter-based value function experiments"};
  app.require_subcommand(1);

  CommonOptions run_opts, sweep_opts, land_opts, oracle_opts;
  auto* run = app.add_subcommand("run", "Train one seed");
  add_common(run, run_opts);

  auto* sweep = app.add_subcommand("sweep", "Train several seeds");
  add_common(sweep, sweep_opts);
  std::string seeds_text = "0..4";
  int jobs = 1;
  sweep->add_option("--seeds", seeds_text, "Seed range a..b or list a,b,c");
  sweep->add_option("--jobs", jobs, "Worker threads");

  auto* landscape = app.add_subcommand("landscape", "LQR true-J / predicted-V grid");
  add_common(landscape, land_opts);
  int resolution = 101;  // odd, so b = 0 is on the grid
  landscape->add_option("--resolution", resolution, "Grid points per axis");

  auto* oracle = app.add_subcommand("oracle", "Policy-gradient checks on random finite MDPs");
  add_common(oracle, oracle_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) {
      return report(pbvf::run_experiment(resolve(run_opts), {resolve(run_opts).seed}, 1));
    }
    if (sweep->parsed()) {
      return report(pbvf::run_experiment(resolve(sweep_opts), parse_seeds(seeds_text), jobs));
    }
    if (landscape->parsed()) {
      if (!land_opts.flags.count("env")) land_opts.flags["env"] = "lqr";
      if (!land_opts.flags.count("arch")) land_opts.flags["arch"] = "lin";
      if (!land_opts.flags.count("algo")) land_opts.flags["algo"] = "pssvf";
      const pbvf::RunConfig c = resolve(land_opts);
      const bool state_based = c.algo != pbvf::Algo::pssvf;
      const pbvf::RunResult trained = pbvf::run_training(c);
      auto rows = state_based ? pbvf::landscape_dump(c.env, trained.critic.get(), resolution, -5, 5, 500, 0.99)
                              : pbvf::landscape_dump(c.env, trained.critic.get(), resolution, -5, 5, 50, 1.0);
      std::filesystem::create_directories(c.out_dir);
      const std::string stem = std::string(pbvf::to_string(c.algo)) + "_seed" + std::to_string(c.seed);
      const auto grid = std::filesystem::path(c.out_dir) / ("landscape_" + stem + ".csv");
      const auto traj = std::filesystem::path(c.out_dir) / ("trajectory_" + stem + ".csv");
      pbvf::write_landscape_csv(grid.string(), rows);
      pbvf::write_trajectory_csv(traj.string(), trained.theta_trace);
      std::cout << grid.string() << '\n' << traj.string() << '\n';
      return 0;
    }
    if (oracle->parsed()) {
      oracle_opts.flags["algo"] = "pg-oracle";
      if (!oracle_opts.flags.count("env")) oracle_opts.flags["env"] = "chain2";
      const pbvf::RunConfig c = resolve(oracle_opts);
      const auto rows = pbvf::run_oracle(c);
      std::filesystem::create_directories(c.out_dir);
      const auto path = std::filesystem::path(c.out_dir) / ("oracle_seed" + std::to_string(c.seed) + ".csv");
      pbvf::write_oracle_csv(path.string(), rows);
      double worst1 = 0, worst3 = 0;
      for (const auto& r : rows) {
        worst1 = std::max(worst1, r.thm1_maxerr);
        worst3 = std::max(worst3, r.thm3_maxerr);
      }
      std::cout << "instances " << rows.size() << " max on-policy err " << pbvf::format_number(worst1)
                << " max off-policy err " << pbvf::format_number(worst3) << " -> " << path.string() << '\n';
      return 0;
    }
  } catch (const pbvf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
