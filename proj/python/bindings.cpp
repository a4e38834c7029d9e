#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pbvf/environments.hpp"
#include "pbvf/errors.hpp"
#include "pbvf/harness.hpp"

namespace py = pybind11;

namespace {

pbvf::ConfigValues to_values(const py::dict& d) {
  pbvf::ConfigValues out;
  for (const auto& [k, v] : d) {
    std::string text;
    if (py::isinstance<py::bool_>(v)) {
      text = v.cast<bool>() ? "true" : "false";
    } else if (py::isinstance<py::list>(v) || py::isinstance<py::tuple>(v)) {
      for (const auto& item : v) {
        if (!text.empty()) text += ",";
        text += py::str(item).cast<std::string>();
      }
    } else {
      text = py::str(v).cast<std::string>();
    }
    out[py::str(k).cast<std::string>()] = text;
  }
  return out;
}

// rows x 3: env_steps, mean_return, std_return
Eigen::MatrixXd curve_array(const pbvf::LearningCurve& c) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(c.size()), 3);
  for (std::size_t i = 0; i < c.size(); ++i) {
    m(i, 0) = static_cast<double>(c[i].env_steps);
    m(i, 1) = c[i].mean_return;
    m(i, 2) = c[i].std_return;
  }
  return m;
}

pbvf::LearningCurve curve_from_returns(const std::vector<double>& returns) {
  pbvf::LearningCurve c;
  for (std::size_t i = 0; i < returns.size(); ++i) c.push_back({static_cast<long>(i + 1), returns[i], 0.0, 0});
  return c;
}

Eigen::MatrixXd landscape_array(const std::vector<pbvf::LandscapeRow>& rows) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), 4);
  for (std::size_t i = 0; i < rows.size(); ++i) m.row(i) << rows[i].theta_w, rows[i].theta_b, rows[i].true_j, rows[i].predicted_v;
  return m;
}

Eigen::MatrixXd oracle_array(const std::vector<pbvf::OracleRow>& rows) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), 4);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    m.row(i) << rows[i].instance, rows[i].thm1_maxerr, rows[i].thm3_maxerr, rows[i].degris_bias;
  }
  return m;
}

py::dict summary_dict(const pbvf::SummaryRow& s) {
  py::dict d;
  d["algo"] = s.algo;
  d["env"] = s.env;
  d["arch"] = s.arch;
  d["seed_count"] = s.seed_count;
  d["avg_metric_mean"] = s.avg_metric_mean;
  d["avg_metric_std"] = s.avg_metric_std;
  d["final_metric_mean"] = s.final_metric_mean;
  d["final_metric_std"] = s.final_metric_std;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "pbvf core bindings";

  auto base = py::register_exception<pbvf::Error>(m, "Error", PyExc_RuntimeError);
  // translators run newest first, so subclasses win over Error
  py::register_exception<pbvf::InputError>(m, "InputError", base.ptr());
  py::register_exception<pbvf::ProtocolError>(m, "ProtocolError", base.ptr());
  py::register_exception<pbvf::NumericError>(m, "NumericError", base.ptr());
  py::register_exception<pbvf::ConfigError>(m, "ConfigError", base.ptr());

  py::class_<pbvf::RunConfig>(m, "RunConfig")
      .def_property_readonly("algo", [](const pbvf::RunConfig& c) { return std::string(pbvf::to_string(c.algo)); })
      .def_readonly("env", &pbvf::RunConfig::env)
      .def_property_readonly("arch", [](const pbvf::RunConfig& c) { return std::string(pbvf::to_string(c.arch)); })
      .def_readonly("stochastic", &pbvf::RunConfig::stochastic)
      .def_readwrite("seed", &pbvf::RunConfig::seed)
      .def_readonly("total_env_steps", &pbvf::RunConfig::total_env_steps)
      .def_readonly("lr_actor", &pbvf::RunConfig::lr_actor)
      .def_readonly("lr_critic", &pbvf::RunConfig::lr_critic)
      .def_readonly("sigma", &pbvf::RunConfig::sigma)
      .def_readonly("gamma", &pbvf::RunConfig::gamma)
      .def_readonly("batch_size", &pbvf::RunConfig::batch_size)
      .def_readonly("critic_hidden", &pbvf::RunConfig::critic_hidden)
      .def_readonly("init_theta", &pbvf::RunConfig::init_theta)
      .def_readwrite("out_dir", &pbvf::RunConfig::out_dir);

  m.def(
      "resolve_config",
      [](const py::dict& values, const py::object& config_file, bool force) {
        const pbvf::ConfigValues file =
            config_file.is_none() ? pbvf::ConfigValues{} : pbvf::read_config_file(py::str(config_file));
        return pbvf::resolve_config(file, to_values(values), force);
      },
      py::arg("values"), py::arg("config_file") = py::none(), py::arg("force") = false,
      "Build a RunConfig from key/value pairs (and an optional key = value file).");

  py::class_<pbvf::Env>(m, "Env")
      .def_property_readonly("name", [](const pbvf::Env& e) { return std::string(e.name()); })
      .def_property_readonly("state_dim", &pbvf::Env::state_dim)
      .def_property_readonly("max_episode_steps", &pbvf::Env::max_episode_steps)
      .def_property_readonly("done", &pbvf::Env::done)
      .def("reset", &pbvf::Env::reset)
      .def(
          "step",
          [](pbvf::Env& e, const py::object& action) {
            Eigen::VectorXd a;
            if (py::isinstance<py::int_>(action) || py::isinstance<py::float_>(action)) {
              a = Eigen::VectorXd::Constant(1, action.cast<double>());
            } else {
              a = action.cast<Eigen::VectorXd>();
            }
            const pbvf::StepResult r = e.step(a);
            return py::make_tuple(r.state, r.reward, r.terminated, r.truncated);
          },
          py::arg("action"), "Returns (state, reward, terminated, truncated).");

  m.def("make_env", &pbvf::make_env, py::arg("name"), py::arg("seed") = 0);

  m.def(
      "run_training",
      [](const pbvf::RunConfig& c) {
        pbvf::RunResult r;
        {
          py::gil_scoped_release release;
          r = pbvf::run_training(c);
        }
        py::dict d;
        d["curve"] = curve_array(r.curve);
        d["theta"] = r.final_policy.theta;
        d["env_steps"] = r.env_steps;
        d["episodes"] = r.episodes;
        d["episode_returns"] = r.episode_returns;
        return d;
      },
      py::arg("config"), "Train one seed; returns the learning curve and final parameters.");

  m.def(
      "run_experiment",
      [](const pbvf::RunConfig& c, const std::vector<std::uint64_t>& seeds, int jobs) {
        pbvf::ExperimentResult r;
        {
          py::gil_scoped_release release;
          r = pbvf::run_experiment(c, seeds, jobs);
        }
        py::list per_seed;
        for (const auto& s : r.seeds) {
          py::dict d;
          d["seed"] = s.seed;
          d["ok"] = s.ok;
          d["error"] = s.error;
          d["avg"] = s.avg;
          d["final"] = s.final;
          d["curve_path"] = s.curve_path;
          per_seed.append(d);
        }
        py::dict out;
        out["seeds"] = per_seed;
        out["summary"] = summary_dict(r.summary);
        out["summary_path"] = r.summary_path;
        return out;
      },
      py::arg("config"), py::arg("seeds"), py::arg("jobs") = 1);

  m.def(
      "landscape_dump",
      [](int resolution, double lo, double hi, int horizon, double gamma) {
        return landscape_array(pbvf::landscape_dump("lqr", nullptr, resolution, lo, hi, horizon, gamma));
      },
      py::arg("resolution") = 101, py::arg("lo") = -5.0, py::arg("hi") = 5.0, py::arg("horizon") = 50,
      py::arg("gamma") = 1.0, "LQR true-J grid as rows (theta_w, theta_b, true_J, predicted_V).");

  m.def(
      "lqr_riccati",
      [](double gamma) {
        const pbvf::RiccatiSolution s = pbvf::lqr_riccati(gamma);
        return py::make_tuple(s.p, s.gain);
      },
      py::arg("gamma") = 1.0, "Returns (P, gain) with a = -gain * s.");

  m.def(
      "run_oracle", [](const pbvf::RunConfig& c) { return oracle_array(pbvf::run_oracle(c)); }, py::arg("config"),
      "Rows (instance, on-policy max err, off-policy max err, truncation bias).");

  m.def("avg_metric", [](const std::vector<double>& r) { return pbvf::avg_metric(curve_from_returns(r)); });
  m.def("final_metric", [](const std::vector<double>& r) { return pbvf::final_metric(curve_from_returns(r)); });
  m.def("pearson", &pbvf::pearson);

  m.def("read_curve_csv", [](const std::string& p) { return curve_array(pbvf::read_curve_csv(p)); });
  m.def("read_landscape_csv", [](const std::string& p) { return landscape_array(pbvf::read_landscape_csv(p)); });
  m.def("read_oracle_csv", [](const std::string& p) { return oracle_array(pbvf::read_oracle_csv(p)); });
  m.def("read_summary_csv", [](const std::string& p) {
    py::list out;
    for (const auto& s : pbvf::read_summary_csv(p)) out.append(summary_dict(s));
    return out;
  });
}
