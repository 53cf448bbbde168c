#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "mobsim/evaluation.hpp"
#include "mobsim/generator.hpp"
#include "mobsim/guidance.hpp"
#include "mobsim/io.hpp"
#include "mobsim/jsd.hpp"
#include "mobsim/measures.hpp"
#include "mobsim/run.hpp"
#include "mobsim/scaleout.hpp"

namespace py = pybind11;
using namespace mobsim;

namespace {

// Structured values cross the boundary as JSON text and trajectories as CSV
// text; the Python package turns them into dicts.
GridSpec grid_of(const std::string& grid_json) {
  return grid_from_json(grid_json.empty() ? Json::object() : Json::parse(grid_json));
}

std::vector<Trajectory> parse_csv(const std::string& csv, const GridSpec& grid) {
  std::istringstream is(csv);
  return read_trajectories_csv(is, grid);
}

std::string to_csv(std::span<const Trajectory> ts, const GridSpec& grid) {
  std::ostringstream os;
  write_trajectories_csv(os, ts, grid);
  return os.str();
}

py::dict fit_dict(const TruncatedPowerLawFit& f) {
  py::dict d;
  d["beta"] = f.beta;
  d["kappa"] = f.kappa;
  d["x0"] = f.x0;
  d["loglik"] = f.loglik;
  d["n"] = f.n;
  d["zeros_dropped"] = f.zeros_dropped;
  return d;
}

// runs a command with the GIL released and returns (exit code, log text)
template <class Args, class Fn>
py::tuple run_cmd(const std::string& config_json, Args args, Fn fn) {
  std::ostringstream log;
  int code = 0;
  {
    py::gil_scoped_release release;
    code = guarded(
        [&] {
          const RunConfig cfg = run_config_from_json(config_json.empty() ? Json::object() : Json::parse(config_json));
          validate(cfg);
          return fn(cfg, args, log);
        },
        log);
  }
  return py::make_tuple(code, log.str());
}

std::optional<SharedDataType> sdt_of(const std::optional<std::string>& s) {
  if (!s) return std::nullopt;
  return shared_data_type_from_string(*s);
}

}  // namespace

PYBIND11_MODULE(_mobsim, m) {
  m.doc() = "Mobility simulation, guidance measures and prompt search";

  py::register_exception<FitError>(m, "FitError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def(
      "default_population",
      [](std::size_t users, int num_days, std::uint64_t seed, bool heterogeneous) {
        PopulationOptions o;
        o.users = users;
        o.num_days = num_days;
        o.heterogeneous = heterogeneous;
        return to_json(default_population(o, seed)).dump();
      },
      py::arg("users") = 100, py::arg("num_days") = 7, py::arg("seed") = 42, py::arg("heterogeneous") = true);

  m.def(
      "generate",
      [](const std::string& promptset_json, std::uint64_t seed, const std::string& grid_json) {
        const GridSpec grid = grid_of(grid_json);
        const PromptSet ps = promptset_from_json(Json::parse(promptset_json));
        GenerationBatchResult r;
        {
          py::gil_scoped_release release;
          r = generate_synthetic(ps, grid, seed);
        }
        std::map<std::string, std::string> status;
        for (const auto& [id, u] : r.users) status[id] = std::string(to_string(u.status));
        return py::make_tuple(to_csv(r.trajectories(), grid), status);
      },
      py::arg("promptset_json"), py::arg("seed") = 42, py::arg("grid_json") = "");

  m.def(
      "make_target",
      [](const std::string& csv, const std::string& sdt, const std::string& grid_json) {
        const GridSpec grid = grid_of(grid_json);
        const auto ts = parse_csv(csv, grid);
        return to_json(make_target(shared_data_type_from_string(sdt), ts, grid)).dump();
      },
      py::arg("trajectories_csv"), py::arg("shared_data_type"), py::arg("grid_json") = "");

  m.def(
      "objective_distances",
      [](const std::string& target_json, const std::string& csv, const std::string& grid_json) {
        const GridSpec grid = grid_of(grid_json);
        const GuidanceConfig cfg = guidance_from_json(Json::parse(target_json));
        const auto ts = parse_csv(csv, grid);
        const auto g = objective_distances(cfg, sample_population(ts, grid));
        return py::make_tuple(g, aggregate_R(g, cfg.epsilon_reward));
      },
      py::arg("target_json"), py::arg("trajectories_csv"), py::arg("grid_json") = "");

  m.def("aggregate_R", [](const std::vector<double>& gs, double eps) { return aggregate_R(gs, eps); },
        py::arg("gs"), py::arg("eps") = 1e-6);
  m.def(
      "w1_log",
      [](std::vector<double> a, std::vector<double> b, double eps) {
        return w1_log({std::move(a), SampleKind::Dimensionless}, {std::move(b), SampleKind::Dimensionless}, eps);
      },
      py::arg("a"), py::arg("b"), py::arg("eps") = 1e-9);
  m.def(
      "l1_ccdf",
      [](std::vector<double> a, std::vector<double> b, double eps, bool log_coords) {
        return l1_ccdf({std::move(a), SampleKind::Dimensionless}, {std::move(b), SampleKind::Dimensionless}, eps,
                       log_coords);
      },
      py::arg("a"), py::arg("b"), py::arg("eps") = 1e-9, py::arg("log_coords") = true);
  m.def("jsd", [](const std::vector<double>& p, const std::vector<double>& q) { return jsd(p, q); }, py::arg("p"),
        py::arg("q"));

  m.def(
      "fit_truncated_powerlaw",
      [](std::vector<double> samples, double x0, bool fit_x0, std::size_t min_samples) {
        PowerLawFitOptions o;
        o.x0 = x0;
        o.fit_x0 = fit_x0;
        o.min_samples = min_samples;
        return fit_dict(fit_truncated_powerlaw({std::move(samples), SampleKind::Dimensionless}, o));
      },
      py::arg("samples"), py::arg("x0") = 1000.0, py::arg("fit_x0") = false, py::arg("min_samples") = 100);
  m.def(
      "fit_zipf_counts",
      [](const std::vector<double>& counts) {
        const ZipfFit f = fit_zipf_counts(counts);
        py::dict d;
        d["zeta"] = f.zeta;
        d["n_locations"] = f.n_locations;
        d["r2"] = f.r2;
        return d;
      },
      py::arg("counts"));
  m.def(
      "user_measures",
      [](const std::string& csv, const std::string& grid_json) {
        const GridSpec grid = grid_of(grid_json);
        py::dict out;
        for (const auto& t : parse_csv(csv, grid)) {
          const UserMeasures u = summarize(t, grid);
          py::dict d;
          d["radius_m"] = u.radius_m;
          d["zeta"] = u.zeta ? py::cast(*u.zeta) : py::none();
          d["alpha"] = u.alpha ? py::cast(*u.alpha) : py::none();
          d["n_stays"] = t.stays.size();
          out[py::str(t.user_id.value_or(""))] = d;
        }
        return out;
      },
      py::arg("trajectories_csv"), py::arg("grid_json") = "");

  m.def(
      "evaluate",
      [](const std::string& sim_csv, const std::string& ref_csv, const std::string& grid_json) {
        const GridSpec grid = grid_of(grid_json);
        const auto sim = parse_csv(sim_csv, grid);
        const auto ref = parse_csv(ref_csv, grid);
        const EvaluationReport r = evaluate(sim, ref, grid);
        py::list out;
        for (const auto& mr : r.metrics) {
          py::dict d;
          d["name"] = mr.name;
          d["kind"] = mr.kind;
          d["binning"] = mr.binning;
          d["value"] = mr.value ? py::cast(*mr.value) : py::none();
          d["n_sim"] = mr.n_sim;
          d["n_ref"] = mr.n_ref;
          d["note"] = mr.note;
          out.append(d);
        }
        return out;
      },
      py::arg("sim_csv"), py::arg("ref_csv"), py::arg("grid_json") = "");

  m.def(
      "extend",
      [](const std::string& optimized_json, const std::string& profiles_csv) {
        const PromptSet ps = promptset_from_json(Json::parse(optimized_json));
        std::istringstream is(profiles_csv);
        const auto profiles = read_profiles_csv(is);
        const ExtendResult r = extend(ps, profiles);
        return py::make_tuple(to_json(r.prompts).dump(), r.source, r.m, r.remainder);
      },
      py::arg("optimized_json"), py::arg("profiles_csv"));

  m.def(
      "run_generate",
      [](const std::string& config_json, bool strict) {
        return run_cmd(config_json, GenerateArgs{strict}, cmd_generate);
      },
      py::arg("config_json"), py::arg("strict") = false);
  m.def(
      "run_make_target",
      [](const std::string& config_json, const std::string& trajectories, std::optional<std::string> sdt) {
        return run_cmd(config_json, MakeTargetArgs{trajectories, sdt_of(sdt)}, cmd_make_target);
      },
      py::arg("config_json"), py::arg("trajectories"), py::arg("shared_data_type") = py::none());
  m.def(
      "run_optimize",
      [](const std::string& config_json, std::optional<std::string> target, std::optional<std::string> sdt,
         std::optional<int> budget, std::optional<std::string> resume, std::optional<std::string> actions) {
        OptimizeArgs a;
        if (target) a.target = *target;
        a.shared_data_type = sdt_of(sdt);
        a.budget = budget;
        if (resume) a.resume = *resume;
        if (actions) a.actions = *actions;
        return run_cmd(config_json, a, cmd_optimize);
      },
      py::arg("config_json"), py::arg("target") = py::none(), py::arg("shared_data_type") = py::none(),
      py::arg("budget") = py::none(), py::arg("resume") = py::none(), py::arg("actions") = py::none());
  m.def(
      "run_extend",
      [](const std::string& config_json, const std::string& optimized, const std::string& profiles, bool generate) {
        return run_cmd(config_json, ExtendArgs{optimized, profiles, generate}, cmd_extend);
      },
      py::arg("config_json"), py::arg("optimized"), py::arg("profiles"), py::arg("generate") = false);
  m.def(
      "run_evaluate",
      [](const std::string& config_json, const std::string& sim, const std::string& ref) {
        return run_cmd(config_json, EvaluateArgs{sim, ref}, cmd_evaluate);
      },
      py::arg("config_json"), py::arg("sim"), py::arg("ref"));
}
