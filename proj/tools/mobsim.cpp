#include <CLI11.hpp>
#include <iostream>

#include "mobsim/io.hpp"
#include "mobsim/run.hpp"

using namespace mobsim;

namespace {

SharedDataType parse_sdt(const std::string& s) {
  try {
    return shared_data_type_from_string(s);
  } catch (const std::exception&) {
    throw ConfigError("unknown shared data type '" + s + "' (expected sd1, sd2 or sd3)");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mobility-measure guided prompt optimization for synthetic trajectory generation"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  app.add_option("--config", config_path, "Run configuration (JSON)");
  app.add_option("--seed", seed, "Master seed");
  app.add_option("--out", out, "Run directory");

  auto* gen = app.add_subcommand("generate", "Build the population prompts and generate trajectories");
  GenerateArgs ga;
  gen->add_flag("--strict", ga.strict, "Exit with status 3 if any user fails");

  auto* mt = app.add_subcommand("make-target", "Derive guidance targets from reference trajectories");
  MakeTargetArgs ma;
  std::string mt_sdt;
  mt->add_option("--trajectories", ma.trajectories, "Reference trajectory CSV")->required();
  mt->add_option("--shared-data-type", mt_sdt, "sd1, sd2 or sd3");

  auto* opt = app.add_subcommand("optimize", "Search prompt adjustments that bring the simulation to the target");
  OptimizeArgs oa;
  std::string opt_sdt;
  std::string target;
  std::string resume;
  std::string actions;
  std::optional<int> budget;
  opt->add_option("--shared-data-type", opt_sdt, "sd1, sd2 or sd3");
  opt->add_option("--target", target, "Target file from make-target");
  opt->add_option("--budget", budget, "Total simulations");
  opt->add_option("--resume", resume, "Continue a previous run directory");
  opt->add_option("--actions", actions, "Action space file (skips the strategist)");

  auto* ext = app.add_subcommand("extend", "Extend optimized prompts to a full population by profile similarity");
  ExtendArgs ea;
  ext->add_option("--optimized", ea.optimized, "Optimized prompt set")->required();
  ext->add_option("--profiles", ea.profiles, "Full-population profiles CSV")->required();
  ext->add_flag("--generate", ea.generate, "Also generate trajectories for the extended population");

  auto* ev = app.add_subcommand("evaluate", "Compare simulated and reference trajectories");
  EvaluateArgs va;
  ev->add_option("--sim", va.sim, "Simulated trajectory CSV")->required();
  ev->add_option("--ref", va.ref, "Reference trajectory CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  return guarded(
      [&]() -> int {
        RunConfig cfg = config_path.empty() ? run_config_from_json(Json::object()) : load_run_config(config_path);
        if (seed) {
          cfg.seed = *seed;
          cfg.search.seed = *seed;
        }
        if (!out.empty()) cfg.out = out;
        validate(cfg);

        if (*gen) return cmd_generate(cfg, ga, std::cout);
        if (*mt) {
          if (!mt_sdt.empty()) ma.shared_data_type = parse_sdt(mt_sdt);
          return cmd_make_target(cfg, ma, std::cout);
        }
        if (*opt) {
          if (!opt_sdt.empty()) oa.shared_data_type = parse_sdt(opt_sdt);
          if (!target.empty()) oa.target = target;
          if (!resume.empty()) oa.resume = resume;
          if (!actions.empty()) oa.actions = actions;
          oa.budget = budget;
          return cmd_optimize(cfg, oa, std::cout);
        }
        if (*ext) return cmd_extend(cfg, ea, std::cout);
        return cmd_evaluate(cfg, va, std::cout);
      },
      std::cerr);
}
