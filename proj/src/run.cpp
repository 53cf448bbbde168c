#include "mobsim/run.hpp"

#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include "mobsim/evaluation.hpp"
#include "mobsim/io.hpp"
#include "mobsim/prompt_env.hpp"
#include "mobsim/scaleout.hpp"

namespace fs = std::filesystem;

namespace mobsim {

namespace {

Json population_to_json(const PopulationSpec& p) {
  Json j;
  if (p.promptset) j["promptset"] = p.promptset->string();
  j["users"] = p.options.users;
  j["num_days"] = p.options.num_days;
  j["heterogeneous"] = p.options.heterogeneous;
  j["region_center"] = {p.options.region_center.x, p.options.region_center.y};
  j["base"] = to_json(p.options.base);
  Json scale = Json::object();
  for (const auto& [f, v] : p.scale) scale[std::string(to_string(f))] = v;
  j["scale"] = scale;
  return j;
}

PopulationSpec population_from_json(const Json& j) {
  PopulationSpec p;
  if (j.contains("promptset")) p.promptset = j["promptset"].get<std::string>();
  p.options.users = j.value("users", p.options.users);
  p.options.num_days = j.value("num_days", p.options.num_days);
  p.options.heterogeneous = j.value("heterogeneous", p.options.heterogeneous);
  if (j.contains("region_center")) {
    const auto& c = j["region_center"];
    if (!c.is_array() || c.size() != 2) throw std::invalid_argument("population.region_center must be [x, y]");
    p.options.region_center = {c[0].get<std::int32_t>(), c[1].get<std::int32_t>()};
  }
  if (j.contains("base")) p.options.base = params_from_json(j["base"], p.options.base);
  if (j.contains("scale")) {
    for (const auto& [k, v] : j["scale"].items()) p.scale[param_field_from_string(k)] = v.get<double>();
  }
  return p;
}

Json strategist_to_json(const StrategistConfig& s, bool external) {
  return {{"groups", s.groups},
          {"delta", s.delta},
          {"noop_log_gap", s.noop_log_gap},
          {"keep_noop_actions", s.keep_noop_actions},
          {"external", external}};
}

void write_resolved(const RunConfig& c, const Json& command) {
  Json j = to_json(c);
  j["command"] = command;
  write_text_file(c.out / "config.resolved", j.dump(1) + "\n");
}

void write_trajectory_file(const fs::path& path, const std::vector<Trajectory>& ts, const GridSpec& grid) {
  save_trajectories(path, ts, grid);
}

void write_plots(const fs::path& dir, const std::vector<PlotFile>& plots) {
  for (const PlotFile& p : plots) write_text_file(dir / p.name, p.csv);
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

GuidanceConfig with_overrides(GuidanceConfig g, const RunConfig& c) {
  if (c.mu) g.mu = *c.mu;
  if (c.l1_log_coords) g.l1_log_coords = *c.l1_log_coords;
  validate(g);
  return g;
}

}  // namespace

RunConfig run_config_from_json(const Json& j) {
  static const std::set<std::string> kKeys{"seed",     "out",      "grid",     "population", "backend", "endpoint",
                                           "search",   "strategist", "shared_data_type", "reference", "mu",
                                           "l1_log_coords", "command"};
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (!kKeys.contains(k)) throw ConfigError("unknown config key '" + k + "'");
  }
  try {
    RunConfig c;
    c.seed = j.value("seed", c.seed);
    if (j.contains("out")) c.out = j["out"].get<std::string>();
    if (j.contains("grid")) c.grid = grid_from_json(j["grid"]);
    if (j.contains("population")) c.population = population_from_json(j["population"]);
    c.backend = j.value("backend", c.backend);
    if (j.contains("endpoint")) c.endpoint = endpoint_from_json(j["endpoint"]);
    apply_env_overrides(c.endpoint);
    SearchConfig sd;
    sd.seed = c.seed;
    c.search = j.contains("search") ? search_config_from_json(j["search"], sd) : sd;
    if (j.contains("strategist")) {
      const Json& s = j["strategist"];
      c.strategist.groups = s.value("groups", c.strategist.groups);
      c.strategist.delta = s.value("delta", c.strategist.delta);
      c.strategist.noop_log_gap = s.value("noop_log_gap", c.strategist.noop_log_gap);
      c.strategist.keep_noop_actions = s.value("keep_noop_actions", c.strategist.keep_noop_actions);
      c.external_strategist = s.value("external", false);
    }
    if (j.contains("shared_data_type")) {
      c.shared_data_type = shared_data_type_from_string(j["shared_data_type"].get<std::string>());
    }
    if (j.contains("reference")) c.reference = j["reference"].get<std::string>();
    if (j.contains("mu")) c.mu = j["mu"].get<double>();
    if (j.contains("l1_log_coords")) c.l1_log_coords = j["l1_log_coords"].get<bool>();
    validate(c);
    return c;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

Json to_json(const RunConfig& c) {
  Json j;
  j["seed"] = c.seed;
  j["out"] = c.out.string();
  j["grid"] = to_json(c.grid);
  j["population"] = population_to_json(c.population);
  j["backend"] = c.backend;
  j["endpoint"] = to_json(c.endpoint);
  j["search"] = to_json(c.search);
  j["strategist"] = strategist_to_json(c.strategist, c.external_strategist);
  j["shared_data_type"] = std::string(to_string(c.shared_data_type));
  if (c.reference) j["reference"] = c.reference->string();
  if (c.mu) j["mu"] = *c.mu;
  if (c.l1_log_coords) j["l1_log_coords"] = *c.l1_log_coords;
  return j;
}

void validate(const RunConfig& c) {
  try {
    validate(c.grid);
    GeneratorParams base = c.population.options.base;
    if (base.activity == std::array<double, 24>{}) base.activity = default_activity();
    validate(base);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (c.population.options.users == 0) throw ConfigError("config: population.users must be positive");
  if (c.population.options.num_days < 1) throw ConfigError("config: population.num_days must be positive");
  for (const auto& [f, v] : c.population.scale) {
    if (!(v > 0.0)) throw ConfigError("config: population.scale factors must be positive");
  }
  if (c.backend != "synthetic" && c.backend != "external") {
    throw ConfigError("config: backend must be 'synthetic' or 'external'");
  }
  if ((c.backend == "external" || c.external_strategist) && c.endpoint.url.empty()) {
    throw ConfigError("config: the external backend needs endpoint.url (or MOBSIM_ENDPOINT)");
  }
  if (c.strategist.groups < 1) throw ConfigError("config: strategist.groups must be positive");
  if (!(c.strategist.delta > 0.0 && c.strategist.delta < 1.0)) {
    throw ConfigError("config: strategist.delta must be in (0, 1)");
  }
  if (c.mu && !(*c.mu >= 0.0 && *c.mu <= 1.0)) throw ConfigError("config: mu must be in [0, 1]");
}

RunConfig load_run_config(const fs::path& path) {
  Json j;
  try {
    j = read_json_file(path);
  } catch (const std::exception& e) {
    throw ConfigError("cannot read config " + path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

PromptSet build_population(const RunConfig& c) {
  PromptSet ps = c.population.promptset ? load_promptset(*c.population.promptset)
                                        : default_population(c.population.options, c.seed);
  for (auto& [id, doc] : ps.prompts) {
    for (const auto& [f, v] : c.population.scale) scale_clamped(doc.params, f, v);
  }
  return ps;
}

GenerationBatchResult generate_population(const RunConfig& c, const PromptSet& ps) {
  if (c.backend == "external") {
    HttpChatBackend backend(c.endpoint);
    return generate_external(ps, c.grid, backend, c.endpoint);
  }
  return generate_synthetic(ps, c.grid, c.seed);
}

int cmd_generate(const RunConfig& c, const GenerateArgs& a, std::ostream& log) {
  fs::create_directories(c.out / "promptsets");
  fs::create_directories(c.out / "trajectories");
  write_resolved(c, {{"name", "generate"}, {"strict", a.strict}});

  const PromptSet ps = build_population(c);
  save_promptset(c.out / "promptsets" / "initial.json", ps);
  const GenerationBatchResult res = generate_population(c, ps);
  write_trajectory_file(c.out / "trajectories" / "generated.csv", res.trajectories(), c.grid);

  std::ostringstream status;
  status << "user_id,status,attempts,message\n";
  for (const auto& [id, u] : res.users) {
    std::string msg = u.message;
    for (char& ch : msg) {
      if (ch == ',' || ch == '\n' || ch == '\r') ch = ' ';
    }
    status << id << ',' << to_string(u.status) << ',' << u.attempts << ',' << msg << '\n';
    if (u.status != GenerationStatus::Ok) log << "user " << id << ": " << to_string(u.status) << ": " << u.message << "\n";
  }
  write_text_file(c.out / "generation.csv", status.str());

  const std::size_t failed = res.failures();
  log << "generated " << res.users.size() - failed << " of " << res.users.size() << " users into " << c.out.string()
      << "\n";
  if (failed > 0 && a.strict) return kExitPartialGeneration;
  return kExitOk;
}

int cmd_make_target(const RunConfig& c, const MakeTargetArgs& a, std::ostream& log) {
  const SharedDataType type = a.shared_data_type.value_or(c.shared_data_type);
  const auto ref = load_trajectories(a.trajectories, c.grid);
  GuidanceConfig target;
  try {
    target = with_overrides(make_target(type, ref, c.grid), c);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const FitError& e) {
    throw ConfigError(std::string("reference data cannot support this target: ") + e.what());
  }
  fs::create_directories(c.out);
  RunConfig resolved = c;
  resolved.shared_data_type = type;
  write_resolved(resolved, {{"name", "make-target"}, {"trajectories", a.trajectories.string()}});
  save_target(c.out / "target.json", target);
  log << "target (" << to_string(type) << ") with " << target.objectives.size() << " objectives written to "
      << (c.out / "target.json").string() << "\n";
  for (const ObjectiveSpec& o : target.objectives) {
    log << "  " << to_string(o.measure) << ": ";
    if (o.kind == DistanceKind::Vector) {
      log << o.target.samples.size() << " samples\n";
    } else {
      log << fmt(o.target_scalar) << "\n";
    }
  }
  return kExitOk;
}

int cmd_optimize(const RunConfig& c_in, const OptimizeArgs& a, std::ostream& log) {
  RunConfig c = c_in;
  if (a.resume) {
    c = load_run_config(*a.resume / "config.resolved");
    c.out = *a.resume;
  }
  if (a.budget) c.search.total_simulations = *a.budget;
  if (a.shared_data_type) c.shared_data_type = *a.shared_data_type;
  const fs::path dir = c.out;

  GuidanceConfig target;
  if (a.resume) {
    target = load_target(dir / "target.json");
  } else if (a.target) {
    target = load_target(*a.target);
    if (a.shared_data_type && target.shared_data_type != *a.shared_data_type) {
      throw ConfigError("--shared-data-type " + std::string(to_string(*a.shared_data_type)) +
                        " does not match the target file (" + std::string(to_string(target.shared_data_type)) + ")");
    }
    c.shared_data_type = target.shared_data_type;
  } else if (c.reference) {
    try {
      target = make_target(c.shared_data_type, load_trajectories(*c.reference, c.grid), c.grid);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  } else {
    throw ConfigError("optimize needs --target or a reference trajectory file in the config");
  }
  target = with_overrides(target, c);

  fs::create_directories(dir / "promptsets" / "states");
  fs::create_directories(dir / "trajectories");
  fs::create_directories(dir / "plots");
  const PromptSet root = a.resume ? load_promptset(dir / "promptsets" / "root.json") : build_population(c);
  if (!a.resume) {
    save_promptset(dir / "promptsets" / "root.json", root);
    save_target(dir / "target.json", target);
  }

  PromptEnvOptions opts;
  opts.grid = c.grid;
  opts.guidance = target;
  opts.k_percent = c.search.k_percent;
  opts.seed = c.seed;
  opts.state_dir = dir / "promptsets" / "states";
  std::unique_ptr<HttpChatBackend> chat;
  if (c.backend == "external") {
    chat = std::make_unique<HttpChatBackend>(c.endpoint);
    opts.generate = [&](const PromptSet& ps) { return generate_external(ps, c.grid, *chat, c.endpoint); };
  }

  std::optional<PromptEnvironment> env;
  try {
    env.emplace(root, opts);
  } catch (const SearchError& e) {
    log << "search failed: " << e.what() << "\n";
    return kExitSearch;
  }

  std::vector<AdjustmentAction> actions;
  if (a.resume) {
    actions = actions_from_json(read_json_file(dir / "actions.json"));
  } else if (a.actions) {
    try {
      actions = actions_from_json(read_json_file(*a.actions));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("actions: ") + e.what());
    }
  } else {
    const GapReport gap = analyze_gaps(target, env->state(env->root()).population, c.strategist);
    if (c.external_strategist) {
      HttpChatBackend backend(c.endpoint);
      std::string warning;
      actions = build_action_space_external(gap, target, backend, c.strategist, &warning);
      if (!warning.empty()) log << "strategist: " << warning << "\n";
    } else {
      actions = build_action_space(gap, target, c.strategist);
    }
  }
  if (actions.empty()) {
    log << "search failed: no adjustment actions (every group is already within the no-op band)\n";
    return kExitSearch;
  }
  env->set_actions(actions);
  write_text_file(dir / "actions.json", actions_to_json(actions).dump(1) + "\n");

  if (static_cast<std::size_t>(c.search.candidates_per_step) > actions.size()) {
    log << "note: candidates_per_step lowered to the " << actions.size() << " available actions\n";
    c.search.candidates_per_step = static_cast<int>(actions.size());
  }
  try {
    validate(c.search, actions.size());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  write_resolved(c, {{"name", "optimize"},
                     {"target", a.target ? a.target->string() : ""},
                     {"resumed", a.resume.has_value()}});

  std::optional<SearchState> resume_state;
  if (a.resume && fs::exists(dir / "snapshot.json")) {
    resume_state = snapshot_from_json(read_json_file(dir / "snapshot.json"), *env);
    log << "resuming after " << resume_state->iterations_done << " iterations\n";
  }

  const auto persist = [&](const SearchState& s, Environment& e) {
    write_text_file(dir / "snapshot.json", snapshot_to_json(s, e).dump() + "\n");
    write_text_file(dir / "trace.txt", format_trace(s, e));
  };
  SearchResult result;
  try {
    result = run_search(*env, c.search, std::move(resume_state), persist);
  } catch (const SearchError& e) {
    log << "search failed: " << e.what() << "\n";
    return kExitSearch;
  }
  persist(result.state, *env);

  const StateId best = result.best;
  save_promptset(dir / "promptsets" / "best.json", env->state(best).prompts);
  write_trajectory_file(dir / "trajectories" / "root.csv", env->trajectories(env->root()), c.grid);
  write_trajectory_file(dir / "trajectories" / "best.csv", env->trajectories(best), c.grid);

  std::ostringstream report;
  report << "state,key,R";
  for (const ObjectiveSpec& o : target.objectives) report << ",g_" << to_string(o.measure);
  report << "\n";
  for (const auto& [label, s] : {std::pair{"root", env->root()}, std::pair{"best", best}}) {
    const EvaluatedState& st = env->state(s);
    report << label << ',' << st.key << ',' << fmt(st.R);
    for (double g : st.gs) report << ',' << fmt(g);
    report << "\n";
  }
  write_text_file(dir / "report.csv", report.str());

  std::ostringstream progress;
  progress << "iteration,best_R\n";
  double running = result.root_r;
  int last_iter = -1;
  for (const TraceEvent& ev : result.state.trace) {
    if (ev.ok && (ev.kind == TraceKind::Warmup || ev.kind == TraceKind::Child || ev.kind == TraceKind::Rollout)) {
      running = std::min(running, ev.r_value);
    }
    if (ev.iteration != last_iter && last_iter >= 0) progress << last_iter << ',' << fmt(running) << "\n";
    last_iter = ev.iteration;
  }
  if (last_iter >= 0) progress << last_iter << ',' << fmt(running) << "\n";
  write_text_file(dir / "plots" / "search_progress.csv", progress.str());

  if (c.reference) {
    const auto ref = load_trajectories(*c.reference, c.grid);
    const auto root_t = env->trajectories(env->root());
    const auto best_t = env->trajectories(best);
    const EvaluationReport er_root = evaluate(root_t, ref, c.grid);
    const EvaluationReport er_best = evaluate(best_t, ref, c.grid);
    std::ostringstream ev;
    ev << "metric,root,best\n";
    for (const MetricResult& m : er_best.metrics) {
      const MetricResult* r0 = er_root.find(m.name);
      ev << m.name << ',' << (r0 && r0->value ? fmt(*r0->value) : "") << ',' << (m.value ? fmt(*m.value) : "") << "\n";
    }
    write_text_file(dir / "evaluation.csv", ev.str());
    write_plots(dir / "plots", plot_data(best_t, ref, c.grid));
  }

  log << "iterations " << result.state.iterations_done << ", states " << env->num_states() << ", failed evaluations "
      << result.state.failed_evaluations << ", aborted iterations " << result.state.aborted_iterations << "\n";
  log << "root R " << fmt(result.root_r) << ", best R " << fmt(result.best_r) << " (ratio "
      << fmt(result.root_r > 0.0 ? result.best_r / result.root_r : 1.0) << ")\n";
  return kExitOk;
}

int cmd_extend(const RunConfig& c, const ExtendArgs& a, std::ostream& log) {
  const PromptSet optimized = load_promptset(a.optimized);
  const auto profiles = load_profiles(a.profiles);
  std::unique_ptr<HttpEmbeddingBackend> embed;
  if (c.backend == "external" && !c.endpoint.embedding_url.empty()) embed = std::make_unique<HttpEmbeddingBackend>(c.endpoint);
  ExtendResult res;
  try {
    res = extend(optimized, profiles, embed.get());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  fs::create_directories(c.out / "promptsets");
  write_resolved(c, {{"name", "extend"},
                     {"optimized", a.optimized.string()},
                     {"profiles", a.profiles.string()},
                     {"generate", a.generate}});
  save_promptset(c.out / "promptsets" / "extended.json", res.prompts);
  std::ostringstream map;
  map << "user_id,source_prompt\n";
  for (const auto& [u, s] : res.source) map << u << ',' << s << "\n";
  write_text_file(c.out / "extension.csv", map.str());
  log << "extended " << optimized.prompts.size() << " prompts to " << res.prompts.prompts.size() << " users (m = " << res.m
      << ", " << res.remainder << " placed by nearest prompt)\n";
  if (a.generate) {
    fs::create_directories(c.out / "trajectories");
    const GenerationBatchResult gen = generate_population(c, res.prompts);
    write_trajectory_file(c.out / "trajectories" / "extended.csv", gen.trajectories(), c.grid);
    if (gen.failures() > 0) log << gen.failures() << " users failed to generate\n";
  }
  return kExitOk;
}

int cmd_evaluate(const RunConfig& c, const EvaluateArgs& a, std::ostream& log) {
  const auto sim = load_trajectories(a.sim, c.grid);
  const auto ref = load_trajectories(a.ref, c.grid);
  const EvaluationReport r = evaluate(sim, ref, c.grid);
  fs::create_directories(c.out / "plots");
  write_resolved(c, {{"name", "evaluate"}, {"sim", a.sim.string()}, {"ref", a.ref.string()}});
  write_text_file(c.out / "report.csv", report_csv(r));
  write_plots(c.out / "plots", plot_data(sim, ref, c.grid));
  if (!r.user_level) log << "user ids missing: user-level metrics skipped\n";
  for (const MetricResult& m : r.metrics) {
    log << std::left << std::setw(22) << m.name << ' ' << (m.value ? fmt(*m.value) : "n/a (" + m.note + ")") << "\n";
  }
  return kExitOk;
}

int guarded(const std::function<int()>& fn, std::ostream& err) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Json::exception& e) {
    err << "error: malformed JSON: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const SearchError& e) {
    err << "search failed: " << e.what() << "\n";
    return kExitSearch;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace mobsim
