#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include "mobsim/external.hpp"
#include "mobsim/generator.hpp"
#include "mobsim/guidance.hpp"
#include "mobsim/optimizer.hpp"
#include "mobsim/strategist.hpp"

namespace mobsim {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitPartialGeneration = 3, kExitSearch = 4 };

/// Invalid or inconsistent run configuration or command arguments.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PopulationSpec {
  std::optional<std::filesystem::path> promptset;  // load this instead of building the default population
  PopulationOptions options;
  std::map<ParamField, double> scale;  // multiplicative change applied to every prompt
};

struct RunConfig {
  std::uint64_t seed = 42;
  std::filesystem::path out = "mobsim-run";
  GridSpec grid;
  PopulationSpec population;
  std::string backend = "synthetic";  // or "external"
  EndpointConfig endpoint;
  bool external_strategist = false;
  SearchConfig search;
  StrategistConfig strategist;
  SharedDataType shared_data_type = SharedDataType::SD1;
  std::optional<std::filesystem::path> reference;  // reference trajectories
  std::optional<double> mu;
  std::optional<bool> l1_log_coords;
};

/// Missing keys keep their defaults; unknown top-level keys are rejected.
/// The search seed follows `seed` unless the search block sets one.
RunConfig run_config_from_json(const Json& j);
Json to_json(const RunConfig& c);
void validate(const RunConfig& c);
RunConfig load_run_config(const std::filesystem::path& path);

PromptSet build_population(const RunConfig& c);
GenerationBatchResult generate_population(const RunConfig& c, const PromptSet& ps);

struct GenerateArgs {
  bool strict = false;
};
struct MakeTargetArgs {
  std::filesystem::path trajectories;
  std::optional<SharedDataType> shared_data_type;
};
struct OptimizeArgs {
  std::optional<std::filesystem::path> target;
  std::optional<SharedDataType> shared_data_type;
  std::optional<int> budget;
  std::optional<std::filesystem::path> resume;
  std::optional<std::filesystem::path> actions;
};
struct ExtendArgs {
  std::filesystem::path optimized;
  std::filesystem::path profiles;
  bool generate = false;
};
struct EvaluateArgs {
  std::filesystem::path sim;
  std::filesystem::path ref;
};

/// Each command writes into `c.out` (including config.resolved) and returns
/// an exit code. Configuration problems throw ConfigError.
int cmd_generate(const RunConfig& c, const GenerateArgs& a, std::ostream& log);
int cmd_make_target(const RunConfig& c, const MakeTargetArgs& a, std::ostream& log);
int cmd_optimize(const RunConfig& c, const OptimizeArgs& a, std::ostream& log);
int cmd_extend(const RunConfig& c, const ExtendArgs& a, std::ostream& log);
int cmd_evaluate(const RunConfig& c, const EvaluateArgs& a, std::ostream& log);

/// Runs `fn`, mapping configuration and input errors to kExitConfig and any
/// other exception to kExitFailure, with the message on `err`.
int guarded(const std::function<int()>& fn, std::ostream& err);

}  // namespace mobsim
