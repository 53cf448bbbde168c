#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>

#include "mobsim/generator.hpp"
#include "mobsim/guidance.hpp"
#include "mobsim/optimizer.hpp"
#include "mobsim/strategist.hpp"

namespace mobsim {

using GenerateFn = std::function<GenerationBatchResult(const PromptSet&)>;

struct PromptEnvOptions {
  GridSpec grid;
  GuidanceConfig guidance;
  std::vector<AdjustmentAction> actions;
  double k_percent = 10.0;
  std::uint64_t seed = 0;
  GenerateFn generate;  // synthetic generator with `seed` when empty
  std::optional<std::filesystem::path> state_dir;  // prompt sets persisted as <hash>.json
};

struct EvaluatedState {
  PromptSet prompts;
  std::string key;
  PopulationSample population;
  std::vector<double> gs;
  double R = 0.0;
};

/// Search environment over prompt sets: a step applies an adjustment action,
/// regenerates only the users whose prompt changed, and scores the new state.
class PromptEnvironment : public Environment {
 public:
  PromptEnvironment(PromptSet root, PromptEnvOptions opts);

  StateId root() override { return 0; }
  double R(StateId s) override { return states_.at(s).R; }
  [[nodiscard]] std::size_t num_actions() const override { return opts_.actions.size(); }
  [[nodiscard]] std::string action_name(std::size_t a) const override { return opts_.actions.at(a).id; }
  std::optional<StateId> step(StateId s, std::size_t action) override;
  std::string key(StateId s) override { return states_.at(s).key; }
  StateId from_key(const std::string& key) override;

  /// Replaces the action space; only allowed before the first step.
  void set_actions(std::vector<AdjustmentAction> actions);
  [[nodiscard]] const std::vector<AdjustmentAction>& actions() const { return opts_.actions; }

  [[nodiscard]] const EvaluatedState& state(StateId s) const { return states_.at(s); }
  [[nodiscard]] std::vector<Trajectory> trajectories(StateId s) const;
  [[nodiscard]] std::size_t generated_users() const { return generated_users_; }
  [[nodiscard]] std::size_t num_states() const { return states_.size(); }
  /// Reason of the most recent failed evaluation.
  [[nodiscard]] const std::string& last_error() const { return last_error_; }

 private:
  struct CachedUser {
    Trajectory trajectory;
    UserMeasures measures;
  };

  std::optional<StateId> add_state(PromptSet ps);
  static std::uint64_t user_key(const PromptDoc& doc);

  PromptEnvOptions opts_;
  std::vector<EvaluatedState> states_;
  std::map<std::string, StateId> index_;
  std::map<std::pair<StateId, std::size_t>, std::optional<StateId>> transitions_;
  std::map<std::uint64_t, CachedUser> users_;
  std::size_t generated_users_ = 0;
  std::string last_error_;
};

}  // namespace mobsim
