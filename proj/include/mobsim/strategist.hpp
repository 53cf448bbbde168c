#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mobsim/core.hpp"
#include "mobsim/external.hpp"
#include "mobsim/guidance.hpp"
#include "mobsim/io.hpp"

namespace mobsim {

/// Users whose value of `measure` lies in [lower, upper).
struct GroupPredicate {
  MeasureId measure = MeasureId::Radius;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();

  [[nodiscard]] bool contains(double v) const { return v >= lower && v < upper; }
  friend bool operator==(const GroupPredicate&, const GroupPredicate&) = default;
};

struct ParamDelta {
  ParamField field = ParamField::JumpKappa;
  double factor = 1.0;
  friend bool operator==(const ParamDelta&, const ParamDelta&) = default;
};

struct AdjustmentAction {
  std::string id;
  MeasureId measure = MeasureId::Radius;  // objective that motivated the action
  GroupPredicate group;
  std::string directive;
  std::vector<ParamDelta> deltas;
  double target_share = 0.0;

  /// True when every factor is 1.
  [[nodiscard]] bool is_noop() const;
  friend bool operator==(const AdjustmentAction&, const AdjustmentAction&) = default;
};

void validate(const AdjustmentAction& a);

/// Per-user quantity used to group individuals for a measure; nullopt when the
/// user has no value (e.g. too few locations for a zeta fit).
std::optional<double> user_group_value(MeasureId measure, const UserMeasures& u);
/// Which per-user quantity groups the users for an objective.
MeasureId grouping_measure(MeasureId objective);

struct GroupGap {
  GroupPredicate group;
  std::size_t members = 0;
  double sim_level = 0.0;     // simulated value at the group's mid quantile
  double target_level = 0.0;  // target value at the same quantile (vector objectives)
  double log_gap = 0.0;       // log(sim / target); positive means the group overshoots
  double target_share = 0.0;
};

struct ObjectiveGap {
  MeasureId measure = MeasureId::Radius;
  DistanceKind kind = DistanceKind::Vector;
  Ccdf sim_ccdf;
  Ccdf target_ccdf;
  double sim_scalar = 0.0;
  double target_scalar = 0.0;
  std::vector<GroupGap> groups;
  std::vector<std::string> descriptors;
  std::string skipped;  // non-empty when the objective could not be analysed
};

struct GapReport {
  std::vector<ObjectiveGap> objectives;
};

struct StrategistConfig {
  int groups = 5;
  double delta = 0.2;             // multiplicative step per application
  double noop_log_gap = 0.05;     // |log gap| below this leaves a group alone
  bool keep_noop_actions = false;
};

GapReport analyze_gaps(const GuidanceConfig& cfg, const PopulationSample& sim, const StrategistConfig& sc = {});

/// Rule-based action space: one action per (objective, quantile group),
/// deduplicated on (measure, group) and ordered by objective then group.
std::vector<AdjustmentAction> build_action_space(const GapReport& gap, const GuidanceConfig& cfg,
                                                 const StrategistConfig& sc = {});

/// Analysis prompt in the diagnosis / groups table / strategy layout.
std::vector<ChatMessage> render_strategy_prompt(const GapReport& gap, const GuidanceConfig& cfg);

/// Parses a Markdown groups table (Group Name | Range | Description | Target %)
/// and maps directive phrases to parameter deltas. Returns nullopt when no
/// usable table is present.
std::optional<std::vector<AdjustmentAction>> parse_strategy_reply(const std::string& reply, MeasureId measure,
                                                                  const StrategistConfig& sc = {});

/// Known directive phrases and the deltas they map to.
std::vector<ParamDelta> deltas_for_directive(const std::string& text, double delta);

/// Asks the backend for groups and strategies for the first objective; falls
/// back to build_action_space when the call fails or the reply is unusable.
std::vector<AdjustmentAction> build_action_space_external(const GapReport& gap, const GuidanceConfig& cfg,
                                                          ChatBackend& backend, const StrategistConfig& sc = {},
                                                          std::string* warning = nullptr);

struct ApplyResult {
  PromptSet prompts;
  std::vector<std::string> selected;
  bool noop = false;  // the group was empty
};

/// Selects ceil(k% of the group) members uniformly (seeded) from the measured
/// population and applies the deltas to their prompts.
ApplyResult apply_action(const PromptSet& ps, const AdjustmentAction& a, const PopulationSample& measured,
                         double k_percent, std::uint64_t seed);

Json to_json(const AdjustmentAction& a);
AdjustmentAction action_from_json(const Json& j);
Json actions_to_json(const std::vector<AdjustmentAction>& actions);
std::vector<AdjustmentAction> actions_from_json(const Json& j);

}  // namespace mobsim
