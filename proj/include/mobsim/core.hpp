#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace mobsim {

/// Integer grid coordinate. Indices are non-negative for any cell that
/// appears in a trajectory.
struct Cell {
  std::int32_t x = 0;
  std::int32_t y = 0;

  friend auto operator<=>(const Cell&, const Cell&) = default;
};

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;
};

/// Spatial and temporal discretization shared by every trajectory of a run.
struct GridSpec {
  double cell_size_m = 500.0;
  LatLon origin{};  // south-west corner of cell (0,0)
  int slots_per_day = 48;

  [[nodiscard]] double slot_seconds() const { return 86400.0 / slots_per_day; }
  [[nodiscard]] int hour_of_slot(std::int64_t slot) const {
    const auto in_day = static_cast<int>(slot % slots_per_day);
    return in_day * 24 / slots_per_day;
  }
};

/// Throws std::invalid_argument when the grid breaks its invariants.
void validate(const GridSpec& grid);

struct Stay {
  Cell cell{};
  std::int64_t start_slot = 0;
  std::int64_t duration_slots = 1;

  [[nodiscard]] std::int64_t end_slot() const { return start_slot + duration_slots; }
  friend bool operator==(const Stay&, const Stay&) = default;
};

struct Trajectory {
  std::optional<std::string> user_id;
  std::vector<Stay> stays;
  int num_days = 1;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Checks ordering, non-overlap and the day bound.
void validate(const Trajectory& t, const GridSpec& grid);

using AttributeValue = std::variant<std::string, double>;

struct UserProfile {
  std::string id;
  std::vector<std::pair<std::string, AttributeValue>> attributes;

  [[nodiscard]] const AttributeValue* find(std::string_view key) const;
  friend bool operator==(const UserProfile&, const UserProfile&) = default;
};

/// Behavioral knobs of the synthetic generator. One block per individual,
/// carried inside the individual's prompt.
struct GeneratorParams {
  double jump_beta = 1.75;
  double jump_kappa_m = 400'000.0;
  double dur_beta = 1.0;
  double dur_kappa_slots = 12.0;
  double explore_rho = 0.6;
  double explore_gamma = 0.4;
  double home_bias = 0.8;  // probability of heading home on a quiet-hour move
  Cell home_cell{};
  std::array<double, 24> activity{};
  int num_days = 7;

  friend bool operator==(const GeneratorParams&, const GeneratorParams&) = default;
};

/// Daytime-heavy activity curve used when nothing else is specified.
std::array<double, 24> default_activity();

void validate(const GeneratorParams& params);

enum class ParamField { JumpBeta, JumpKappa, DurBeta, DurKappa, ExploreRho, ExploreGamma, HomeBias };

inline constexpr std::array<ParamField, 7> kAllParamFields = {
    ParamField::JumpBeta,   ParamField::JumpKappa,    ParamField::DurBeta, ParamField::DurKappa,
    ParamField::ExploreRho, ParamField::ExploreGamma, ParamField::HomeBias};

std::string_view to_string(ParamField field);
ParamField param_field_from_string(std::string_view name);

double get(const GeneratorParams& params, ParamField field);
void set(GeneratorParams& params, ParamField field, double value);

/// Multiplies one field and clamps it back into its valid range.
void scale_clamped(GeneratorParams& params, ParamField field, double factor);

struct PromptDoc {
  UserProfile profile;
  std::string base_text;
  std::vector<std::string> constraints;
  std::string persona;
  GeneratorParams params;
  std::uint32_t revision = 0;

  friend bool operator==(const PromptDoc&, const PromptDoc&) = default;
};

/// The search state: one prompt per individual, keyed by user id.
struct PromptSet {
  std::map<std::string, PromptDoc> prompts;
  std::uint64_t seed = 0;

  friend bool operator==(const PromptSet&, const PromptSet&) = default;
};

/// Hex digest of the canonical serialization; used as the persisted state key.
std::string content_hash(const PromptSet& ps);

}  // namespace mobsim
