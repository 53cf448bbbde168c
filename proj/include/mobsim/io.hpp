#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mobsim/core.hpp"
#include "mobsim/guidance.hpp"

namespace mobsim {

using Json = nlohmann::ordered_json;

/// Malformed input file; carries the 1-based line (0 when not line oriented).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line) : std::runtime_error(what), line_(line) {}
  [[nodiscard]] std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Trajectory CSV: user_id,day,start_slot,duration_slots,cell_x,cell_y
// start_slot is the slot within `day`; an empty user_id marks an anonymous trajectory.
void write_trajectories_csv(std::ostream& os, std::span<const Trajectory> ts, const GridSpec& grid);
std::vector<Trajectory> read_trajectories_csv(std::istream& is, const GridSpec& grid);
void save_trajectories(const std::filesystem::path& path, std::span<const Trajectory> ts, const GridSpec& grid);
std::vector<Trajectory> load_trajectories(const std::filesystem::path& path, const GridSpec& grid);

Json to_json(const GridSpec& g);
GridSpec grid_from_json(const Json& j);
Json to_json(const GeneratorParams& p);
GeneratorParams params_from_json(const Json& j, const GeneratorParams& defaults = {});
Json to_json(const UserProfile& p);
UserProfile profile_from_json(const Json& j);
Json to_json(const PromptDoc& d);
PromptDoc prompt_from_json(const Json& j);
Json to_json(const PromptSet& ps);
PromptSet promptset_from_json(const Json& j);
void save_promptset(const std::filesystem::path& path, const PromptSet& ps);
PromptSet load_promptset(const std::filesystem::path& path);

/// Target file: shared-data type, mu/epsilons and one entry per objective.
Json to_json(const GuidanceConfig& cfg);
GuidanceConfig guidance_from_json(const Json& j);
void save_target(const std::filesystem::path& path, const GuidanceConfig& cfg);
GuidanceConfig load_target(const std::filesystem::path& path);

/// Profiles CSV: `id,key1,key2,...`; cells that parse as numbers become numeric.
std::vector<UserProfile> read_profiles_csv(std::istream& is);
void write_profiles_csv(std::ostream& os, std::span<const UserProfile> profiles);
std::vector<UserProfile> load_profiles(const std::filesystem::path& path);

Json read_json_file(const std::filesystem::path& path);
/// Writes through a temporary file and renames, so readers never see a torn file.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace mobsim
