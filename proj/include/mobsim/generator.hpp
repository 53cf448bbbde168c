#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mobsim/core.hpp"

namespace mobsim {

enum class GenerationStatus { Ok, ParseFailure, BackendError, InvalidParams };

std::string_view to_string(GenerationStatus s);

struct UserGeneration {
  GenerationStatus status = GenerationStatus::Ok;
  std::optional<Trajectory> trajectory;
  std::string message;
  int attempts = 0;
};

struct GenerationBatchResult {
  std::map<std::string, UserGeneration> users;

  [[nodiscard]] std::size_t failures() const;
  /// Successful trajectories in user-id order.
  [[nodiscard]] std::vector<Trajectory> trajectories() const;
};

/// One individual's stay sequence under exploration / preferential return.
/// Pure function of (user id, params, grid, seed).
Trajectory generate_user(const std::string& user_id, const GeneratorParams& params, const GridSpec& grid,
                         std::uint64_t seed);

GenerationBatchResult generate_synthetic(const PromptSet& ps, const GridSpec& grid, std::uint64_t seed);

struct PopulationOptions {
  std::size_t users = 100;
  int num_days = 7;
  GeneratorParams base{};  // home_cell and activity are filled per user
  Cell region_center{4000, 4000};
  bool heterogeneous = true;  // scale knobs by occupation and age band
};

/// Seeded synthetic population: categorical profiles (age band, occupation,
/// home district) and a prompt per individual.
PromptSet default_population(const PopulationOptions& opts, std::uint64_t seed);

}  // namespace mobsim
