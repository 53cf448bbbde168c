#pragma once

#include <initializer_list>
#include <string>
#include <vector>

#include "mobsim/core.hpp"
#include "mobsim/rng.hpp"

namespace mobsim::testing {

/// Contiguous stays, one per cell, each `dur` slots long.
inline Trajectory chain(std::initializer_list<Cell> cells, std::int64_t dur = 1, std::string id = "u") {
  Trajectory t;
  t.user_id = std::move(id);
  std::int64_t slot = 0;
  for (Cell c : cells) {
    t.stays.push_back({c, slot, dur});
    slot += dur;
  }
  t.num_days = static_cast<int>(slot / 48 + 1);
  return t;
}

inline Trajectory chain(const std::vector<Cell>& cells, std::int64_t dur = 1, std::string id = "u") {
  Trajectory t;
  t.user_id = std::move(id);
  std::int64_t slot = 0;
  for (Cell c : cells) {
    t.stays.push_back({c, slot, dur});
    slot += dur;
  }
  t.num_days = static_cast<int>(slot / 48 + 1);
  return t;
}

/// Random walk over a small box with random durations; consecutive cells differ.
inline Trajectory random_trajectory(Rng& rng, std::size_t n_stays, std::int32_t box = 20,
                                    std::string id = "u") {
  Trajectory t;
  t.user_id = std::move(id);
  std::int64_t slot = 0;
  Cell prev{-1, -1};
  for (std::size_t i = 0; i < n_stays; ++i) {
    Cell c;
    do {
      c = {static_cast<std::int32_t>(rng.below(box)), static_cast<std::int32_t>(rng.below(box))};
    } while (c == prev);
    const auto dur = static_cast<std::int64_t>(1 + rng.below(6));
    t.stays.push_back({c, slot, dur});
    slot += dur;
    prev = c;
  }
  t.num_days = static_cast<int>(slot / 48 + 1);
  return t;
}

}  // namespace mobsim::testing
