#pragma once

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mobsim/optimizer.hpp"

namespace mobsim::testing {

/// Walk on the integer line: action a moves by deltas[a], R = |pos - goal|.
/// States are keyed by position, so different paths can share a state.
class LineEnv : public Environment {
 public:
  LineEnv(std::vector<int> deltas, int goal, std::set<std::size_t> failing = {})
      : deltas_(std::move(deltas)), goal_(goal), failing_(std::move(failing)) {
    id_of(0);
  }

  StateId root() override { return 0; }
  double R(StateId s) override { return std::abs(pos_.at(s) - goal_); }
  [[nodiscard]] std::size_t num_actions() const override { return deltas_.size(); }
  [[nodiscard]] std::string action_name(std::size_t a) const override { return "move" + std::to_string(deltas_.at(a)); }
  std::optional<StateId> step(StateId s, std::size_t a) override {
    ++steps;
    if (failing_.contains(a)) return std::nullopt;
    return id_of(pos_.at(s) + deltas_.at(a));
  }
  std::string key(StateId s) override { return "p" + std::to_string(pos_.at(s)); }
  StateId from_key(const std::string& k) override { return id_of(std::stoi(k.substr(1))); }

  int position(StateId s) const { return pos_.at(s); }
  std::size_t steps = 0;

 private:
  StateId id_of(int p) {
    auto [it, inserted] = ids_.try_emplace(p, pos_.size());
    if (inserted) pos_.push_back(p);
    return it->second;
  }

  std::vector<int> deltas_;
  int goal_;
  std::set<std::size_t> failing_;
  std::map<int, StateId> ids_;
  std::vector<int> pos_;
};

}  // namespace mobsim::testing
