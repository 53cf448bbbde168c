#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mobsim/io.hpp"

namespace mobsim {

struct SearchConfig {
  int max_depth = 10;
  int candidates_per_step = 3;
  int total_simulations = 50;
  double c = 1.4;
  double c_g = 1.0;
  int rollout_length = 3;
  double k_percent = 10.0;
  std::uint64_t seed = 0;
};

void validate(const SearchConfig& cfg, std::size_t num_actions);
Json to_json(const SearchConfig& cfg);
SearchConfig search_config_from_json(const Json& j, const SearchConfig& defaults = {});

/// Q + c * sqrt(ln(N(s) + 1) / (N(s,a) + 1)).
double uct_score(double q, double c, std::size_t n_s, std::size_t n_sa);

struct GlobalActionStats {
  std::vector<double> q;  // running mean of immediate rewards
  std::vector<std::size_t> n;
  std::vector<std::size_t> failures;

  explicit GlobalActionStats(std::size_t num_actions = 0) : q(num_actions, 0.0), n(num_actions, 0), failures(num_actions, 0) {}
  void record(std::size_t action, double reward);
  [[nodiscard]] std::size_t total() const;
  [[nodiscard]] double ucb(std::size_t action, double c_g) const;
};

/// Top-n of `actions` by global UCB; ties go to the lower action index.
std::vector<std::size_t> global_filter(const GlobalActionStats& stats, std::span<const std::size_t> actions,
                                       std::size_t n, double c_g);

using StateId = std::size_t;

/// What the search needs from the problem: states with an aggregate
/// discrepancy R and a deterministic transition per (state, action).
class Environment {
 public:
  virtual ~Environment() = default;
  virtual StateId root() = 0;
  virtual double R(StateId s) = 0;
  [[nodiscard]] virtual std::size_t num_actions() const = 0;
  [[nodiscard]] virtual std::string action_name(std::size_t a) const = 0;
  /// nullopt when the transition could not be evaluated.
  virtual std::optional<StateId> step(StateId s, std::size_t action) = 0;
  /// Stable key of a state, and the inverse used when resuming.
  virtual std::string key(StateId s) = 0;
  virtual StateId from_key(const std::string& key) = 0;
};

struct EdgeStats {
  std::vector<double> returns;  // one future cumulative reward per rollout through the edge
  [[nodiscard]] double q() const;
  [[nodiscard]] std::size_t n() const { return returns.size(); }
};

struct SearchNode {
  StateId state = 0;
  std::optional<std::size_t> parent;
  std::optional<std::size_t> action;  // incoming action
  double reward = 0.0;                // immediate reward of the incoming action
  int depth = 0;
  std::size_t visits = 0;                      // N(s)
  std::map<std::size_t, std::size_t> children;  // action -> node index
  std::map<std::size_t, EdgeStats> edges;       // action -> stats
};

enum class TraceKind { Root, Warmup, Select, Expand, Child, Rollout, Backprop, Abort, Best };

struct TraceEvent {
  int iteration = 0;
  TraceKind kind = TraceKind::Root;
  int depth = 0;
  std::optional<std::size_t> action;
  bool ok = true;
  double reward = 0.0;
  double r_value = 0.0;  // R of the resulting state
  std::string state;
  std::vector<double> values;  // path actions for Select, returns for Backprop
};

std::string_view to_string(TraceKind k);

struct SearchState {
  std::vector<SearchNode> nodes;  // nodes[0] is the root
  GlobalActionStats stats;
  int iterations_done = 0;
  int aborted_iterations = 0;
  std::size_t failed_evaluations = 0;
  std::vector<TraceEvent> trace;
  std::optional<StateId> best;
  double best_r = 0.0;
  double root_r = 0.0;
};

struct SearchResult {
  SearchState state;
  StateId best = 0;
  double best_r = 0.0;
  double root_r = 0.0;
};

/// Called after every iteration; used to persist snapshots.
using IterationHook = std::function<void(const SearchState&, Environment&)>;

/// MCTS with root warm-up and global UCB candidate filtering. Continues from
/// `resume` when given; total_simulations counts iterations across both runs.
SearchResult run_search(Environment& env, const SearchConfig& cfg, std::optional<SearchState> resume = std::nullopt,
                        const IterationHook& hook = {});

/// Thrown when the search cannot run at all (e.g. the root cannot be evaluated).
class SearchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Snapshot of tree, statistics and trace with state keys in place of ids.
Json snapshot_to_json(const SearchState& s, Environment& env);
SearchState snapshot_from_json(const Json& j, Environment& env);

/// Human-readable trace, one event per line.
std::string format_trace(const SearchState& s, Environment& env);

}  // namespace mobsim
