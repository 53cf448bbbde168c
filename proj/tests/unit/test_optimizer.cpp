#include <doctest.h>

#include <cmath>
#include <numeric>

#include "mobsim/optimizer.hpp"
#include "toy_env.hpp"

using namespace mobsim;
using mobsim::testing::LineEnv;

namespace {

SearchConfig small_cfg(int budget, int n, int L) {
  SearchConfig c;
  c.total_simulations = budget;
  c.candidates_per_step = n;
  c.rollout_length = L;
  return c;
}

void check_conservation(const SearchState& s) {
  for (const SearchNode& n : s.nodes) {
    std::size_t sum = 0;
    for (const auto& [a, e] : n.edges) sum += e.n();
    CHECK(n.visits == sum);
  }
}

}  // namespace

TEST_CASE("uct score") {
  CHECK(uct_score(0.0, 1.4, 0, 0) == 0.0);
  CHECK(uct_score(0.5, 1.4, 3, 1) == doctest::Approx(0.5 + 1.4 * std::sqrt(std::log(4.0) / 2.0)).epsilon(1e-12));
  CHECK(uct_score(0.5, 1.4, 3, 1) == doctest::Approx(1.6656).epsilon(1e-4));
}

TEST_CASE("global filter") {
  GlobalActionStats st(4);
  const std::vector<std::size_t> all{0, 1, 2, 3};
  CHECK(global_filter(st, all, 2, 1.0) == std::vector<std::size_t>{0, 1});
  CHECK(global_filter(st, all, 4, 1.0) == all);

  st.record(2, 1.0);
  CHECK(st.ucb(2, 1.0) == doctest::Approx(1.0 + std::sqrt(std::log(2.0) / 2.0)).epsilon(1e-12));
  CHECK(st.ucb(2, 1.0) == doctest::Approx(1.589).epsilon(1e-3));
  CHECK(st.ucb(0, 1.0) == doctest::Approx(std::sqrt(std::log(2.0))).epsilon(1e-12));
  CHECK(st.ucb(0, 1.0) == doctest::Approx(0.833).epsilon(1e-3));
  CHECK(global_filter(st, all, 1, 1.0) == std::vector<std::size_t>{2});
  CHECK(global_filter(st, all, 2, 1.0) == std::vector<std::size_t>{2, 0});

  st.record(3, 2.0);
  st.record(3, 0.0);
  CHECK(st.q[3] == doctest::Approx(1.0));
  CHECK(st.n[3] == 2);
  CHECK(st.total() == 3);
}

TEST_CASE("ties go to the lower action") {
  // identical actions: expansion keeps action 0 first, and once both are
  // children with equal Q and N the UCT choice in iteration 3 is action 0
  LineEnv env({1, 1}, 100);
  const SearchResult r = run_search(env, small_cfg(3, 2, 0));
  const SearchNode& root = r.state.nodes[0];
  REQUIRE(root.children.size() == 2);
  CHECK(root.children.at(0) == 1);
  CHECK(root.children.at(1) == 2);
  const TraceEvent* sel3 = nullptr;
  for (const TraceEvent& ev : r.state.trace) {
    if (ev.kind == TraceKind::Select && ev.iteration == 3) sel3 = &ev;
  }
  REQUIRE(sel3);
  CHECK(sel3->values == std::vector<double>{0.0});
}

TEST_CASE("single action gives a chain with Q = mean return") {
  LineEnv env({1}, 100);
  SearchConfig cfg = small_cfg(3, 1, 3);
  const SearchResult r = run_search(env, cfg);
  REQUIRE(r.state.nodes.size() == 4);
  for (std::size_t i = 1; i < 4; ++i) {
    CHECK(r.state.nodes[i].depth == static_cast<int>(i));
    CHECK(*r.state.nodes[i].parent == i - 1);
  }
  // every step earns 1; iteration i expands to depth i then rolls out 3 more
  const EdgeStats& e = r.state.nodes[0].edges.at(0);
  CHECK(e.returns == std::vector<double>{4.0, 5.0, 6.0});
  CHECK(e.q() == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(r.best_r == doctest::Approx(100 - 6));
}

TEST_CASE("hand-simulated three iterations") {
  // R = |pos - 10|; action 0 moves +1, action 1 moves +2; n = 1, L = 2
  LineEnv env({1, 2}, 10);
  const SearchResult r = run_search(env, small_cfg(3, 1, 2));
  const SearchState& s = r.state;

  // tree: root -a1-> p2 -a1-> p4 -a1-> p6
  REQUIRE(s.nodes.size() == 4);
  CHECK(env.position(s.nodes[1].state) == 2);
  CHECK(env.position(s.nodes[2].state) == 4);
  CHECK(env.position(s.nodes[3].state) == 6);
  for (std::size_t i = 1; i < 4; ++i) {
    CHECK(*s.nodes[i].action == 1);
    CHECK(s.nodes[i].reward == 2.0);
  }
  CHECK(s.nodes[0].edges.at(1).returns == std::vector<double>{6.0, 8.0, 10.0});
  CHECK(s.nodes[1].edges.at(1).returns == std::vector<double>{6.0, 8.0});
  CHECK(s.nodes[2].edges.at(1).returns == std::vector<double>{6.0});
  CHECK(s.nodes[0].visits == 3);
  CHECK(s.nodes[1].visits == 2);
  CHECK(s.nodes[2].visits == 1);
  CHECK(s.nodes[3].visits == 0);

  // global statistics: a0 only seen at warm-up, a1 ten times, always +2
  CHECK(s.stats.n == std::vector<std::size_t>{1, 10});
  CHECK(s.stats.q[0] == 1.0);
  CHECK(s.stats.q[1] == 2.0);

  CHECK(r.root_r == 10.0);
  CHECK(r.best_r == 0.0);
  CHECK(env.position(r.best) == 10);
  check_conservation(s);
}

TEST_CASE("structural invariants on a two-action problem") {
  LineEnv env({1, -1}, 7);
  SearchConfig cfg = small_cfg(40, 1, 3);
  cfg.max_depth = 4;
  const SearchResult r = run_search(env, cfg);
  const SearchState& s = r.state;
  check_conservation(s);

  for (const SearchNode& n : s.nodes) CHECK(n.depth <= cfg.max_depth);
  for (const TraceEvent& ev : s.trace) CHECK(ev.depth <= cfg.max_depth);

  // Q is the mean of the stored returns, and those returns are exactly what the trace reports
  std::map<std::pair<std::size_t, std::size_t>, std::vector<double>> replay;
  std::vector<double> path;
  std::optional<std::size_t> child;
  for (const TraceEvent& ev : s.trace) {
    if (ev.kind == TraceKind::Select) {
      path = ev.values;
      child.reset();
    } else if (ev.kind == TraceKind::Child) {
      child = *ev.action;
    } else if (ev.kind == TraceKind::Backprop) {
      std::vector<std::size_t> actions;
      for (double a : path) actions.push_back(static_cast<std::size_t>(a));
      if (child) actions.push_back(*child);
      REQUIRE(actions.size() == ev.values.size());
      std::size_t node = 0;
      for (std::size_t i = 0; i < actions.size(); ++i) {
        replay[{node, actions[i]}].push_back(ev.values[i]);
        node = s.nodes[node].children.at(actions[i]);
      }
    }
  }
  for (std::size_t i = 0; i < s.nodes.size(); ++i) {
    for (const auto& [a, e] : s.nodes[i].edges) {
      const auto& rec = replay.at({i, a});
      const double mean = std::accumulate(rec.begin(), rec.end(), 0.0) / static_cast<double>(rec.size());
      CHECK(std::abs(mean - e.q()) <= 1e-12);
      CHECK(rec.size() == e.n());
    }
  }

  // best = minimum R over all evaluated states
  double min_r = r.root_r;
  for (const TraceEvent& ev : s.trace) {
    if (ev.ok && (ev.kind == TraceKind::Warmup || ev.kind == TraceKind::Expand || ev.kind == TraceKind::Rollout)) {
      min_r = std::min(min_r, ev.r_value);
    }
  }
  CHECK(r.best_r == min_r);
}

TEST_CASE("deterministic trace") {
  LineEnv a({1, -1, 3}, 12);
  LineEnv b({1, -1, 3}, 12);
  const SearchConfig cfg = small_cfg(15, 2, 3);
  const SearchResult ra = run_search(a, cfg);
  const SearchResult rb = run_search(b, cfg);
  CHECK(format_trace(ra.state, a) == format_trace(rb.state, b));
}

TEST_CASE("resume continues exactly") {
  const SearchConfig full = small_cfg(12, 2, 2);
  LineEnv env_full({1, -1, 3}, 20);
  const SearchResult ref = run_search(env_full, full);

  LineEnv env_a({1, -1, 3}, 20);
  const SearchResult part = run_search(env_a, small_cfg(5, 2, 2));
  const Json snap = Json::parse(snapshot_to_json(part.state, env_a).dump());

  LineEnv env_b({1, -1, 3}, 20);
  SearchState restored = snapshot_from_json(snap, env_b);
  CHECK(restored.iterations_done == 5);
  const SearchResult resumed = run_search(env_b, full, restored);
  CHECK(format_trace(resumed.state, env_b) == format_trace(ref.state, env_full));
  CHECK(resumed.best_r == ref.best_r);
  check_conservation(resumed.state);

  LineEnv other({1, 2, 3}, 20);
  CHECK_THROWS_AS(snapshot_from_json(snap, other), SearchError);
}

TEST_CASE("budget 1 returns the best single-action state or better") {
  LineEnv env({1, 2, -3, 4}, 9);
  const SearchResult r = run_search(env, small_cfg(1, 2, 3));
  double best_single = r.root_r;
  for (const TraceEvent& ev : r.state.trace) {
    if (ev.kind == TraceKind::Warmup) best_single = std::min(best_single, ev.r_value);
  }
  CHECK(r.best_r <= best_single);
  CHECK(r.state.iterations_done == 1);
}

TEST_CASE("no-op actions leave the best at the root") {
  LineEnv env({0, 0}, 5);
  const SearchResult r = run_search(env, small_cfg(6, 2, 3));
  CHECK(r.best_r == r.root_r);
  for (const SearchNode& n : r.state.nodes) {
    for (const auto& [a, e] : n.edges) CHECK(e.q() == 0.0);
  }
  CHECK(r.state.stats.q == std::vector<double>{0.0, 0.0});
}

TEST_CASE("failed evaluations are counted and excluded") {
  LineEnv env({1, 5}, 20, {1});
  const SearchResult r = run_search(env, small_cfg(5, 2, 2));
  CHECK(r.state.failed_evaluations > 0);
  CHECK(r.state.stats.failures[1] == r.state.failed_evaluations);
  CHECK(r.state.stats.n[1] == 0);
  for (const SearchNode& n : r.state.nodes) CHECK(!n.children.contains(1));
  CHECK(r.best_r < r.root_r);

  LineEnv dead({1, 2}, 20, {0, 1});
  const SearchResult d = run_search(dead, small_cfg(3, 1, 2));
  CHECK(d.state.aborted_iterations == 3);
  CHECK(d.best_r == d.root_r);
}

TEST_CASE("config validation") {
  SearchConfig c;
  CHECK_NOTHROW(validate(c, 3));
  CHECK_THROWS(validate(c, 2));
  CHECK_THROWS(validate(c, 0));
  c.max_depth = 0;
  CHECK_THROWS(validate(c, 5));
  SearchConfig rt = search_config_from_json(to_json(SearchConfig{7, 2, 9, 0.5, 0.25, 1, 20.0, 99}));
  CHECK(rt.max_depth == 7);
  CHECK(rt.candidates_per_step == 2);
  CHECK(rt.total_simulations == 9);
  CHECK(rt.c == 0.5);
  CHECK(rt.c_g == 0.25);
  CHECK(rt.rollout_length == 1);
  CHECK(rt.k_percent == 20.0);
  CHECK(rt.seed == 99);
}
