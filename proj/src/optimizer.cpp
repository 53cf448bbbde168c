#include "mobsim/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace mobsim {

void validate(const SearchConfig& cfg, std::size_t num_actions) {
  if (cfg.max_depth < 1) throw std::invalid_argument("search: max_depth must be positive");
  if (cfg.candidates_per_step < 1) throw std::invalid_argument("search: candidates_per_step must be positive");
  if (cfg.total_simulations < 1) throw std::invalid_argument("search: total_simulations must be positive");
  if (cfg.rollout_length < 0) throw std::invalid_argument("search: rollout_length must be non-negative");
  if (!(cfg.c >= 0.0) || !(cfg.c_g >= 0.0)) throw std::invalid_argument("search: exploration constants must be >= 0");
  if (!(cfg.k_percent > 0.0 && cfg.k_percent <= 100.0)) throw std::invalid_argument("search: k_percent must be in (0, 100]");
  if (num_actions == 0) throw std::invalid_argument("search: empty action space");
  if (static_cast<std::size_t>(cfg.candidates_per_step) > num_actions) {
    throw std::invalid_argument("search: candidates_per_step exceeds the action-space size");
  }
}

Json to_json(const SearchConfig& cfg) {
  return {{"max_depth", cfg.max_depth}, {"candidates_per_step", cfg.candidates_per_step},
          {"total_simulations", cfg.total_simulations}, {"c", cfg.c}, {"c_g", cfg.c_g},
          {"rollout_length", cfg.rollout_length}, {"k_percent", cfg.k_percent}, {"seed", cfg.seed}};
}

SearchConfig search_config_from_json(const Json& j, const SearchConfig& d) {
  SearchConfig c = d;
  c.max_depth = j.value("max_depth", c.max_depth);
  c.candidates_per_step = j.value("candidates_per_step", c.candidates_per_step);
  c.total_simulations = j.value("total_simulations", c.total_simulations);
  c.c = j.value("c", c.c);
  c.c_g = j.value("c_g", c.c_g);
  c.rollout_length = j.value("rollout_length", c.rollout_length);
  c.k_percent = j.value("k_percent", c.k_percent);
  c.seed = j.value("seed", c.seed);
  return c;
}

double uct_score(double q, double c, std::size_t n_s, std::size_t n_sa) {
  return q + c * std::sqrt(std::log(static_cast<double>(n_s) + 1.0) / (static_cast<double>(n_sa) + 1.0));
}

void GlobalActionStats::record(std::size_t action, double reward) {
  ++n.at(action);
  q[action] += (reward - q[action]) / static_cast<double>(n[action]);
}

std::size_t GlobalActionStats::total() const { return std::accumulate(n.begin(), n.end(), std::size_t{0}); }

double GlobalActionStats::ucb(std::size_t action, double c_g) const {
  return uct_score(q.at(action), c_g, total(), n.at(action));
}

std::vector<std::size_t> global_filter(const GlobalActionStats& stats, std::span<const std::size_t> actions,
                                       std::size_t n, double c_g) {
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(actions.size());
  for (std::size_t a : actions) scored.emplace_back(stats.ucb(a, c_g), a);
  std::sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) {
    return x.first != y.first ? x.first > y.first : x.second < y.second;
  });
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < std::min(n, scored.size()); ++i) out.push_back(scored[i].second);
  return out;
}

double EdgeStats::q() const {
  if (returns.empty()) return 0.0;
  return std::accumulate(returns.begin(), returns.end(), 0.0) / static_cast<double>(returns.size());
}

std::string_view to_string(TraceKind k) {
  switch (k) {
    case TraceKind::Root: return "root";
    case TraceKind::Warmup: return "warmup";
    case TraceKind::Select: return "select";
    case TraceKind::Expand: return "expand";
    case TraceKind::Child: return "child";
    case TraceKind::Rollout: return "rollout";
    case TraceKind::Backprop: return "backprop";
    case TraceKind::Abort: return "abort";
    case TraceKind::Best: return "best";
  }
  return "?";
}

namespace {

TraceKind trace_kind_from_string(std::string_view s) {
  for (auto k : {TraceKind::Root, TraceKind::Warmup, TraceKind::Select, TraceKind::Expand, TraceKind::Child,
                 TraceKind::Rollout, TraceKind::Backprop, TraceKind::Abort, TraceKind::Best}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown trace event '" + std::string(s) + "'");
}

class Search {
 public:
  Search(Environment& env, const SearchConfig& cfg, SearchState& st) : env_(env), cfg_(cfg), st_(st) {
    n_cand_ = std::min<std::size_t>(cfg.candidates_per_step, env.num_actions());
    all_actions_.resize(env.num_actions());
    std::iota(all_actions_.begin(), all_actions_.end(), std::size_t{0});
  }

  void iterate() {
    const int iter = ++st_.iterations_done;
    const StateId root = st_.nodes[0].state;
    if (iter == 1) {
      for (std::size_t a : all_actions_) evaluate(root, a, iter, TraceKind::Warmup, 1);
    }

    // selection
    std::vector<std::size_t> path{0};
    while (st_.nodes[path.back()].depth < cfg_.max_depth && st_.nodes[path.back()].children.size() >= n_cand_) {
      const SearchNode& node = st_.nodes[path.back()];
      std::size_t best_a = 0;
      double best_score = -std::numeric_limits<double>::infinity();
      for (const auto& [a, child] : node.children) {  // ascending action order: strict > keeps the lowest id
        const EdgeStats& e = node.edges.at(a);
        const double s = uct_score(e.q(), cfg_.c, node.visits, e.n());
        if (s > best_score) {
          best_score = s;
          best_a = a;
        }
      }
      path.push_back(node.children.at(best_a));
    }
    {
      TraceEvent ev{iter, TraceKind::Select, st_.nodes[path.back()].depth};
      for (std::size_t i = 1; i < path.size(); ++i) ev.values.push_back(static_cast<double>(*st_.nodes[path[i]].action));
      ev.state = env_.key(st_.nodes[path.back()].state);
      st_.trace.push_back(std::move(ev));
    }

    const std::size_t leaf = path.back();
    double tail = 0.0;  // rollout rewards after the expanded child
    if (st_.nodes[leaf].depth < cfg_.max_depth) {
      std::vector<std::size_t> unexpanded;
      for (std::size_t a : all_actions_) {
        if (!st_.nodes[leaf].children.contains(a)) unexpanded.push_back(a);
      }
      const auto cands = global_filter(st_.stats, unexpanded, n_cand_, cfg_.c_g);
      const int depth = st_.nodes[leaf].depth + 1;
      const auto chosen = best_of(st_.nodes[leaf].state, cands, iter, TraceKind::Expand, depth);
      if (!chosen) {
        ++st_.aborted_iterations;
        st_.trace.push_back({iter, TraceKind::Abort, depth});
        return;
      }
      const auto [a_star, next, r_star] = *chosen;
      SearchNode child;
      child.state = next;
      child.parent = leaf;
      child.action = a_star;
      child.reward = r_star;
      child.depth = depth;
      st_.nodes.push_back(std::move(child));
      st_.nodes[leaf].children[a_star] = st_.nodes.size() - 1;
      path.push_back(st_.nodes.size() - 1);
      st_.trace.push_back({iter, TraceKind::Child, depth, a_star, true, r_star, env_.R(next), env_.key(next)});
      tail = rollout(next, depth, iter);
    }

    // back-propagation over tree edges: return of an edge = its reward + everything after it
    TraceEvent bp{iter, TraceKind::Backprop, st_.nodes[path.back()].depth};
    double g = tail;
    for (std::size_t i = path.size(); i-- > 1;) {
      const SearchNode& child = st_.nodes[path[i]];
      SearchNode& parent = st_.nodes[path[i - 1]];
      g += child.reward;
      parent.edges[*child.action].returns.push_back(g);
      ++parent.visits;
      bp.values.push_back(g);
    }
    std::reverse(bp.values.begin(), bp.values.end());
    st_.trace.push_back(std::move(bp));
  }

 private:
  struct Choice {
    std::size_t action;
    StateId next;
    double reward;
  };

  std::optional<std::pair<StateId, double>> evaluate(StateId s, std::size_t a, int iter, TraceKind kind, int depth) {
    const auto next = env_.step(s, a);
    if (!next) {
      ++st_.stats.failures.at(a);
      ++st_.failed_evaluations;
      st_.trace.push_back({iter, kind, depth, a, false});
      return std::nullopt;
    }
    const double r_next = env_.R(*next);
    const double r = env_.R(s) - r_next;
    st_.stats.record(a, r);
    st_.trace.push_back({iter, kind, depth, a, true, r, r_next, env_.key(*next)});
    if (r_next < st_.best_r) {
      st_.best = *next;
      st_.best_r = r_next;
    }
    return std::make_pair(*next, r);
  }

  std::optional<Choice> best_of(StateId s, const std::vector<std::size_t>& cands, int iter, TraceKind kind, int depth) {
    std::optional<Choice> best;
    for (std::size_t a : cands) {
      const auto res = evaluate(s, a, iter, kind, depth);
      if (!res) continue;
      if (!best || res->second > best->reward || (res->second == best->reward && a < best->action)) {
        best = Choice{a, res->first, res->second};
      }
    }
    return best;
  }

  double rollout(StateId s, int depth, int iter) {
    double total = 0.0;
    for (int t = 0; t < cfg_.rollout_length && depth < cfg_.max_depth; ++t) {
      const auto cands = global_filter(st_.stats, all_actions_, n_cand_, cfg_.c_g);
      const auto chosen = best_of(s, cands, iter, TraceKind::Rollout, depth + 1);
      if (!chosen) break;
      total += chosen->reward;
      s = chosen->next;
      ++depth;
    }
    return total;
  }

  Environment& env_;
  const SearchConfig& cfg_;
  SearchState& st_;
  std::size_t n_cand_ = 0;
  std::vector<std::size_t> all_actions_;
};

}  // namespace

SearchResult run_search(Environment& env, const SearchConfig& cfg, std::optional<SearchState> resume,
                        const IterationHook& hook) {
  validate(cfg, env.num_actions());
  SearchState st;
  if (resume) {
    st = std::move(*resume);
    if (st.nodes.empty() || st.stats.n.size() != env.num_actions()) {
      throw SearchError("resume snapshot does not match the action space");
    }
  } else {
    StateId root = 0;
    try {
      root = env.root();
      st.root_r = env.R(root);
    } catch (const std::exception& e) {
      throw SearchError(std::string("cannot evaluate the root state: ") + e.what());
    }
    st.nodes.push_back(SearchNode{root});
    st.stats = GlobalActionStats(env.num_actions());
    st.best = root;
    st.best_r = st.root_r;
    st.trace.push_back({0, TraceKind::Root, 0, std::nullopt, true, 0.0, st.root_r, env.key(root)});
  }
  Search search(env, cfg, st);
  while (st.iterations_done < cfg.total_simulations) {
    search.iterate();
    if (hook) hook(st, env);
  }
  SearchResult r;
  r.best = *st.best;
  r.best_r = st.best_r;
  r.root_r = st.root_r;
  r.state = std::move(st);
  return r;
}

Json snapshot_to_json(const SearchState& s, Environment& env) {
  Json nodes = Json::array();
  for (const SearchNode& n : s.nodes) {
    Json children = Json::array();
    for (const auto& [a, idx] : n.children) children.push_back({a, idx});
    Json edges = Json::array();
    for (const auto& [a, e] : n.edges) edges.push_back({{"action", a}, {"returns", e.returns}});
    nodes.push_back({{"state", env.key(n.state)},
                     {"parent", n.parent ? Json(*n.parent) : Json(nullptr)},
                     {"action", n.action ? Json(*n.action) : Json(nullptr)},
                     {"reward", n.reward},
                     {"depth", n.depth},
                     {"visits", n.visits},
                     {"children", children},
                     {"edges", edges}});
  }
  Json trace = Json::array();
  for (const TraceEvent& e : s.trace) {
    trace.push_back({{"iteration", e.iteration},
                     {"kind", std::string(to_string(e.kind))},
                     {"depth", e.depth},
                     {"action", e.action ? Json(*e.action) : Json(nullptr)},
                     {"ok", e.ok},
                     {"reward", e.reward},
                     {"r_value", e.r_value},
                     {"state", e.state},
                     {"values", e.values}});
  }
  Json actions = Json::array();
  for (std::size_t a = 0; a < env.num_actions(); ++a) actions.push_back(env.action_name(a));
  return {{"actions", actions},
          {"nodes", nodes},
          {"stats", {{"q", s.stats.q}, {"n", s.stats.n}, {"failures", s.stats.failures}}},
          {"iterations_done", s.iterations_done},
          {"aborted_iterations", s.aborted_iterations},
          {"failed_evaluations", s.failed_evaluations},
          {"best", s.best ? Json(env.key(*s.best)) : Json(nullptr)},
          {"best_r", s.best_r},
          {"root_r", s.root_r},
          {"trace", trace}};
}

SearchState snapshot_from_json(const Json& j, Environment& env) {
  const auto names = j.at("actions").get<std::vector<std::string>>();
  if (names.size() != env.num_actions()) throw SearchError("resume: action space size changed");
  for (std::size_t a = 0; a < names.size(); ++a) {
    if (names[a] != env.action_name(a)) throw SearchError("resume: action " + names[a] + " no longer matches");
  }
  SearchState s;
  for (const auto& nj : j.at("nodes")) {
    SearchNode n;
    n.state = env.from_key(nj.at("state").get<std::string>());
    if (!nj.at("parent").is_null()) n.parent = nj["parent"].get<std::size_t>();
    if (!nj.at("action").is_null()) n.action = nj["action"].get<std::size_t>();
    n.reward = nj.at("reward").get<double>();
    n.depth = nj.at("depth").get<int>();
    n.visits = nj.at("visits").get<std::size_t>();
    for (const auto& c : nj.at("children")) n.children[c[0].get<std::size_t>()] = c[1].get<std::size_t>();
    for (const auto& e : nj.at("edges")) {
      n.edges[e.at("action").get<std::size_t>()].returns = e.at("returns").get<std::vector<double>>();
    }
    s.nodes.push_back(std::move(n));
  }
  const Json& st = j.at("stats");
  s.stats.q = st.at("q").get<std::vector<double>>();
  s.stats.n = st.at("n").get<std::vector<std::size_t>>();
  s.stats.failures = st.at("failures").get<std::vector<std::size_t>>();
  s.iterations_done = j.at("iterations_done").get<int>();
  s.aborted_iterations = j.at("aborted_iterations").get<int>();
  s.failed_evaluations = j.at("failed_evaluations").get<std::size_t>();
  if (!j.at("best").is_null()) s.best = env.from_key(j["best"].get<std::string>());
  s.best_r = j.at("best_r").get<double>();
  s.root_r = j.at("root_r").get<double>();
  for (const auto& ej : j.at("trace")) {
    TraceEvent e;
    e.iteration = ej.at("iteration").get<int>();
    e.kind = trace_kind_from_string(ej.at("kind").get<std::string>());
    e.depth = ej.at("depth").get<int>();
    if (!ej.at("action").is_null()) e.action = ej["action"].get<std::size_t>();
    e.ok = ej.at("ok").get<bool>();
    e.reward = ej.at("reward").get<double>();
    e.r_value = ej.at("r_value").get<double>();
    e.state = ej.at("state").get<std::string>();
    e.values = ej.at("values").get<std::vector<double>>();
    s.trace.push_back(std::move(e));
  }
  return s;
}

std::string format_trace(const SearchState& s, Environment& env) {
  std::ostringstream os;
  os.precision(10);
  auto name = [&](std::size_t a) { return env.action_name(a); };
  for (const TraceEvent& e : s.trace) {
    os << "iter " << e.iteration << ' ' << to_string(e.kind) << " depth=" << e.depth;
    switch (e.kind) {
      case TraceKind::Root: os << " R=" << e.r_value << " state=" << e.state; break;
      case TraceKind::Select:
        os << " path=";
        for (std::size_t i = 0; i < e.values.size(); ++i) os << (i ? "," : "") << name(static_cast<std::size_t>(e.values[i]));
        if (e.values.empty()) os << "(root)";
        break;
      case TraceKind::Backprop:
        os << " returns=";
        for (std::size_t i = 0; i < e.values.size(); ++i) os << (i ? "," : "") << e.values[i];
        break;
      case TraceKind::Abort: break;
      default:
        if (e.action) os << " action=" << name(*e.action);
        if (e.ok) {
          os << " reward=" << e.reward << " R=" << e.r_value << " state=" << e.state;
        } else {
          os << " failed";
        }
    }
    os << '\n';
  }
  os << "summary iterations=" << s.iterations_done << " aborted=" << s.aborted_iterations
     << " failed_evaluations=" << s.failed_evaluations << " root_R=" << s.root_r << " best_R=" << s.best_r;
  if (s.best) os << " best=" << env.key(*s.best);
  os << '\n';
  return os.str();
}

}  // namespace mobsim
