#include "mobsim/prompt_env.hpp"

#include "mobsim/rng.hpp"

namespace mobsim {

PromptEnvironment::PromptEnvironment(PromptSet root, PromptEnvOptions opts) : opts_(std::move(opts)) {
  validate(opts_.guidance);
  for (const auto& a : opts_.actions) validate(a);
  if (!opts_.generate) {
    opts_.generate = [grid = opts_.grid, seed = opts_.seed](const PromptSet& ps) {
      return generate_synthetic(ps, grid, seed);
    };
  }
  if (!add_state(std::move(root))) throw SearchError("root state could not be evaluated: " + last_error_);
}

void PromptEnvironment::set_actions(std::vector<AdjustmentAction> actions) {
  if (!transitions_.empty()) throw std::logic_error("actions cannot change after the search has stepped");
  for (const auto& a : actions) validate(a);
  opts_.actions = std::move(actions);
}

std::uint64_t PromptEnvironment::user_key(const PromptDoc& doc) { return fnv1a64(to_json(doc).dump()); }

std::optional<StateId> PromptEnvironment::add_state(PromptSet ps) {
  std::string key = content_hash(ps);
  if (auto it = index_.find(key); it != index_.end()) return it->second;

  PromptSet missing;
  missing.seed = ps.seed;
  for (const auto& [id, doc] : ps.prompts) {
    if (!users_.contains(user_key(doc))) missing.prompts.emplace(id, doc);
  }
  if (!missing.prompts.empty()) {
    const GenerationBatchResult res = opts_.generate(missing);
    for (const auto& [id, u] : res.users) {
      if (u.status != GenerationStatus::Ok || !u.trajectory) {
        last_error_ = "generation failed for " + id + " (" + std::string(to_string(u.status)) + "): " + u.message;
        return std::nullopt;
      }
    }
    for (const auto& [id, doc] : missing.prompts) {
      const auto it = res.users.find(id);
      if (it == res.users.end()) {
        last_error_ = "generation returned no result for " + id;
        return std::nullopt;
      }
      users_.emplace(user_key(doc), CachedUser{*it->second.trajectory, summarize(*it->second.trajectory, opts_.grid)});
      ++generated_users_;
    }
  }

  std::vector<std::string> ids;
  std::vector<UserMeasures> measures;
  for (const auto& [id, doc] : ps.prompts) {
    ids.push_back(id);
    measures.push_back(users_.at(user_key(doc)).measures);
  }
  EvaluatedState st;
  st.population = sample_population(std::move(ids), std::move(measures));
  try {
    st.gs = objective_distances(opts_.guidance, st.population);
    st.R = aggregate_R(st.gs, opts_.guidance.epsilon_reward);
  } catch (const std::exception& e) {
    last_error_ = std::string("objective evaluation failed: ") + e.what();
    return std::nullopt;
  }
  if (opts_.state_dir) {
    const auto path = *opts_.state_dir / (key + ".json");
    if (!std::filesystem::exists(path)) save_promptset(path, ps);
  }
  st.prompts = std::move(ps);
  st.key = key;
  states_.push_back(std::move(st));
  index_.emplace(std::move(key), states_.size() - 1);
  return states_.size() - 1;
}

std::optional<StateId> PromptEnvironment::step(StateId s, std::size_t action) {
  const auto tkey = std::make_pair(s, action);
  if (auto it = transitions_.find(tkey); it != transitions_.end()) return it->second;
  const AdjustmentAction& a = opts_.actions.at(action);
  const EvaluatedState& from = states_.at(s);
  ApplyResult applied =
      apply_action(from.prompts, a, from.population, opts_.k_percent, derive_seed(opts_.seed, from.key + "|" + a.id));
  std::optional<StateId> next = applied.noop ? std::optional<StateId>(s) : add_state(std::move(applied.prompts));
  transitions_.emplace(tkey, next);
  return next;
}

StateId PromptEnvironment::from_key(const std::string& key) {
  if (auto it = index_.find(key); it != index_.end()) return it->second;
  if (!opts_.state_dir) throw SearchError("unknown state " + key + " and no state directory to load it from");
  const auto path = *opts_.state_dir / (key + ".json");
  if (!std::filesystem::exists(path)) throw SearchError("missing persisted state " + path.string());
  PromptSet ps = load_promptset(path);
  if (content_hash(ps) != key) throw SearchError("persisted state " + path.string() + " does not match its hash");
  const auto id = add_state(std::move(ps));
  if (!id) throw SearchError("persisted state " + key + " could not be evaluated: " + last_error_);
  return *id;
}

std::vector<Trajectory> PromptEnvironment::trajectories(StateId s) const {
  std::vector<Trajectory> out;
  for (const auto& [id, doc] : states_.at(s).prompts.prompts) out.push_back(users_.at(user_key(doc)).trajectory);
  return out;
}

}  // namespace mobsim
