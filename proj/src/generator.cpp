#include "mobsim/generator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "mobsim/parallel.hpp"
#include "mobsim/powerlaw.hpp"
#include "mobsim/rng.hpp"

namespace mobsim {

std::string_view to_string(GenerationStatus s) {
  switch (s) {
    case GenerationStatus::Ok: return "ok";
    case GenerationStatus::ParseFailure: return "parse_failure";
    case GenerationStatus::BackendError: return "backend_error";
    case GenerationStatus::InvalidParams: return "invalid_params";
  }
  return "?";
}

std::size_t GenerationBatchResult::failures() const {
  return static_cast<std::size_t>(std::count_if(users.begin(), users.end(), [](const auto& kv) {
    return kv.second.status != GenerationStatus::Ok;
  }));
}

std::vector<Trajectory> GenerationBatchResult::trajectories() const {
  std::vector<Trajectory> out;
  out.reserve(users.size());
  for (const auto& [id, u] : users) {
    if (u.status == GenerationStatus::Ok && u.trajectory) out.push_back(*u.trajectory);
  }
  return out;
}

namespace {

constexpr double kJumpOffsetM = 1000.0;
constexpr double kMaxCell = 2'000'000'000.0;

class VisitBook {
 public:
  void visit(Cell c) {
    auto [it, inserted] = counts_.try_emplace(c, 0);
    if (inserted) order_.push_back(c);
    ++it->second;
  }
  [[nodiscard]] bool visited(Cell c) const { return counts_.contains(c); }
  [[nodiscard]] std::size_t distinct() const { return order_.size(); }

  /// Preferential return over visited cells other than `current`; nullopt if none.
  std::optional<Cell> pick_return(Cell current, Rng& rng) const {
    double total = 0.0;
    for (const Cell& c : order_) {
      if (c != current) total += static_cast<double>(counts_.at(c));
    }
    if (total <= 0.0) return std::nullopt;
    double u = rng.uniform() * total;
    std::optional<Cell> pick;
    for (const Cell& c : order_) {
      if (c == current) continue;
      pick = c;
      u -= static_cast<double>(counts_.at(c));
      if (u < 0.0) break;
    }
    return pick;
  }

 private:
  std::map<Cell, std::size_t> counts_;
  std::vector<Cell> order_;  // first-visit order keeps the draw independent of map layout
};

/// Nearest unvisited cell to a continuous target, in cell units; ties go to
/// the lowest (x, y).
Cell nearest_unvisited(double tx, double ty, const VisitBook& book) {
  tx = std::clamp(tx, 0.0, kMaxCell);
  ty = std::clamp(ty, 0.0, kMaxCell);
  const auto cx = static_cast<std::int64_t>(std::floor(tx));
  const auto cy = static_cast<std::int64_t>(std::floor(ty));
  const Cell direct{static_cast<std::int32_t>(cx), static_cast<std::int32_t>(cy)};
  if (!book.visited(direct)) return direct;

  auto dist2 = [&](std::int64_t x, std::int64_t y) {
    const double dx = (static_cast<double>(x) + 0.5) - tx;
    const double dy = (static_cast<double>(y) + 0.5) - ty;
    return dx * dx + dy * dy;
  };
  std::optional<Cell> best;
  double best_d = std::numeric_limits<double>::infinity();
  std::int64_t found_ring = -1;
  for (std::int64_t ring = 1;; ++ring) {
    // a cell in ring r is at least r - 0.5 away, so stop once that exceeds the best
    if (found_ring >= 0 && (static_cast<double>(ring) - 0.5) * (static_cast<double>(ring) - 0.5) > best_d) break;
    for (std::int64_t x = cx - ring; x <= cx + ring; ++x) {
      for (std::int64_t y = cy - ring; y <= cy + ring; ++y) {
        if (std::max(std::abs(x - cx), std::abs(y - cy)) != ring) continue;
        if (x < 0 || y < 0) continue;
        const Cell c{static_cast<std::int32_t>(x), static_cast<std::int32_t>(y)};
        if (book.visited(c)) continue;
        const double d = dist2(x, y);
        if (d < best_d || (d == best_d && best && c < *best)) {
          best_d = d;
          best = c;
        }
      }
    }
    if (best && found_ring < 0) found_ring = ring;
  }
  return *best;
}

}  // namespace

Trajectory generate_user(const std::string& user_id, const GeneratorParams& p, const GridSpec& grid,
                         std::uint64_t seed) {
  validate(p);
  validate(grid);
  Rng rng(derive_seed(seed, "generate:" + user_id));
  const std::int64_t horizon = static_cast<std::int64_t>(p.num_days) * grid.slots_per_day;

  const double jump_lo = grid.cell_size_m;
  const TruncatedPowerLaw jump(p.jump_beta, p.jump_kappa_m, kJumpOffsetM, jump_lo,
                               std::max(50.0 * p.jump_kappa_m, 100.0 * jump_lo));
  const TruncatedPowerLaw dwell(p.dur_beta, p.dur_kappa_slots, 1.0, 1.0,
                                std::max(static_cast<double>(horizon) + 1.0, 10.0 * p.dur_kappa_slots));
  const double max_w = *std::max_element(p.activity.begin(), p.activity.end());
  const double min_w = *std::min_element(p.activity.begin(), p.activity.end());
  auto draw_dwell = [&] { return std::max<std::int64_t>(1, static_cast<std::int64_t>(dwell.sample(rng))); };

  auto choose_next = [&](Cell current, const VisitBook& book, int hour) -> std::optional<Cell> {
    const bool quiet_hour = min_w < max_w && p.activity[hour] == min_w;
    if (quiet_hour && current != p.home_cell && rng.bernoulli(p.home_bias)) return p.home_cell;
    const double p_new =
        std::min(1.0, p.explore_rho * std::pow(static_cast<double>(book.distinct()), -p.explore_gamma));
    if (rng.bernoulli(p_new)) {
      const double r = jump.sample(rng) / grid.cell_size_m;
      const double theta = 2.0 * std::numbers::pi * rng.uniform();
      return nearest_unvisited(current.x + 0.5 + r * std::cos(theta), current.y + 0.5 + r * std::sin(theta), book);
    }
    return book.pick_return(current, rng);
  };

  Trajectory t;
  t.user_id = user_id;
  t.num_days = p.num_days;
  VisitBook book;
  Cell current = p.home_cell;
  book.visit(current);
  std::int64_t start = 0;
  while (start < horizon) {
    std::int64_t end = start;
    std::optional<Cell> next;
    // the stay continues until a departure epoch yields somewhere to go
    while (!next) {
      end += draw_dwell();
      if (end >= horizon) break;
      const int hour = grid.hour_of_slot(end);
      if (!rng.bernoulli(p.activity[hour] / max_w)) continue;
      next = choose_next(current, book, hour);
    }
    end = std::min(end, horizon);
    t.stays.push_back({current, start, end - start});
    if (!next) break;
    current = *next;
    book.visit(current);
    start = end;
  }
  return t;
}

GenerationBatchResult generate_synthetic(const PromptSet& ps, const GridSpec& grid, std::uint64_t seed) {
  std::vector<const std::pair<const std::string, PromptDoc>*> entries;
  entries.reserve(ps.prompts.size());
  for (const auto& kv : ps.prompts) entries.push_back(&kv);
  std::vector<UserGeneration> results(entries.size());
  parallel_for(entries.size(), [&](std::size_t i) {
    const auto& [id, doc] = *entries[i];
    UserGeneration& r = results[i];
    r.attempts = 1;
    try {
      r.trajectory = generate_user(id, doc.params, grid, seed);
      r.status = GenerationStatus::Ok;
    } catch (const std::invalid_argument& e) {
      r.status = GenerationStatus::InvalidParams;
      r.message = e.what();
    }
  });
  GenerationBatchResult out;
  for (std::size_t i = 0; i < entries.size(); ++i) out.users.emplace(entries[i]->first, std::move(results[i]));
  return out;
}

PromptSet default_population(const PopulationOptions& opts, std::uint64_t seed) {
  static constexpr std::array<std::string_view, 6> kAges{"18-24", "25-34", "35-44", "45-54", "55-64", "65+"};
  static constexpr std::array<std::string_view, 6> kJobs{"student", "office worker", "service worker",
                                                         "retired",  "homemaker",     "self-employed"};
  static constexpr std::array<double, 6> kJobReach{1.0, 1.3, 0.8, 0.5, 0.6, 1.1};
  static constexpr std::array<double, 6> kAgeExplore{1.2, 1.1, 1.0, 0.9, 0.8, 0.7};

  Rng rng(derive_seed(seed, "population"));
  PromptSet ps;
  ps.seed = seed;
  const bool no_activity =
      std::all_of(opts.base.activity.begin(), opts.base.activity.end(), [](double w) { return w == 0.0; });
  const int width = std::max<int>(3, static_cast<int>(std::to_string(opts.users).size()));
  for (std::size_t i = 0; i < opts.users; ++i) {
    std::string id = std::to_string(i);
    id = "u" + std::string(static_cast<std::size_t>(width) - std::min<std::size_t>(width, id.size()), '0') + id;
    const auto age = rng.below(kAges.size());
    const auto job = age == kAges.size() - 1 ? 3 : rng.below(kJobs.size());
    const auto district = rng.below(9);

    PromptDoc doc;
    doc.profile.id = id;
    doc.profile.attributes = {{"age_band", std::string(kAges[age])},
                              {"occupation", std::string(kJobs[job])},
                              {"home_district", static_cast<double>(district)}};
    doc.params = opts.base;
    if (no_activity) doc.params.activity = default_activity();
    doc.params.num_days = opts.num_days;
    const auto dx = static_cast<std::int32_t>(district % 3) * 40 - 40;
    const auto dy = static_cast<std::int32_t>(district / 3) * 40 - 40;
    doc.params.home_cell = {opts.region_center.x + dx + static_cast<std::int32_t>(rng.below(21)) - 10,
                            opts.region_center.y + dy + static_cast<std::int32_t>(rng.below(21)) - 10};
    if (opts.heterogeneous) {
      scale_clamped(doc.params, ParamField::JumpKappa, kJobReach[job]);
      scale_clamped(doc.params, ParamField::ExploreRho, kAgeExplore[age]);
    }
    doc.base_text = "Generate a " + std::to_string(opts.num_days) +
                    "-day sequence of stays for this person on a grid of cells, one entry per visited "
                    "location with its day, start slot, duration in slots and cell coordinates.";
    doc.persona = "A person aged " + std::string(kAges[age]) + " working as " + std::string(kJobs[job]) +
                  ", living in district " + std::to_string(district) + ".";
    doc.constraints = {"Keep daily routines plausible for the persona.", "Nights are usually spent at home."};
    ps.prompts.emplace(id, std::move(doc));
  }
  return ps;
}

}  // namespace mobsim
