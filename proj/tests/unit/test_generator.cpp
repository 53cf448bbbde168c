#include <doctest.h>

#include <algorithm>
#include <set>

#include "mobsim/generator.hpp"
#include "mobsim/measures.hpp"
#include "mobsim/powerlaw.hpp"
#include "mobsim/trajectory.hpp"

using namespace mobsim;

namespace {

const GridSpec kGrid{};

GeneratorParams base_params() {
  GeneratorParams p;
  p.activity = default_activity();
  p.home_cell = {4000, 4000};
  return p;
}

void check_well_formed(const Trajectory& t, const GridSpec& grid) {
  const std::int64_t horizon = static_cast<std::int64_t>(t.num_days) * grid.slots_per_day;
  REQUIRE(!t.stays.empty());
  CHECK(t.stays.front().start_slot == 0);
  for (std::size_t i = 0; i < t.stays.size(); ++i) {
    CHECK(t.stays[i].duration_slots >= 1);
    CHECK(t.stays[i].cell.x >= 0);
    CHECK(t.stays[i].cell.y >= 0);
    if (i + 1 < t.stays.size()) {
      CHECK(t.stays[i].end_slot() == t.stays[i + 1].start_slot);
      CHECK(t.stays[i].cell != t.stays[i + 1].cell);
    }
  }
  CHECK(t.stays.back().end_slot() == horizon);
}

std::vector<double> exploration_legs(std::span<const Trajectory> ts, const GridSpec& grid) {
  std::vector<double> out;
  for (const Trajectory& t : ts) {
    std::set<Cell> seen{t.stays.front().cell};
    for (std::size_t i = 1; i < t.stays.size(); ++i) {
      if (seen.insert(t.stays[i].cell).second) out.push_back(cell_distance_m(t.stays[i - 1].cell, t.stays[i].cell, grid));
    }
  }
  return out;
}

}  // namespace

TEST_CASE("generated trajectories are well formed and reproducible") {
  const auto p = base_params();
  const Trajectory a = generate_user("alice", p, kGrid, 42);
  check_well_formed(a, kGrid);
  CHECK(a.user_id == "alice");
  CHECK(a.num_days == 7);
  CHECK(a.stays.front().cell == p.home_cell);

  const Trajectory again = generate_user("alice", p, kGrid, 42);
  CHECK(again.stays == a.stays);
  CHECK(generate_user("bob", p, kGrid, 42).stays != a.stays);
  CHECK(generate_user("alice", p, kGrid, 43).stays != a.stays);
}

TEST_CASE("rho near zero never leaves home") {
  auto p = base_params();
  p.explore_rho = 1e-12;
  const Trajectory t = generate_user("u", p, kGrid, 1);
  REQUIRE(t.stays.size() == 1);
  CHECK(t.stays[0].cell == p.home_cell);
  CHECK(t.stays[0].duration_slots == 7 * 48);
}

TEST_CASE("forced novelty gives alpha of one") {
  auto p = base_params();
  p.explore_rho = 1.0;
  p.explore_gamma = 0.0;
  p.home_bias = 0.0;
  p.num_days = 14;
  const Trajectory t = generate_user("u", p, kGrid, 5);
  check_well_formed(t, kGrid);
  CHECK(visit_counts(t).size() == t.stays.size());
  CHECK(fit_exploration(t).alpha == doctest::Approx(1.0));
}

TEST_CASE("exploration is sublinear and returns are linear") {
  auto p = base_params();
  p.num_days = 60;
  std::vector<ReturnEvent> events;
  int sublinear = 0;
  int long_users = 0;
  for (int u = 0; u < 20; ++u) {
    const Trajectory t = generate_user("u" + std::to_string(u), p, kGrid, 9);
    if (t.stays.size() >= 200) {
      ++long_users;
      if (fit_exploration(t).alpha < 1.0) ++sublinear;
    }
    const auto e = return_events(t);
    events.insert(events.end(), e.begin(), e.end());
  }
  REQUIRE(long_users > 10);
  CHECK(sublinear == long_users);
  const double gamma = fit_preferential_return(events).gamma;
  CHECK(gamma >= 0.9);
  CHECK(gamma <= 1.1);
}

TEST_CASE("jump law round trip") {
  PopulationOptions opts;
  opts.users = 200;
  opts.heterogeneous = false;
  const PromptSet ps = default_population(opts, 3);

  SUBCASE("exploration legs under default params") {
    const auto res = generate_synthetic(ps, kGrid, 21);
    const auto ts = res.trajectories();
    const auto fit = fit_truncated_powerlaw({exploration_legs(ts, kGrid), SampleKind::DistanceM}, {});
    CHECK(fit.beta == doctest::Approx(1.75).epsilon(0.15 / 1.75));
    CHECK(fit.kappa == doctest::Approx(400e3).epsilon(0.25));
  }
  SUBCASE("all legs when every move explores") {
    PromptSet novel = ps;
    for (auto& [id, doc] : novel.prompts) {
      doc.params.explore_rho = 1.0;
      doc.params.explore_gamma = 0.0;
    }
    const auto ts = generate_synthetic(novel, kGrid, 21).trajectories();
    std::vector<double> all;
    for (const auto& t : ts) {
      const auto d = travel_distances(t, kGrid, {});
      all.insert(all.end(), d.begin(), d.end());
    }
    const auto fit = fit_truncated_powerlaw({all, SampleKind::DistanceM}, {});
    CHECK(fit.beta == doctest::Approx(1.75).epsilon(0.15 / 1.75));
  }
}

TEST_CASE("population visitation exponent sits near 1.2") {
  const PromptSet ps = default_population({}, 8);
  const auto ts = generate_synthetic(ps, kGrid, 8).trajectories();
  std::vector<double> zetas;
  for (const auto& t : ts) {
    try {
      zetas.push_back(fit_zipf(t).zeta);
    } catch (const FitError&) {
    }
  }
  REQUIRE(zetas.size() > 80);
  std::nth_element(zetas.begin(), zetas.begin() + zetas.size() / 2, zetas.end());
  const double median = zetas[zetas.size() / 2];
  CHECK(median >= 1.0);
  CHECK(median <= 1.4);
}

TEST_CASE("larger jump cutoff lengthens sampled jumps") {
  double prev = 0.0;
  for (double kappa : {5e3, 5e4, 4e5, 4e6}) {
    const TruncatedPowerLaw law(1.75, kappa, 1000.0, 500.0, 50 * kappa);
    Rng rng(77);
    double s = 0.0;
    for (int i = 0; i < 100000; ++i) s += law.sample(rng);
    CHECK(s / 1e5 > prev);
    prev = s / 1e5;
  }
}

TEST_CASE("batch generation reports invalid params per user") {
  PopulationOptions opts;
  opts.users = 12;
  PromptSet ps = default_population(opts, 2);
  ps.prompts.begin()->second.params.jump_beta = -1.0;
  const auto res = generate_synthetic(ps, kGrid, 4);
  CHECK(res.users.size() == 12);
  CHECK(res.failures() == 1);
  CHECK(res.users.begin()->second.status == GenerationStatus::InvalidParams);
  CHECK(!res.users.begin()->second.message.empty());
  CHECK(res.trajectories().size() == 11);

  const auto again = generate_synthetic(ps, kGrid, 4);
  for (const auto& [id, u] : res.users) {
    if (u.trajectory) CHECK(again.users.at(id).trajectory->stays == u.trajectory->stays);
  }
}

TEST_CASE("default population is seeded and well formed") {
  PopulationOptions opts;
  opts.users = 50;
  const PromptSet a = default_population(opts, 10);
  const PromptSet b = default_population(opts, 10);
  const PromptSet c = default_population(opts, 11);
  REQUIRE(a.prompts.size() == 50);
  CHECK(a.prompts.begin()->first == "u000");
  std::set<std::string> occupations;
  bool differs = false;
  for (const auto& [id, doc] : a.prompts) {
    CHECK(doc.profile.id == id);
    CHECK(doc.profile.attributes.size() == 3);
    CHECK_NOTHROW(validate(doc.params));
    CHECK(!doc.persona.empty());
    CHECK(doc.revision == 0);
    CHECK(b.prompts.at(id).params.home_cell == doc.params.home_cell);
    differs = differs || c.prompts.at(id).params.home_cell != doc.params.home_cell;
    occupations.insert(std::get<std::string>(*doc.profile.find("occupation")));
  }
  CHECK(differs);
  CHECK(occupations.size() > 2);
}
