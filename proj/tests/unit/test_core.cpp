#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mobsim/core.hpp"
#include "mobsim/rng.hpp"
#include "mobsim/trajectory.hpp"
#include "support.hpp"

using namespace mobsim;

namespace {

GridSpec grid500() { return GridSpec{500.0, {39.8, 116.2}, 48}; }

GeoPoint at_cell(const GridSpec& g, Cell c, double t_s) {
  const LatLon ll = cell_center(g, c);
  return {ll.lat, ll.lon, t_s};
}

}  // namespace

TEST_CASE("coarse_grain merges same-cell points") {
  const GridSpec g = grid500();
  const std::vector<GeoPoint> pts{at_cell(g, {2, 3}, 0.0), at_cell(g, {2, 3}, 1800.0)};
  const Trajectory t = coarse_grain(pts, g, "a");
  REQUIRE(t.stays.size() == 1);
  CHECK(t.stays[0].cell == Cell{2, 3});
  CHECK(t.stays[0].duration_slots == 1);
  CHECK(t.user_id == "a");
}

TEST_CASE("coarse_grain distance uses cell units") {
  const GridSpec g = grid500();
  const std::vector<GeoPoint> pts{at_cell(g, {0, 0}, 0.0), at_cell(g, {3, 4}, 3600.0)};
  const Trajectory t = coarse_grain(pts, g);
  REQUIRE(t.stays.size() == 2);
  CHECK(t.stays[0].duration_slots == 2);
  const auto d = travel_distances(t, g);
  REQUIRE(d.size() == 1);
  CHECK(d[0] == doctest::Approx(2500.0));
}

TEST_CASE("coarse_grain edge cases") {
  const GridSpec g = grid500();
  CHECK(coarse_grain(std::vector<GeoPoint>{}, g).stays.empty());

  SUBCASE("point west of the origin is rejected with its index") {
    std::vector<GeoPoint> pts{at_cell(g, {1, 1}, 0.0), at_cell(g, {1, 1}, 60.0), {39.9, 116.0, 120.0}};
    try {
      (void)coarse_grain(pts, g);
      FAIL("expected PointError");
    } catch (const PointError& e) {
      CHECK(e.index() == 2);
    }
  }
  SUBCASE("latitude beyond the pole") {
    std::vector<GeoPoint> pts{{91.0, 116.3, 0.0}};
    CHECK_THROWS_AS((void)coarse_grain(pts, g), PointError);
  }
  SUBCASE("time going backwards") {
    std::vector<GeoPoint> pts{at_cell(g, {1, 1}, 600.0), at_cell(g, {1, 2}, 10.0)};
    CHECK_THROWS_AS((void)coarse_grain(pts, g), PointError);
  }
}

TEST_CASE("coarse_grain stay count equals run-length count of slot cells") {
  const GridSpec g = grid500();
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    // a fine walk sampled every 5 minutes over one day
    std::vector<GeoPoint> pts;
    double x = 5000.0;
    double y = 5000.0;
    for (int i = 0; i < 288; ++i) {
      if (rng.uniform() < 0.3) {
        x += (rng.uniform() - 0.5) * 1500.0;
        y += (rng.uniform() - 0.5) * 1500.0;
        x = std::clamp(x, 1000.0, 20000.0);
        y = std::clamp(y, 1000.0, 20000.0);
      }
      const LatLon ll = unproject(g, {x, y});
      pts.push_back({ll.lat, ll.lon, i * 300.0});
    }
    // oracle: last point per slot, then count changes of cell
    std::vector<std::pair<long, std::pair<long, long>>> slot_cells;
    for (const GeoPoint& p : pts) {
      const PlanarPoint xy = project(g, {p.lat, p.lon});
      const long slot = static_cast<long>(p.timestamp_s / 1800.0);
      const std::pair<long, long> cell{static_cast<long>(std::floor(xy.x_m / 500.0)),
                                       static_cast<long>(std::floor(xy.y_m / 500.0))};
      if (!slot_cells.empty() && slot_cells.back().first == slot) {
        slot_cells.back().second = cell;
      } else {
        slot_cells.push_back({slot, cell});
      }
    }
    std::size_t runs = 0;
    for (std::size_t i = 0; i < slot_cells.size(); ++i) {
      if (i == 0 || slot_cells[i].second != slot_cells[i - 1].second) ++runs;
    }
    const Trajectory t = coarse_grain(pts, g);
    CHECK(t.stays.size() == runs);
    CHECK_NOTHROW(validate(t, g));
  }
}

TEST_CASE("coarse_grain is idempotent on coarse trajectories") {
  const GridSpec g = grid500();
  Rng rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    Trajectory t = testing::random_trajectory(rng, 5 + rng.below(40));
    t.user_id.reset();
    const Trajectory once = coarse_grain(to_points(t, g), g);
    CHECK(once.stays == t.stays);
    const Trajectory twice = coarse_grain(to_points(once, g), g);
    CHECK(twice == once);
  }
}

TEST_CASE("travel_distances") {
  GridSpec g = grid500();
  CHECK(travel_distances(testing::chain({{0, 0}, {0, 0}}), g) == std::vector<double>{0.0});
  CHECK(travel_distances(testing::chain({{0, 0}}), g).empty());

  g.cell_size_m = 1000.0;
  const auto d = travel_distances(testing::chain({{0, 0}, {3, 4}, {3, 4}}), g);
  REQUIRE(d.size() == 2);
  CHECK(d[0] == doctest::Approx(5000.0));
  CHECK(d[1] == 0.0);
  CHECK(travel_distances(testing::chain({{0, 0}, {3, 4}, {3, 4}}), g, {.include_zero = false}).size() == 1);

  Rng rng(3);
  const Trajectory t = testing::random_trajectory(rng, 10);
  const auto got = travel_distances(t, g);
  REQUIRE(got.size() == 9);
  for (std::size_t i = 0; i + 1 < t.stays.size(); ++i) {
    const double dx = t.stays[i + 1].cell.x - t.stays[i].cell.x;
    const double dy = t.stays[i + 1].cell.y - t.stays[i].cell.y;
    CHECK(got[i] == doctest::Approx(std::sqrt(dx * dx + dy * dy) * 1000.0).epsilon(1e-12));
  }
}

TEST_CASE("trajectory validation") {
  const GridSpec g = grid500();
  Trajectory t = testing::chain({{0, 0}, {1, 1}}, 2);
  CHECK_NOTHROW(validate(t, g));
  t.stays[1].start_slot = 1;
  CHECK_THROWS_AS(validate(t, g), std::invalid_argument);
  t = testing::chain({{0, 0}});
  t.stays[0].duration_slots = 0;
  CHECK_THROWS_AS(validate(t, g), std::invalid_argument);
  t = testing::chain({{0, 0}});
  t.stays[0].start_slot = 47;
  t.stays[0].duration_slots = 2;
  CHECK_THROWS_AS(validate(t, g), std::invalid_argument);
}

TEST_CASE("grid and params validation") {
  CHECK_THROWS_AS(validate(GridSpec{0.0, {}, 48}), std::invalid_argument);
  CHECK_THROWS_AS(validate(GridSpec{500.0, {}, 0}), std::invalid_argument);

  GeneratorParams p;
  p.activity = default_activity();
  CHECK_NOTHROW(validate(p));
  p.explore_rho = 0.0;
  CHECK_THROWS_AS(validate(p), std::invalid_argument);
  p.explore_rho = 0.5;
  p.activity.fill(0.0);
  CHECK_THROWS_AS(validate(p), std::invalid_argument);
}

TEST_CASE("scale_clamped stays in range and inverts") {
  GeneratorParams p;
  p.activity = default_activity();
  scale_clamped(p, ParamField::ExploreRho, 100.0);
  CHECK(p.explore_rho == 1.0);
  scale_clamped(p, ParamField::JumpKappa, 0.8);
  scale_clamped(p, ParamField::JumpKappa, 1.0 / 0.8);
  CHECK(p.jump_kappa_m == doctest::Approx(400'000.0).epsilon(1e-12));
  CHECK_THROWS_AS(scale_clamped(p, ParamField::JumpBeta, 0.0), std::invalid_argument);
  for (ParamField f : kAllParamFields) CHECK(param_field_from_string(to_string(f)) == f);
}

TEST_CASE("rng streams are reproducible and distinct") {
  Rng a(derive_seed(42, "u1"));
  Rng b(derive_seed(42, "u1"));
  Rng c(derive_seed(42, "u2"));
  bool differs = false;
  for (int i = 0; i < 16; ++i) {
    const auto va = a.next();
    CHECK(va == b.next());
    differs = differs || va != c.next();
  }
  CHECK(differs);
  Rng r(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(r.below(7) < 7);
  }
}
