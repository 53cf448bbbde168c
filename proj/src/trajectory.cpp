#include "mobsim/trajectory.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace mobsim {

namespace {

constexpr double kEarthRadiusM = 6'371'008.8;
constexpr double kDegToRad = std::numbers::pi / 180.0;

struct Observation {
  Cell cell;
  std::int64_t slot;
};

}  // namespace

PlanarPoint project(const GridSpec& grid, LatLon p) {
  const double cos_lat0 = std::cos(grid.origin.lat * kDegToRad);
  return {(p.lon - grid.origin.lon) * kDegToRad * kEarthRadiusM * cos_lat0,
          (p.lat - grid.origin.lat) * kDegToRad * kEarthRadiusM};
}

LatLon unproject(const GridSpec& grid, PlanarPoint p) {
  const double cos_lat0 = std::cos(grid.origin.lat * kDegToRad);
  return {grid.origin.lat + p.y_m / (kDegToRad * kEarthRadiusM),
          grid.origin.lon + p.x_m / (kDegToRad * kEarthRadiusM * cos_lat0)};
}

LatLon cell_center(const GridSpec& grid, Cell cell) {
  return unproject(grid, {(cell.x + 0.5) * grid.cell_size_m, (cell.y + 0.5) * grid.cell_size_m});
}

Trajectory coarse_grain(std::span<const GeoPoint> points, const GridSpec& grid,
                        std::optional<std::string> user_id) {
  validate(grid);
  Trajectory out;
  out.user_id = std::move(user_id);
  if (points.empty()) return out;

  const double slot_s = grid.slot_seconds();
  constexpr double kMaxIndex = static_cast<double>(std::numeric_limits<std::int32_t>::max());
  std::vector<Observation> obs;
  obs.reserve(points.size());
  double prev_t = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const GeoPoint& p = points[i];
    if (!std::isfinite(p.lat) || !std::isfinite(p.lon) || std::abs(p.lat) > 90.0 ||
        std::abs(p.lon) > 180.0) {
      throw PointError(i, "coordinate out of range");
    }
    if (!std::isfinite(p.timestamp_s) || p.timestamp_s < 0.0) {
      throw PointError(i, "timestamp out of range");
    }
    if (p.timestamp_s < prev_t) throw PointError(i, "points are not time-ordered");
    prev_t = p.timestamp_s;

    const PlanarPoint xy = project(grid, {p.lat, p.lon});
    const double cx = std::floor(xy.x_m / grid.cell_size_m);
    const double cy = std::floor(xy.y_m / grid.cell_size_m);
    if (cx < 0.0 || cy < 0.0 || cx > kMaxIndex || cy > kMaxIndex) {
      throw PointError(i, "coordinate outside the grid");
    }
    const Observation o{{static_cast<std::int32_t>(cx), static_cast<std::int32_t>(cy)},
                        static_cast<std::int64_t>(std::floor(p.timestamp_s / slot_s))};
    if (!obs.empty() && obs.back().slot == o.slot) {
      obs.back() = o;  // last point in a slot wins
    } else {
      obs.push_back(o);
    }
  }

  struct Run {
    Cell cell;
    std::int64_t first;
    std::int64_t last;
  };
  std::vector<Run> runs;
  for (const Observation& o : obs) {
    if (!runs.empty() && runs.back().cell == o.cell) {
      runs.back().last = o.slot;
    } else {
      runs.push_back({o.cell, o.slot, o.slot});
    }
  }

  out.stays.reserve(runs.size());
  for (std::size_t j = 0; j < runs.size(); ++j) {
    const std::int64_t end =
        j + 1 < runs.size() ? runs[j + 1].first : std::max(runs[j].last, runs[j].first + 1);
    out.stays.push_back({runs[j].cell, runs[j].first, end - runs[j].first});
  }
  const std::int64_t horizon = out.stays.back().end_slot();
  out.num_days = static_cast<int>(std::max<std::int64_t>(
      1, (horizon + grid.slots_per_day - 1) / grid.slots_per_day));
  return out;
}

std::vector<GeoPoint> to_points(const Trajectory& t, const GridSpec& grid) {
  std::vector<GeoPoint> pts;
  pts.reserve(t.stays.size() + 1);
  const double slot_s = grid.slot_seconds();
  auto emit = [&](Cell c, std::int64_t slot) {
    const LatLon ll = cell_center(grid, c);
    pts.push_back({ll.lat, ll.lon, (static_cast<double>(slot) + 0.5) * slot_s});
  };
  for (const Stay& s : t.stays) emit(s.cell, s.start_slot);
  if (!t.stays.empty() && t.stays.back().duration_slots > 1) {
    emit(t.stays.back().cell, t.stays.back().end_slot());
  }
  return pts;
}

double cell_distance_m(Cell a, Cell b, const GridSpec& grid) {
  const double dx = static_cast<double>(a.x) - b.x;
  const double dy = static_cast<double>(a.y) - b.y;
  return std::hypot(dx, dy) * grid.cell_size_m;
}

std::vector<double> travel_distances(const Trajectory& t, const GridSpec& grid, DistanceOptions opts) {
  std::vector<double> out;
  if (t.stays.size() < 2) return out;
  out.reserve(t.stays.size() - 1);
  for (std::size_t i = 1; i < t.stays.size(); ++i) {
    const double d = cell_distance_m(t.stays[i - 1].cell, t.stays[i].cell, grid);
    if (d == 0.0 && !opts.include_zero) continue;
    out.push_back(d);
  }
  return out;
}

}  // namespace mobsim
