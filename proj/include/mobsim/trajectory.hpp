#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mobsim/core.hpp"

namespace mobsim {

struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;
  double timestamp_s = 0.0;  // seconds since simulation start
};

/// A raw point could not be placed on the grid.
class PointError : public std::invalid_argument {
 public:
  PointError(std::size_t index, const std::string& what)
      : std::invalid_argument(what + " (point " + std::to_string(index) + ")"), index_(index) {}
  [[nodiscard]] std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

/// Local equirectangular projection around the grid origin, in meters.
struct PlanarPoint {
  double x_m = 0.0;
  double y_m = 0.0;
};
PlanarPoint project(const GridSpec& grid, LatLon p);
LatLon unproject(const GridSpec& grid, PlanarPoint p);
LatLon cell_center(const GridSpec& grid, Cell cell);

/// Maps time-ordered points onto the grid. Points sharing a slot keep only
/// the last one; a run of consecutive same-cell points becomes one stay that
/// lasts until the next run begins. The final stay ends at its last point
/// (minimum one slot).
Trajectory coarse_grain(std::span<const GeoPoint> points, const GridSpec& grid,
                        std::optional<std::string> user_id = std::nullopt);

/// Point stream that coarse-grains back to `t` for gap-free trajectories.
std::vector<GeoPoint> to_points(const Trajectory& t, const GridSpec& grid);

double cell_distance_m(Cell a, Cell b, const GridSpec& grid);

struct DistanceOptions {
  bool include_zero = true;
};

std::vector<double> travel_distances(const Trajectory& t, const GridSpec& grid,
                                     DistanceOptions opts = {});

}  // namespace mobsim
