#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mobsim/core.hpp"
#include "mobsim/measures.hpp"

namespace mobsim {

/// Kind of shared data the targets were derived from: user-linked coarse
/// trajectories, anonymous trajectories, or published summary statistics.
enum class SharedDataType { SD1, SD2, SD3 };

enum class MeasureId {
  Radius,
  Duration,
  Zeta,
  Distance,
  BetaDistance,
  KappaDistance,
  BetaDuration,
  KappaDuration,
  ZetaTotal,
};

enum class DistanceKind { Vector, Scalar };

std::string_view to_string(SharedDataType t);
SharedDataType shared_data_type_from_string(std::string_view name);
std::string_view to_string(MeasureId m);
MeasureId measure_id_from_string(std::string_view name);

DistanceKind distance_kind_of(MeasureId m);
SampleKind sample_kind_of(MeasureId m);

struct ObjectiveSpec {
  MeasureId measure = MeasureId::Radius;
  DistanceKind kind = DistanceKind::Vector;
  EmpiricalDistribution target;  // vector objectives
  double target_scalar = 0.0;    // scalar objectives
};

struct GuidanceConfig {
  SharedDataType shared_data_type = SharedDataType::SD1;
  std::vector<ObjectiveSpec> objectives;
  double mu = 0.5;
  double epsilon_reward = 1e-6;
  double epsilon_log = 1e-9;
  bool l1_log_coords = true;  // integrate the CCDF gap over log z
};

/// Objectives used for each shared-data type when none are named.
std::vector<MeasureId> default_measures(SharedDataType t);

/// Throws std::invalid_argument on a malformed configuration.
void validate(const GuidanceConfig& cfg);

double w1_log(const EmpiricalDistribution& a, const EmpiricalDistribution& b, double eps);
double l1_ccdf(const EmpiricalDistribution& a, const EmpiricalDistribution& b, double eps, bool log_coords = true);
double g_vector(const EmpiricalDistribution& sim, const EmpiricalDistribution& target, const GuidanceConfig& cfg);
double g_scalar(double sim, double target);

/// Geometric mean of (g_i + eps); lower is better.
double aggregate_R(std::span<const double> gs, double eps);
inline double step_reward(double r_now, double r_next) { return r_now - r_next; }

/// Everything the objectives can be computed from. Per-user vectors stay
/// aligned with `user_ids`; pooled vectors mix all trajectories.
struct PopulationSample {
  std::vector<std::string> user_ids;
  std::vector<UserMeasures> users;
  std::vector<double> radii;
  std::vector<double> zetas;
  std::vector<double> durations;
  std::vector<double> distances;
  bool has_user_ids = true;
};

PopulationSample sample_population(std::span<const Trajectory> ts, const GridSpec& grid);
PopulationSample sample_population(std::vector<std::string> ids, std::vector<UserMeasures> users);

struct MeasureValue {
  EmpiricalDistribution samples;
  double scalar = 0.0;
};

/// Computes the simulated value of one measure. Throws FitError when a
/// scalar summary cannot be fitted.
MeasureValue measure_value(MeasureId m, const PopulationSample& pop);

/// Per-objective distances, in objective order.
std::vector<double> objective_distances(const GuidanceConfig& cfg, const PopulationSample& pop);

/// Builds targets for every default objective of `type` from reference data.
/// SD1 needs user ids on every trajectory.
GuidanceConfig make_target(SharedDataType type, std::span<const Trajectory> reference, const GridSpec& grid);

}  // namespace mobsim
