#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mobsim/core.hpp"

namespace mobsim {

enum class SampleKind { DistanceM, DurationSlots, RadiusM, Dimensionless };

std::string_view to_string(SampleKind kind);
SampleKind sample_kind_from_string(std::string_view name);

struct EmpiricalDistribution {
  std::vector<double> samples;
  SampleKind kind = SampleKind::Dimensionless;
};

/// P(X >= support[j]) over the sorted distinct sample values.
struct Ccdf {
  std::vector<double> support;
  std::vector<double> probs;
};

struct TruncatedPowerLawFit {
  double beta = 0.0;
  double kappa = 0.0;
  double x0 = 0.0;
  double loglik = 0.0;
  std::size_t n = 0;
  std::size_t zeros_dropped = 0;
};

struct ZipfFit {
  double zeta = 0.0;
  std::size_t n_locations = 0;
  double r2 = 0.0;
};

struct ExplorationFit {
  double alpha = 0.0;
  std::size_t n_stays = 0;
};

struct PreferentialReturnFit {
  double gamma = 0.0;
  std::size_t n_returns = 0;
};

enum class FitErrorKind { InsufficientData, Degenerate };

/// Raised when a fit has too little or degenerate input.
class FitError : public std::runtime_error {
 public:
  FitError(FitErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  [[nodiscard]] FitErrorKind kind() const { return kind_; }

 private:
  FitErrorKind kind_;
};

double radius_of_gyration(const Trajectory& t, const GridSpec& grid);

EmpiricalDistribution stay_durations(const Trajectory& t);

struct PowerLawFitOptions {
  double x0 = 1000.0;  // offset, in sample units
  bool fit_x0 = false;
  std::size_t min_samples = 100;
  double support_factor = 10.0;  // density normalized over [min, max * support_factor]
};

/// Offset used for a sample kind when none is given: 1 km for distances,
/// one slot for durations, one unit otherwise.
double default_offset(SampleKind kind);

/// Maximum-likelihood (beta, kappa) of (x + x0)^-beta * exp(-x / kappa).
TruncatedPowerLawFit fit_truncated_powerlaw(const EmpiricalDistribution& d, PowerLawFitOptions opts);

/// Rank-frequency fit on visit counts (any order, need not be integers).
ZipfFit fit_zipf_counts(std::span<const double> counts);
ZipfFit fit_zipf(const Trajectory& t);

/// Visit counts per distinct cell, one count per stay.
std::map<Cell, std::size_t> visit_counts(const Trajectory& t);

ExplorationFit fit_exploration(const Trajectory& t);

/// One revisit decision: the prior visit count of the chosen cell and the
/// multiset of prior visit counts over the cells that could have been chosen,
/// compressed as (count, number of cells with that count). The cell being
/// left is never a candidate.
struct ReturnEvent {
  double chosen_count = 0.0;
  std::vector<std::pair<double, std::size_t>> candidates;
};

std::vector<ReturnEvent> return_events(const Trajectory& t);

PreferentialReturnFit fit_preferential_return(std::span<const ReturnEvent> events);
PreferentialReturnFit fit_preferential_return(const Trajectory& t);

struct CircadianProfile {
  std::array<double, 24> probs{};
  std::size_t trips = 0;
  bool empty = true;
};

/// Departure hours of all consecutive-stay transitions, normalized.
CircadianProfile circadian_profile(std::span<const Trajectory> ts, const GridSpec& grid);

using OdPair = std::pair<Cell, Cell>;
std::map<OdPair, double> od_matrix(std::span<const Trajectory> ts);

Ccdf ccdf(const EmpiricalDistribution& d);

/// Per-user quantities reused by guidance and action grouping.
struct UserMeasures {
  double radius_m = 0.0;
  std::vector<double> durations;
  std::vector<double> distances;
  std::optional<double> zeta;  // absent when fewer than three locations
  std::optional<double> alpha;
  std::vector<double> rank_counts;  // visit counts, most visited first
};

UserMeasures summarize(const Trajectory& t, const GridSpec& grid);

}  // namespace mobsim
