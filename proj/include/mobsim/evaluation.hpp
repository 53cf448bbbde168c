#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mobsim/core.hpp"

namespace mobsim {

struct MetricResult {
  std::string name;
  std::string kind;     // "jsd" or "mae"
  std::string binning;  // e.g. "log50", "hour24", "keys", "linear50"
  std::optional<double> value;  // absent when the metric could not be computed
  std::size_t n_sim = 0;
  std::size_t n_ref = 0;
  std::string note;
};

/// radius, distance, od_sim, duration, circadian, visitation_frequency,
/// exploration, return_mae. Without user ids on both sides only the
/// aggregate metrics (distance, od_sim, duration, circadian) are computed.
struct EvaluationReport {
  bool user_level = true;
  std::vector<MetricResult> metrics;

  [[nodiscard]] const MetricResult* find(std::string_view name) const;
};

EvaluationReport evaluate(std::span<const Trajectory> sim, std::span<const Trajectory> ref, const GridSpec& grid);

std::string report_csv(const EvaluationReport& r);

struct PlotFile {
  std::string name;  // file name, e.g. "ccdf_distance.csv"
  std::string csv;
};

/// CCDFs of radius, distance and duration; histograms of per-user zeta and
/// alpha; the circadian curve.
std::vector<PlotFile> plot_data(std::span<const Trajectory> sim, std::span<const Trajectory> ref, const GridSpec& grid);

}  // namespace mobsim
