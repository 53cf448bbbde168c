#pragma once

#include <vector>

#include "mobsim/rng.hpp"

namespace mobsim {

/// (x + x0)^-beta * exp(-x / kappa) restricted to [lo, hi], sampled by
/// inverse CDF over a log-spaced table.
class TruncatedPowerLaw {
 public:
  static constexpr int kTableSize = 4096;

  TruncatedPowerLaw(double beta, double kappa, double x0, double lo, double hi);

  double sample(Rng& rng) const;
  double quantile(double u) const;
  /// Mean of the tabulated distribution.
  [[nodiscard]] double mean() const { return mean_; }

  [[nodiscard]] double beta() const { return beta_; }
  [[nodiscard]] double kappa() const { return kappa_; }

 private:
  double beta_;
  double kappa_;
  double x0_;
  std::vector<double> log_x_;
  std::vector<double> cdf_;
  double mean_ = 0.0;
};

}  // namespace mobsim
