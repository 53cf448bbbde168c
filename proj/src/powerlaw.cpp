#include "mobsim/powerlaw.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mobsim {

TruncatedPowerLaw::TruncatedPowerLaw(double beta, double kappa, double x0, double lo, double hi)
    : beta_(beta), kappa_(kappa), x0_(x0) {
  if (!(lo > 0.0) || !(hi > lo)) throw std::invalid_argument("power law: need 0 < lo < hi");
  if (!(kappa > 0.0) || x0 < 0.0) throw std::invalid_argument("power law: invalid kappa or offset");

  log_x_.resize(kTableSize);
  cdf_.assign(kTableSize, 0.0);
  const double u0 = std::log(lo);
  const double du = (std::log(hi) - u0) / (kTableSize - 1);
  // density in u = ln x picks up the Jacobian x
  std::vector<double> log_f(kTableSize);
  for (int j = 0; j < kTableSize; ++j) {
    log_x_[j] = u0 + du * j;
    const double x = std::exp(log_x_[j]);
    log_f[j] = log_x_[j] - beta * std::log(x + x0) - x / kappa;
  }
  const double peak = *std::max_element(log_f.begin(), log_f.end());
  double first_moment = 0.0;
  double prev_f = std::exp(log_f[0] - peak);
  double prev_xf = prev_f * std::exp(log_x_[0]);
  for (int j = 1; j < kTableSize; ++j) {
    const double f = std::exp(log_f[j] - peak);
    const double xf = f * std::exp(log_x_[j]);
    cdf_[j] = cdf_[j - 1] + 0.5 * (f + prev_f) * du;
    first_moment += 0.5 * (xf + prev_xf) * du;
    prev_f = f;
    prev_xf = xf;
  }
  const double total = cdf_.back();
  if (!(total > 0.0) || !std::isfinite(total)) throw std::invalid_argument("power law: degenerate table");
  for (double& c : cdf_) c /= total;
  cdf_.back() = 1.0;
  mean_ = first_moment / total;
}

double TruncatedPowerLaw::quantile(double u) const {
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  if (it == cdf_.begin()) return std::exp(log_x_.front());
  if (it == cdf_.end()) return std::exp(log_x_.back());
  const auto j = static_cast<std::size_t>(it - cdf_.begin());
  const double span = cdf_[j] - cdf_[j - 1];
  const double w = span > 0.0 ? (u - cdf_[j - 1]) / span : 0.0;
  return std::exp(log_x_[j - 1] + w * (log_x_[j] - log_x_[j - 1]));
}

double TruncatedPowerLaw::sample(Rng& rng) const { return quantile(rng.uniform()); }

}  // namespace mobsim
