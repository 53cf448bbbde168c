#include "mobsim/measures.hpp"

#include <gsl/gsl_fit.h>
#include <gsl/gsl_integration.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <set>

#include "mobsim/trajectory.hpp"

namespace mobsim {

std::string_view to_string(SampleKind kind) {
  switch (kind) {
    case SampleKind::DistanceM: return "distance_m";
    case SampleKind::DurationSlots: return "duration_slots";
    case SampleKind::RadiusM: return "radius_m";
    case SampleKind::Dimensionless: return "dimensionless";
  }
  return "?";
}

SampleKind sample_kind_from_string(std::string_view name) {
  for (auto k : {SampleKind::DistanceM, SampleKind::DurationSlots, SampleKind::RadiusM,
                 SampleKind::Dimensionless}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown sample kind '" + std::string(name) + "'");
}

double radius_of_gyration(const Trajectory& t, const GridSpec& grid) {
  if (t.stays.empty()) throw std::invalid_argument("radius_of_gyration: empty trajectory");
  double cx = 0.0;
  double cy = 0.0;
  for (const Stay& s : t.stays) {
    cx += s.cell.x;
    cy += s.cell.y;
  }
  const auto n = static_cast<double>(t.stays.size());
  cx /= n;
  cy /= n;
  double sq = 0.0;
  for (const Stay& s : t.stays) {
    const double dx = s.cell.x - cx;
    const double dy = s.cell.y - cy;
    sq += dx * dx + dy * dy;
  }
  return std::sqrt(sq / n) * grid.cell_size_m;
}

EmpiricalDistribution stay_durations(const Trajectory& t) {
  EmpiricalDistribution d{{}, SampleKind::DurationSlots};
  d.samples.reserve(t.stays.size());
  for (const Stay& s : t.stays) d.samples.push_back(static_cast<double>(s.duration_slots));
  return d;
}

double default_offset(SampleKind kind) {
  switch (kind) {
    case SampleKind::DistanceM:
    case SampleKind::RadiusM: return 1000.0;
    case SampleKind::DurationSlots:
    case SampleKind::Dimensionless: return 1.0;
  }
  return 1.0;
}

// ---------------------------------------------------------------------------
// truncated power law

namespace {

constexpr std::size_t kPanels = 96;
constexpr std::size_t kNodesPerPanel = 16;

struct GlTable {
  std::unique_ptr<gsl_integration_glfixed_table, decltype(&gsl_integration_glfixed_table_free)> table{
      gsl_integration_glfixed_table_alloc(kNodesPerPanel), &gsl_integration_glfixed_table_free};
};

struct PowerLawProblem {
  std::vector<double> samples;
  double log_lo = 0.0;
  double log_hi = 0.0;
  double sum_x = 0.0;
  double fixed_x0 = 1.0;
  bool fit_x0 = false;
  double log_kappa_min = 0.0;
  double log_kappa_max = 0.0;
  // quadrature nodes in u = ln x, shared across evaluations
  std::vector<double> node_x;
  std::vector<double> node_w;

  void build_nodes() {
    GlTable gl;
    const double width = (log_hi - log_lo) / kPanels;
    for (std::size_t p = 0; p < kPanels; ++p) {
      const double a = log_lo + width * p;
      for (std::size_t i = 0; i < kNodesPerPanel; ++i) {
        double xi = 0.0;
        double wi = 0.0;
        gsl_integration_glfixed_point(a, a + width, i, &xi, &wi, gl.table.get());
        node_x.push_back(std::exp(xi));
        node_w.push_back(wi * std::exp(xi));  // Jacobian dx = x du
      }
    }
  }

  [[nodiscard]] double log_normalizer(double beta, double kappa, double x0) const {
    double peak = -std::numeric_limits<double>::infinity();
    std::vector<double> lf(node_x.size());
    for (std::size_t i = 0; i < node_x.size(); ++i) {
      lf[i] = -beta * std::log(node_x[i] + x0) - node_x[i] / kappa;
      peak = std::max(peak, lf[i]);
    }
    double s = 0.0;
    for (std::size_t i = 0; i < node_x.size(); ++i) s += node_w[i] * std::exp(lf[i] - peak);
    return peak + std::log(s);
  }

  [[nodiscard]] double sum_log_offset(double x0) const {
    double s = 0.0;
    for (double x : samples) s += std::log(x + x0);
    return s;
  }

  struct Point {
    double beta;
    double kappa;
    double x0;
  };

  [[nodiscard]] Point decode(const gsl_vector* v) const {
    const double beta = std::exp(std::clamp(gsl_vector_get(v, 0), -20.0, 3.0));
    const double kappa = std::exp(std::clamp(gsl_vector_get(v, 1), log_kappa_min, log_kappa_max));
    const double x0 = fit_x0 ? std::exp(std::clamp(gsl_vector_get(v, 2), -20.0, log_hi)) : fixed_x0;
    return {beta, kappa, x0};
  }

  mutable double cached_x0 = std::numeric_limits<double>::quiet_NaN();
  mutable double cached_sum_log = 0.0;

  [[nodiscard]] double nll(Point p) const {
    if (!(p.x0 == cached_x0)) {
      cached_x0 = p.x0;
      cached_sum_log = sum_log_offset(p.x0);
    }
    const auto n = static_cast<double>(samples.size());
    return p.beta * cached_sum_log + sum_x / p.kappa + n * log_normalizer(p.beta, p.kappa, p.x0);
  }
};

double powerlaw_objective(const gsl_vector* v, void* params) {
  const auto* prob = static_cast<const PowerLawProblem*>(params);
  const double f = prob->nll(prob->decode(v));
  return std::isfinite(f) ? f : std::numeric_limits<double>::max();
}

}  // namespace

TruncatedPowerLawFit fit_truncated_powerlaw(const EmpiricalDistribution& d, PowerLawFitOptions opts) {
  PowerLawProblem prob;
  std::size_t zeros = 0;
  prob.samples.reserve(d.samples.size());
  for (double x : d.samples) {
    if (!std::isfinite(x) || x < 0.0) throw std::invalid_argument("power-law fit: negative or non-finite sample");
    if (x == 0.0) {
      ++zeros;
    } else {
      prob.samples.push_back(x);
    }
  }
  if (prob.samples.size() < opts.min_samples) {
    throw FitError(FitErrorKind::InsufficientData,
                   "power-law fit: " + std::to_string(prob.samples.size()) + " positive samples, need " +
                       std::to_string(opts.min_samples));
  }
  const auto [min_it, max_it] = std::minmax_element(prob.samples.begin(), prob.samples.end());
  const double lo = *min_it;
  const double hi = *max_it;
  if (lo == hi) throw FitError(FitErrorKind::Degenerate, "power-law fit: all samples equal");
  if (!(opts.x0 >= 0.0)) throw std::invalid_argument("power-law fit: negative offset");

  prob.log_lo = std::log(lo);
  prob.log_hi = std::log(hi * opts.support_factor);
  prob.sum_x = std::accumulate(prob.samples.begin(), prob.samples.end(), 0.0);
  prob.fixed_x0 = opts.x0;
  prob.fit_x0 = opts.fit_x0;
  prob.log_kappa_min = std::log(lo) - 3.0 * std::log(10.0);
  prob.log_kappa_max = prob.log_hi + 3.0 * std::log(10.0);
  prob.build_nodes();

  // coarse grid for the simplex start
  const double x0_start = opts.fit_x0 ? std::max(opts.x0, lo) : opts.x0;
  double best = std::numeric_limits<double>::infinity();
  double best_beta = 1.0;
  double best_kappa = hi;
  for (double beta : {0.05, 0.3, 0.6, 1.0, 1.4, 1.8, 2.2, 2.8, 3.5}) {
    for (int k = 0; k <= 12; ++k) {
      const double log_kappa = prob.log_kappa_min + (prob.log_kappa_max - prob.log_kappa_min) * k / 12.0;
      const double f = prob.nll({beta, std::exp(log_kappa), x0_start});
      if (f < best) {
        best = f;
        best_beta = beta;
        best_kappa = std::exp(log_kappa);
      }
    }
  }

  const std::size_t dim = opts.fit_x0 ? 3 : 2;
  std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)> x(gsl_vector_alloc(dim), &gsl_vector_free);
  std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)> step(gsl_vector_alloc(dim), &gsl_vector_free);
  gsl_vector_set(x.get(), 0, std::log(best_beta));
  gsl_vector_set(x.get(), 1, std::log(best_kappa));
  gsl_vector_set_all(step.get(), 0.3);
  if (opts.fit_x0) gsl_vector_set(x.get(), 2, std::log(std::max(x0_start, 1e-9)));

  gsl_multimin_function fn{&powerlaw_objective, dim, &prob};
  std::unique_ptr<gsl_multimin_fminimizer, decltype(&gsl_multimin_fminimizer_free)> solver(
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, dim), &gsl_multimin_fminimizer_free);
  gsl_multimin_fminimizer_set(solver.get(), &fn, x.get(), step.get());
  for (int iter = 0; iter < 4000; ++iter) {
    if (gsl_multimin_fminimizer_iterate(solver.get()) != GSL_SUCCESS) break;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(solver.get()), 1e-7) == GSL_SUCCESS) break;
  }

  const auto p = prob.decode(gsl_multimin_fminimizer_x(solver.get()));
  TruncatedPowerLawFit fit;
  fit.beta = p.beta;
  fit.kappa = p.kappa;
  fit.x0 = p.x0;
  fit.loglik = -prob.nll(p);
  fit.n = prob.samples.size();
  fit.zeros_dropped = zeros;
  return fit;
}

// ---------------------------------------------------------------------------
// log-log regressions

namespace {

struct LineFit {
  double slope;
  double r2;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  double c0 = 0.0;
  double c1 = 0.0;
  double cov00 = 0.0;
  double cov01 = 0.0;
  double cov11 = 0.0;
  double sumsq = 0.0;
  gsl_fit_linear(x.data(), 1, y.data(), 1, x.size(), &c0, &c1, &cov00, &cov01, &cov11, &sumsq);
  const double mean_y = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double ss_tot = 0.0;
  for (double v : y) ss_tot += (v - mean_y) * (v - mean_y);
  // a flat response is fitted exactly by a zero slope
  const double r2 = ss_tot > 0.0 ? 1.0 - sumsq / ss_tot : 1.0;
  if (ss_tot == 0.0) c1 = 0.0;
  return {c1, r2};
}

}  // namespace

ZipfFit fit_zipf_counts(std::span<const double> counts) {
  if (counts.size() < 3) {
    throw FitError(FitErrorKind::InsufficientData, "zipf fit: fewer than three locations");
  }
  std::vector<double> sorted(counts.begin(), counts.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  if (!(sorted.back() > 0.0)) throw std::invalid_argument("zipf fit: counts must be positive");
  std::vector<double> lx(sorted.size());
  std::vector<double> ly(sorted.size());
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    lx[k] = std::log(static_cast<double>(k + 1));
    ly[k] = std::log(sorted[k]);
  }
  const LineFit lf = least_squares(lx, ly);
  return {-lf.slope, sorted.size(), lf.r2};
}

std::map<Cell, std::size_t> visit_counts(const Trajectory& t) {
  std::map<Cell, std::size_t> counts;
  for (const Stay& s : t.stays) ++counts[s.cell];
  return counts;
}

ZipfFit fit_zipf(const Trajectory& t) {
  const auto counts = visit_counts(t);
  std::vector<double> c;
  c.reserve(counts.size());
  for (const auto& [cell, n] : counts) c.push_back(static_cast<double>(n));
  return fit_zipf_counts(c);
}

ExplorationFit fit_exploration(const Trajectory& t) {
  if (t.stays.size() < 5) throw FitError(FitErrorKind::InsufficientData, "exploration fit: fewer than five stays");
  std::set<Cell> seen;
  std::vector<double> lx;
  std::vector<double> ly;
  lx.reserve(t.stays.size());
  ly.reserve(t.stays.size());
  for (std::size_t h = 0; h < t.stays.size(); ++h) {
    seen.insert(t.stays[h].cell);
    lx.push_back(std::log(static_cast<double>(h + 1)));
    ly.push_back(std::log(static_cast<double>(seen.size())));
  }
  const LineFit lf = least_squares(lx, ly);
  return {std::clamp(lf.slope, 0.0, 1.5), t.stays.size()};
}

// ---------------------------------------------------------------------------
// preferential return

std::vector<ReturnEvent> return_events(const Trajectory& t) {
  std::vector<ReturnEvent> events;
  std::map<Cell, std::size_t> counts;
  // multiplicity of each visit count among visited cells
  std::map<std::size_t, std::size_t> count_hist;
  auto bump = [&](Cell c) {
    std::size_t& n = counts[c];
    if (n > 0 && --count_hist[n] == 0) count_hist.erase(n);
    ++n;
    ++count_hist[n];
  };
  for (std::size_t i = 0; i < t.stays.size(); ++i) {
    const Cell c = t.stays[i].cell;
    if (i > 0) {
      const Cell prev = t.stays[i - 1].cell;
      const auto it = counts.find(c);
      if (it != counts.end() && c != prev) {
        ReturnEvent ev;
        ev.chosen_count = static_cast<double>(it->second);
        const std::size_t prev_count = counts.at(prev);
        for (const auto& [n, mult] : count_hist) {
          const std::size_t m = n == prev_count ? mult - 1 : mult;
          if (m > 0) ev.candidates.emplace_back(static_cast<double>(n), m);
        }
        events.push_back(std::move(ev));
      }
    }
    bump(c);
  }
  return events;
}

PreferentialReturnFit fit_preferential_return(std::span<const ReturnEvent> events) {
  if (events.empty()) {
    throw FitError(FitErrorKind::InsufficientData, "preferential-return fit: no return events");
  }
  // d/dgamma of the log-likelihood; it decreases in gamma, so the maximizer
  // on [0, 4] is found by bisection on its sign.
  auto score = [&](double gamma) {
    double s = 0.0;
    for (const ReturnEvent& ev : events) {
      const double lc = std::log(ev.chosen_count);
      double peak = -std::numeric_limits<double>::infinity();
      for (const auto& [n, m] : ev.candidates) peak = std::max(peak, gamma * std::log(n));
      double z = 0.0;
      double zl = 0.0;
      for (const auto& [n, m] : ev.candidates) {
        const double ln = std::log(n);
        const double w = static_cast<double>(m) * std::exp(gamma * ln - peak);
        z += w;
        zl += w * ln;
      }
      s += lc - zl / z;
    }
    return s;
  };
  constexpr double kLo = 0.0;
  constexpr double kHi = 4.0;
  double gamma = 0.0;
  if (score(kLo) <= 0.0) {
    gamma = kLo;
  } else if (score(kHi) >= 0.0) {
    gamma = kHi;
  } else {
    double a = kLo;
    double b = kHi;
    while (b - a > 1e-10) {
      const double mid = 0.5 * (a + b);
      (score(mid) > 0.0 ? a : b) = mid;
    }
    gamma = 0.5 * (a + b);
  }
  return {gamma, events.size()};
}

PreferentialReturnFit fit_preferential_return(const Trajectory& t) {
  const auto events = return_events(t);
  return fit_preferential_return(events);
}

// ---------------------------------------------------------------------------
// population aggregates

CircadianProfile circadian_profile(std::span<const Trajectory> ts, const GridSpec& grid) {
  CircadianProfile out;
  std::array<std::size_t, 24> counts{};
  for (const Trajectory& t : ts) {
    for (std::size_t i = 1; i < t.stays.size(); ++i) {
      ++counts[grid.hour_of_slot(t.stays[i - 1].end_slot())];
      ++out.trips;
    }
  }
  if (out.trips == 0) return out;
  out.empty = false;
  for (int h = 0; h < 24; ++h) out.probs[h] = static_cast<double>(counts[h]) / static_cast<double>(out.trips);
  return out;
}

std::map<OdPair, double> od_matrix(std::span<const Trajectory> ts) {
  std::map<OdPair, double> out;
  double total = 0.0;
  for (const Trajectory& t : ts) {
    for (std::size_t i = 1; i < t.stays.size(); ++i) {
      out[{t.stays[i - 1].cell, t.stays[i].cell}] += 1.0;
      total += 1.0;
    }
  }
  for (auto& [k, v] : out) v /= total;
  return out;
}

Ccdf ccdf(const EmpiricalDistribution& d) {
  if (d.samples.empty()) throw std::invalid_argument("ccdf: empty sample");
  std::vector<double> sorted = d.samples;
  std::sort(sorted.begin(), sorted.end());
  Ccdf out;
  const auto n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i == 0 || sorted[i] != sorted[i - 1]) {
      out.support.push_back(sorted[i]);
      out.probs.push_back(static_cast<double>(sorted.size() - i) / n);
    }
  }
  return out;
}

UserMeasures summarize(const Trajectory& t, const GridSpec& grid) {
  UserMeasures m;
  if (t.stays.empty()) return m;
  m.radius_m = radius_of_gyration(t, grid);
  m.durations = stay_durations(t).samples;
  m.distances = travel_distances(t, grid);
  for (const auto& [cell, n] : visit_counts(t)) m.rank_counts.push_back(static_cast<double>(n));
  std::sort(m.rank_counts.begin(), m.rank_counts.end(), std::greater<>());
  if (m.rank_counts.size() >= 3) m.zeta = fit_zipf_counts(m.rank_counts).zeta;
  if (t.stays.size() >= 5) m.alpha = fit_exploration(t).alpha;
  return m;
}

}  // namespace mobsim
