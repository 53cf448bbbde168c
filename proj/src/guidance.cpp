#include "mobsim/guidance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mobsim {

namespace {

constexpr int kQuantileGrid = 1024;

std::vector<double> sorted_transformed(const EmpiricalDistribution& d, double eps, bool log_space) {
  if (d.samples.empty()) throw std::invalid_argument("distribution distance: empty sample");
  std::vector<double> out;
  out.reserve(d.samples.size());
  for (double x : d.samples) out.push_back(log_space ? std::log(x + eps) : x);
  std::sort(out.begin(), out.end());
  return out;
}

struct NamedMeasure {
  MeasureId id;
  std::string_view name;
};

constexpr std::array<NamedMeasure, 9> kMeasureNames{{
    {MeasureId::Radius, "radius"},
    {MeasureId::Duration, "duration"},
    {MeasureId::Zeta, "zeta"},
    {MeasureId::Distance, "distance"},
    {MeasureId::BetaDistance, "beta_distance"},
    {MeasureId::KappaDistance, "kappa_distance"},
    {MeasureId::BetaDuration, "beta_duration"},
    {MeasureId::KappaDuration, "kappa_duration"},
    {MeasureId::ZetaTotal, "zeta_total"},
}};

}  // namespace

std::string_view to_string(SharedDataType t) {
  switch (t) {
    case SharedDataType::SD1: return "sd1";
    case SharedDataType::SD2: return "sd2";
    case SharedDataType::SD3: return "sd3";
  }
  return "?";
}

SharedDataType shared_data_type_from_string(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  for (auto t : {SharedDataType::SD1, SharedDataType::SD2, SharedDataType::SD3}) {
    if (to_string(t) == lower) return t;
  }
  throw std::invalid_argument("unknown shared-data type '" + std::string(name) + "'");
}

std::string_view to_string(MeasureId m) {
  for (const auto& nm : kMeasureNames) {
    if (nm.id == m) return nm.name;
  }
  return "?";
}

MeasureId measure_id_from_string(std::string_view name) {
  for (const auto& nm : kMeasureNames) {
    if (nm.name == name) return nm.id;
  }
  throw std::invalid_argument("unknown measure '" + std::string(name) + "'");
}

DistanceKind distance_kind_of(MeasureId m) {
  switch (m) {
    case MeasureId::Radius:
    case MeasureId::Duration:
    case MeasureId::Zeta:
    case MeasureId::Distance: return DistanceKind::Vector;
    default: return DistanceKind::Scalar;
  }
}

SampleKind sample_kind_of(MeasureId m) {
  switch (m) {
    case MeasureId::Radius: return SampleKind::RadiusM;
    case MeasureId::Duration: return SampleKind::DurationSlots;
    case MeasureId::Distance: return SampleKind::DistanceM;
    default: return SampleKind::Dimensionless;
  }
}

std::vector<MeasureId> default_measures(SharedDataType t) {
  switch (t) {
    case SharedDataType::SD1: return {MeasureId::Radius, MeasureId::Duration, MeasureId::Zeta};
    case SharedDataType::SD2: return {MeasureId::Distance, MeasureId::Duration};
    case SharedDataType::SD3:
      return {MeasureId::BetaDistance, MeasureId::KappaDistance, MeasureId::BetaDuration,
              MeasureId::KappaDuration, MeasureId::ZetaTotal};
  }
  return {};
}

void validate(const GuidanceConfig& cfg) {
  if (cfg.objectives.empty()) throw std::invalid_argument("guidance: at least one objective is required");
  if (!(cfg.mu >= 0.0)) throw std::invalid_argument("guidance: mu must be non-negative");
  if (!(cfg.epsilon_reward > 0.0) || !(cfg.epsilon_log > 0.0)) {
    throw std::invalid_argument("guidance: epsilons must be positive");
  }
  for (const ObjectiveSpec& o : cfg.objectives) {
    const std::string name(to_string(o.measure));
    if (o.kind != distance_kind_of(o.measure)) {
      throw std::invalid_argument("guidance: wrong distance kind for " + name);
    }
    const bool scalar_type = cfg.shared_data_type == SharedDataType::SD3;
    if (scalar_type != (o.kind == DistanceKind::Scalar)) {
      throw std::invalid_argument("guidance: objective " + name + " does not match the shared-data type");
    }
    if (o.kind == DistanceKind::Vector) {
      if (o.target.samples.empty()) throw std::invalid_argument("guidance: empty target for " + name);
      for (double v : o.target.samples) {
        if (!std::isfinite(v)) throw std::invalid_argument("guidance: non-finite target for " + name);
      }
    } else if (!std::isfinite(o.target_scalar) || o.target_scalar == 0.0) {
      throw std::invalid_argument("guidance: scalar target for " + name + " must be finite and non-zero");
    }
  }
}

double w1_log(const EmpiricalDistribution& a, const EmpiricalDistribution& b, double eps) {
  const auto la = sorted_transformed(a, eps, true);
  const auto lb = sorted_transformed(b, eps, true);
  double total = 0.0;
  if (la.size() == lb.size()) {
    for (std::size_t i = 0; i < la.size(); ++i) total += std::abs(la[i] - lb[i]);
    return total / static_cast<double>(la.size());
  }
  auto q = [](const std::vector<double>& s, double p) {
    const auto idx = static_cast<std::size_t>(p * static_cast<double>(s.size()));
    return s[std::min(idx, s.size() - 1)];
  };
  for (int j = 0; j < kQuantileGrid; ++j) {
    const double p = (j + 0.5) / kQuantileGrid;
    total += std::abs(q(la, p) - q(lb, p));
  }
  return total / kQuantileGrid;
}

double l1_ccdf(const EmpiricalDistribution& a, const EmpiricalDistribution& b, double eps, bool log_coords) {
  const auto sa = sorted_transformed(a, eps, log_coords);
  const auto sb = sorted_transformed(b, eps, log_coords);
  std::vector<double> merged;
  merged.reserve(sa.size() + sb.size());
  std::merge(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(merged));
  merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
  const auto na = static_cast<double>(sa.size());
  const auto nb = static_cast<double>(sb.size());
  double total = 0.0;
  // on (v_j, v_{j+1}] each CCDF equals the share of samples above v_j
  for (std::size_t j = 0; j + 1 < merged.size(); ++j) {
    const double v = merged[j];
    const auto above_a = static_cast<double>(sa.end() - std::upper_bound(sa.begin(), sa.end(), v));
    const auto above_b = static_cast<double>(sb.end() - std::upper_bound(sb.begin(), sb.end(), v));
    total += std::abs(above_a / na - above_b / nb) * (merged[j + 1] - v);
  }
  return total;
}

double g_vector(const EmpiricalDistribution& sim, const EmpiricalDistribution& target, const GuidanceConfig& cfg) {
  const double w1 = w1_log(sim, target, cfg.epsilon_log);
  if (cfg.mu == 0.0) return w1;
  return w1 + cfg.mu * l1_ccdf(sim, target, cfg.epsilon_log, cfg.l1_log_coords);
}

double g_scalar(double sim, double target) {
  if (target == 0.0) throw std::invalid_argument("g_scalar: zero target");
  return std::abs(sim - target) / std::abs(target);
}

double aggregate_R(std::span<const double> gs, double eps) {
  if (gs.empty()) throw std::invalid_argument("aggregate_R: no objectives");
  double log_sum = 0.0;
  for (double g : gs) {
    if (!(g >= 0.0)) throw std::invalid_argument("aggregate_R: negative objective distance");
    log_sum += std::log(g + eps);
  }
  return std::exp(log_sum / static_cast<double>(gs.size()));
}

PopulationSample sample_population(std::vector<std::string> ids, std::vector<UserMeasures> users) {
  PopulationSample pop;
  pop.user_ids = std::move(ids);
  pop.users = std::move(users);
  for (const UserMeasures& u : pop.users) {
    pop.durations.insert(pop.durations.end(), u.durations.begin(), u.durations.end());
    pop.distances.insert(pop.distances.end(), u.distances.begin(), u.distances.end());
    if (u.durations.empty()) continue;
    pop.radii.push_back(u.radius_m);
    if (u.zeta) pop.zetas.push_back(*u.zeta);
  }
  return pop;
}

PopulationSample sample_population(std::span<const Trajectory> ts, const GridSpec& grid) {
  std::vector<std::string> ids;
  std::vector<UserMeasures> users;
  bool all_ids = true;
  for (const Trajectory& t : ts) {
    all_ids = all_ids && t.user_id.has_value();
    ids.push_back(t.user_id.value_or(""));
    users.push_back(summarize(t, grid));
  }
  PopulationSample pop = sample_population(std::move(ids), std::move(users));
  pop.has_user_ids = all_ids;
  return pop;
}

MeasureValue measure_value(MeasureId m, const PopulationSample& pop) {
  MeasureValue v;
  v.samples.kind = sample_kind_of(m);
  auto fit = [](const std::vector<double>& xs, SampleKind kind) {
    return fit_truncated_powerlaw({xs, kind}, {.x0 = default_offset(kind)});
  };
  switch (m) {
    case MeasureId::Radius: v.samples.samples = pop.radii; break;
    case MeasureId::Duration: v.samples.samples = pop.durations; break;
    case MeasureId::Zeta: v.samples.samples = pop.zetas; break;
    case MeasureId::Distance: v.samples.samples = pop.distances; break;
    case MeasureId::BetaDistance: v.scalar = fit(pop.distances, SampleKind::DistanceM).beta; break;
    case MeasureId::KappaDistance: v.scalar = fit(pop.distances, SampleKind::DistanceM).kappa; break;
    case MeasureId::BetaDuration: v.scalar = fit(pop.durations, SampleKind::DurationSlots).beta; break;
    case MeasureId::KappaDuration: v.scalar = fit(pop.durations, SampleKind::DurationSlots).kappa; break;
    case MeasureId::ZetaTotal: {
      std::vector<double> pooled;
      for (const UserMeasures& u : pop.users) {
        if (u.rank_counts.size() > pooled.size()) pooled.resize(u.rank_counts.size(), 0.0);
        for (std::size_t k = 0; k < u.rank_counts.size(); ++k) pooled[k] += u.rank_counts[k];
      }
      v.scalar = fit_zipf_counts(pooled).zeta;
      break;
    }
  }
  if (distance_kind_of(m) == DistanceKind::Vector && v.samples.samples.empty()) {
    throw FitError(FitErrorKind::InsufficientData, "no simulated values for " + std::string(to_string(m)));
  }
  return v;
}

std::vector<double> objective_distances(const GuidanceConfig& cfg, const PopulationSample& pop) {
  std::vector<double> gs;
  gs.reserve(cfg.objectives.size());
  // beta and kappa of one law share a single fit
  std::optional<TruncatedPowerLawFit> distance_fit;
  std::optional<TruncatedPowerLawFit> duration_fit;
  auto cached = [&](std::optional<TruncatedPowerLawFit>& slot, const std::vector<double>& xs, SampleKind kind) {
    if (!slot) slot = fit_truncated_powerlaw({xs, kind}, {.x0 = default_offset(kind)});
    return *slot;
  };
  for (const ObjectiveSpec& o : cfg.objectives) {
    switch (o.measure) {
      case MeasureId::BetaDistance:
        gs.push_back(g_scalar(cached(distance_fit, pop.distances, SampleKind::DistanceM).beta, o.target_scalar));
        break;
      case MeasureId::KappaDistance:
        gs.push_back(g_scalar(cached(distance_fit, pop.distances, SampleKind::DistanceM).kappa, o.target_scalar));
        break;
      case MeasureId::BetaDuration:
        gs.push_back(
            g_scalar(cached(duration_fit, pop.durations, SampleKind::DurationSlots).beta, o.target_scalar));
        break;
      case MeasureId::KappaDuration:
        gs.push_back(
            g_scalar(cached(duration_fit, pop.durations, SampleKind::DurationSlots).kappa, o.target_scalar));
        break;
      default: {
        const MeasureValue v = measure_value(o.measure, pop);
        gs.push_back(o.kind == DistanceKind::Vector ? g_vector(v.samples, o.target, cfg)
                                                    : g_scalar(v.scalar, o.target_scalar));
      }
    }
  }
  return gs;
}

GuidanceConfig make_target(SharedDataType type, std::span<const Trajectory> reference, const GridSpec& grid) {
  if (reference.empty()) throw std::invalid_argument("make_target: no reference trajectories");
  if (type == SharedDataType::SD1) {
    for (const Trajectory& t : reference) {
      if (!t.user_id || t.user_id->empty()) {
        throw std::invalid_argument(
            "make_target: sd1 needs user ids; user-level measures are not available for anonymous "
            "trajectories (use sd2 or sd3)");
      }
    }
  }
  const PopulationSample pop = sample_population(reference, grid);
  GuidanceConfig cfg;
  cfg.shared_data_type = type;
  for (MeasureId m : default_measures(type)) {
    ObjectiveSpec o;
    o.measure = m;
    o.kind = distance_kind_of(m);
    const MeasureValue v = measure_value(m, pop);
    if (o.kind == DistanceKind::Vector) {
      o.target = v.samples;
    } else {
      o.target_scalar = v.scalar;
    }
    cfg.objectives.push_back(std::move(o));
  }
  return cfg;
}

}  // namespace mobsim
