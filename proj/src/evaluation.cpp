#include "mobsim/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "mobsim/guidance.hpp"
#include "mobsim/jsd.hpp"
#include "mobsim/measures.hpp"

namespace mobsim {

namespace {

constexpr int kBins = 50;

bool all_named(std::span<const Trajectory> ts) {
  return std::all_of(ts.begin(), ts.end(), [](const Trajectory& t) { return t.user_id.has_value(); });
}

std::size_t trips(std::span<const Trajectory> ts) {
  std::size_t n = 0;
  for (const Trajectory& t : ts) n += t.stays.empty() ? 0 : t.stays.size() - 1;
  return n;
}

std::vector<double> alphas(const PopulationSample& p) {
  std::vector<double> out;
  for (const UserMeasures& u : p.users) {
    if (u.alpha) out.push_back(*u.alpha);
  }
  return out;
}

MetricResult sample_metric(std::string name, const std::vector<double>& a, const std::vector<double>& b,
                           Binning binning) {
  MetricResult m{std::move(name), "jsd", binning == Binning::Log ? "log50" : "linear50", std::nullopt, a.size(),
                 b.size(), ""};
  if (a.empty() || b.empty()) {
    m.note = "empty sample";
    return m;
  }
  m.value = jsd_samples(a, b, binning, kBins);
  return m;
}

std::optional<double> user_gamma(const Trajectory& t) {
  try {
    return fit_preferential_return(t).gamma;
  } catch (const FitError&) {
    return std::nullopt;
  }
}

MetricResult return_mae(std::span<const Trajectory> sim, std::span<const Trajectory> ref) {
  MetricResult m{"return_mae", "mae", "per-user", std::nullopt, 0, 0, ""};
  std::map<std::string, const Trajectory*> by_id;
  for (const Trajectory& t : ref) by_id.emplace(*t.user_id, &t);
  double sum = 0.0;
  std::size_t n = 0;
  for (const Trajectory& t : sim) {
    const auto it = by_id.find(*t.user_id);
    if (it == by_id.end()) continue;
    const auto gs = user_gamma(t);
    const auto gr = user_gamma(*it->second);
    if (!gs || !gr) continue;
    sum += std::abs(*gs - *gr);
    ++n;
  }
  if (n > 0) {
    m.value = sum / static_cast<double>(n);
    m.n_sim = m.n_ref = n;
    return m;
  }
  // no matching users: compare the pooled fits
  m.binning = "pooled";
  auto pooled = [](std::span<const Trajectory> ts, std::size_t& count) -> std::optional<double> {
    std::vector<ReturnEvent> ev;
    for (const Trajectory& t : ts) {
      auto e = return_events(t);
      ev.insert(ev.end(), std::make_move_iterator(e.begin()), std::make_move_iterator(e.end()));
    }
    count = ev.size();
    try {
      return fit_preferential_return(ev).gamma;
    } catch (const FitError&) {
      return std::nullopt;
    }
  };
  const auto gs = pooled(sim, m.n_sim);
  const auto gr = pooled(ref, m.n_ref);
  if (gs && gr) {
    m.value = std::abs(*gs - *gr);
  } else {
    m.note = "too few return events";
  }
  return m;
}

std::string ccdf_csv(const std::vector<double>& sim, const std::vector<double>& ref) {
  std::ostringstream os;
  os.precision(10);
  os << "series,x,ccdf\n";
  for (const auto& [label, xs] : {std::pair{"sim", &sim}, std::pair{"ref", &ref}}) {
    if (xs->empty()) continue;
    const Ccdf c = ccdf({*xs, SampleKind::Dimensionless});
    for (std::size_t i = 0; i < c.support.size(); ++i) os << label << ',' << c.support[i] << ',' << c.probs[i] << '\n';
  }
  return os.str();
}

std::string hist_csv(const std::vector<double>& sim, const std::vector<double>& ref) {
  std::ostringstream os;
  os.precision(10);
  os << "bin_lo,bin_hi,sim,ref\n";
  if (sim.empty() || ref.empty()) return os.str();
  const HistogramPair h = shared_histogram(sim, ref, Binning::Linear, 20);
  for (std::size_t i = 0; i < h.a.size(); ++i) {
    os << h.edges[i] << ',' << h.edges[i + 1] << ',' << h.a[i] / static_cast<double>(sim.size()) << ','
       << h.b[i] / static_cast<double>(ref.size()) << '\n';
  }
  return os.str();
}

}  // namespace

const MetricResult* EvaluationReport::find(std::string_view name) const {
  for (const MetricResult& m : metrics) {
    if (m.name == name) return &m;
  }
  return nullptr;
}

EvaluationReport evaluate(std::span<const Trajectory> sim, std::span<const Trajectory> ref, const GridSpec& grid) {
  const PopulationSample ps = sample_population(sim, grid);
  const PopulationSample pr = sample_population(ref, grid);
  EvaluationReport r;
  r.user_level = all_named(sim) && all_named(ref);

  if (r.user_level) r.metrics.push_back(sample_metric("radius", ps.radii, pr.radii, Binning::Log));
  r.metrics.push_back(sample_metric("distance", ps.distances, pr.distances, Binning::Log));

  {
    MetricResult m{"od_sim", "jsd", "keys", std::nullopt, 0, 0, ""};
    const auto a = od_matrix(sim);
    const auto b = od_matrix(ref);
    m.n_sim = trips(sim);
    m.n_ref = trips(ref);
    if (a.empty() || b.empty()) {
      m.note = "no trips";
    } else {
      m.value = jsd_keyed(a, b);
    }
    r.metrics.push_back(std::move(m));
  }

  r.metrics.push_back(sample_metric("duration", ps.durations, pr.durations, Binning::Log));

  {
    MetricResult m{"circadian", "jsd", "hour24", std::nullopt, 0, 0, ""};
    const CircadianProfile a = circadian_profile(sim, grid);
    const CircadianProfile b = circadian_profile(ref, grid);
    m.n_sim = a.trips;
    m.n_ref = b.trips;
    if (a.empty || b.empty) {
      m.note = "no trips";
    } else {
      m.value = jsd(a.probs, b.probs);
    }
    r.metrics.push_back(std::move(m));
  }

  if (r.user_level) {
    r.metrics.push_back(sample_metric("visitation_frequency", ps.zetas, pr.zetas, Binning::Linear));
    r.metrics.push_back(sample_metric("exploration", alphas(ps), alphas(pr), Binning::Linear));
    r.metrics.push_back(return_mae(sim, ref));
  }
  return r;
}

std::string report_csv(const EvaluationReport& r) {
  std::ostringstream os;
  os.precision(10);
  os << "metric,kind,value,binning,n_sim,n_ref,note\n";
  for (const MetricResult& m : r.metrics) {
    os << m.name << ',' << m.kind << ',';
    if (m.value) os << *m.value;
    os << ',' << m.binning << ',' << m.n_sim << ',' << m.n_ref << ',' << m.note << '\n';
  }
  return os.str();
}

std::vector<PlotFile> plot_data(std::span<const Trajectory> sim, std::span<const Trajectory> ref, const GridSpec& grid) {
  const PopulationSample ps = sample_population(sim, grid);
  const PopulationSample pr = sample_population(ref, grid);
  std::vector<PlotFile> out;
  const bool user_level = all_named(sim) && all_named(ref);
  if (user_level) out.push_back({"ccdf_radius.csv", ccdf_csv(ps.radii, pr.radii)});
  out.push_back({"ccdf_distance.csv", ccdf_csv(ps.distances, pr.distances)});
  out.push_back({"ccdf_duration.csv", ccdf_csv(ps.durations, pr.durations)});
  if (user_level) {
    out.push_back({"hist_zeta.csv", hist_csv(ps.zetas, pr.zetas)});
    out.push_back({"hist_alpha.csv", hist_csv(alphas(ps), alphas(pr))});
  }
  const CircadianProfile a = circadian_profile(sim, grid);
  const CircadianProfile b = circadian_profile(ref, grid);
  std::ostringstream os;
  os.precision(10);
  os << "hour,sim,ref\n";
  for (int h = 0; h < 24; ++h) os << h << ',' << a.probs[h] << ',' << b.probs[h] << '\n';
  out.push_back({"circadian.csv", os.str()});
  return out;
}

}  // namespace mobsim
