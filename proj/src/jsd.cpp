#include "mobsim/jsd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace mobsim {

double jsd(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("jsd: histogram sizes differ");
  const double sp = std::accumulate(p.begin(), p.end(), 0.0);
  const double sq = std::accumulate(q.begin(), q.end(), 0.0);
  if (!(sp > 0.0) || !(sq > 0.0)) throw std::invalid_argument("jsd: empty histogram");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pi = p[i] / sp;
    const double qi = q[i] / sq;
    const double m = 0.5 * (pi + qi);
    if (pi > 0.0) d += 0.5 * pi * std::log2(pi / m);
    if (qi > 0.0) d += 0.5 * qi * std::log2(qi / m);
  }
  return std::clamp(d, 0.0, 1.0);
}

HistogramPair shared_histogram(std::span<const double> a, std::span<const double> b, Binning binning,
                               int bins) {
  if (a.empty() || b.empty()) throw std::invalid_argument("histogram: empty sample");
  if (bins < 1) throw std::invalid_argument("histogram: need at least one bin");
  HistogramPair h;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  const bool log_bins = binning == Binning::Log;
  for (auto s : {a, b}) {
    for (double v : s) {
      if (log_bins && v <= 0.0) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  h.a.assign(bins, 0.0);
  h.b.assign(bins, 0.0);
  const bool any = lo <= hi;
  if (any) {
    const double tlo = log_bins ? std::log(lo) : lo;
    const double thi = log_bins ? std::log(hi) : hi;
    const double width = thi > tlo ? (thi - tlo) / bins : 1.0;
    h.edges.resize(bins + 1);
    for (int i = 0; i <= bins; ++i) {
      const double e = tlo + width * i;
      h.edges[i] = log_bins ? std::exp(e) : e;
    }
    auto fill = [&](std::span<const double> s, std::vector<double>& out, double& zeros) {
      for (double v : s) {
        if (log_bins && v <= 0.0) {
          zeros += 1.0;
          continue;
        }
        const double tv = log_bins ? std::log(v) : v;
        const auto idx = static_cast<int>(std::floor((tv - tlo) / width));
        out[std::clamp(idx, 0, bins - 1)] += 1.0;
      }
    };
    fill(a, h.a, h.zeros_a);
    fill(b, h.b, h.zeros_b);
  } else {
    h.zeros_a = static_cast<double>(a.size());
    h.zeros_b = static_cast<double>(b.size());
  }
  return h;
}

double jsd_samples(std::span<const double> a, std::span<const double> b, Binning binning, int bins) {
  const HistogramPair h = shared_histogram(a, b, binning, bins);
  std::vector<double> p{h.zeros_a};
  std::vector<double> q{h.zeros_b};
  p.insert(p.end(), h.a.begin(), h.a.end());
  q.insert(q.end(), h.b.begin(), h.b.end());
  return jsd(p, q);
}

}  // namespace mobsim
