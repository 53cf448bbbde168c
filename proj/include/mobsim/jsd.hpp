#pragma once

#include <map>
#include <span>
#include <vector>

namespace mobsim {

/// Jensen-Shannon divergence in bits between two aligned histograms.
/// Inputs need not be normalized; the result lies in [0, 1].
double jsd(std::span<const double> p, std::span<const double> q);

enum class Binning { Log, Linear };

struct HistogramPair {
  std::vector<double> a;
  std::vector<double> b;
  std::vector<double> edges;  // bins.size() + 1 edges; a leading zero bin is not included here
  double zeros_a = 0.0;
  double zeros_b = 0.0;
};

/// Shared binning over the union of both samples. Log binning keeps values
/// <= 0 in a separate leading bin.
HistogramPair shared_histogram(std::span<const double> a, std::span<const double> b, Binning binning,
                               int bins = 50);

double jsd_samples(std::span<const double> a, std::span<const double> b, Binning binning, int bins = 50);

/// JSD over the union of keys of two discrete distributions.
template <typename Key>
double jsd_keyed(const std::map<Key, double>& p, const std::map<Key, double>& q) {
  std::map<Key, std::pair<double, double>> joint;
  for (const auto& [k, v] : p) joint[k].first += v;
  for (const auto& [k, v] : q) joint[k].second += v;
  std::vector<double> a;
  std::vector<double> b;
  a.reserve(joint.size());
  b.reserve(joint.size());
  for (const auto& [k, v] : joint) {
    a.push_back(v.first);
    b.push_back(v.second);
  }
  return jsd(a, b);
}

}  // namespace mobsim
