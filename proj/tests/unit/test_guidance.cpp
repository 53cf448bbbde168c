#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mobsim/guidance.hpp"
#include "mobsim/jsd.hpp"
#include "mobsim/rng.hpp"
#include "support.hpp"

using namespace mobsim;

namespace {

EmpiricalDistribution dist(std::vector<double> xs) { return {std::move(xs), SampleKind::Dimensionless}; }

std::vector<double> random_positive(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = std::exp(6.0 * rng.uniform() - 1.0);
  return v;
}

double brute_w1(std::vector<double> a, std::vector<double> b, double eps) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(std::log(a[i] + eps) - std::log(b[i] + eps));
  return s / static_cast<double>(a.size());
}

// CCDF step integral by scanning a fine grid of midpoints between merged support points
double brute_l1(const std::vector<double>& a, const std::vector<double>& b, double eps) {
  std::vector<double> pts;
  for (double x : a) pts.push_back(std::log(x + eps));
  for (double x : b) pts.push_back(std::log(x + eps));
  std::sort(pts.begin(), pts.end());
  auto ccdf_at = [&](const std::vector<double>& s, double z) {
    double c = 0;
    for (double x : s) c += std::log(x + eps) >= z ? 1.0 : 0.0;
    return c / static_cast<double>(s.size());
  };
  double total = 0.0;
  for (std::size_t j = 0; j + 1 < pts.size(); ++j) {
    const double w = pts[j + 1] - pts[j];
    if (w <= 0) continue;
    const double mid = 0.5 * (pts[j] + pts[j + 1]);
    total += std::abs(ccdf_at(a, mid) - ccdf_at(b, mid)) * w;
  }
  return total;
}

}  // namespace

TEST_CASE("w1_log examples") {
  CHECK(w1_log(dist({1, 2, 3}), dist({1, 2, 3}), 1e-9) == 0.0);
  const double expect = (std::log(2.0) + std::log(1.5)) / 2.0;
  CHECK(w1_log(dist({1, 2}), dist({2, 3}), 1e-12) == doctest::Approx(expect).epsilon(1e-9));
  CHECK(expect == doctest::Approx(0.5493).epsilon(1e-4));
  CHECK(w1_log(dist({10, 20}), dist({20, 30}), 1e-12) == doctest::Approx(expect).epsilon(1e-9));
  CHECK_THROWS_AS(w1_log(dist({}), dist({1}), 1e-9), std::invalid_argument);
}

TEST_CASE("w1_log matches the sorted-sample mean on equal sizes") {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(1000);
    const auto a = random_positive(rng, n);
    const auto b = random_positive(rng, n);
    CHECK(w1_log(dist(a), dist(b), 1e-9) == doctest::Approx(brute_w1(a, b, 1e-9)).epsilon(1e-9));
  }
}

TEST_CASE("w1_log on unequal sizes approximates the quantile integral") {
  // a is b repeated: identical distributions
  std::vector<double> b{1, 2, 5, 9};
  std::vector<double> a;
  for (int r = 0; r < 3; ++r) a.insert(a.end(), b.begin(), b.end());
  CHECK(w1_log(dist(a), dist(b), 1e-9) == doctest::Approx(0.0).epsilon(1e-12));
  // pure shift in log space by ln 2
  std::vector<double> c;
  for (double x : a) c.push_back(2 * x);
  CHECK(w1_log(dist(c), dist(b), 1e-12) == doctest::Approx(std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("l1_ccdf examples and symmetry") {
  CHECK(l1_ccdf(dist({1, 2, 3}), dist({1, 2, 3}), 1e-9) == 0.0);
  CHECK(l1_ccdf(dist({1}), dist({std::exp(1.0)}), 1e-12) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(l1_ccdf(dist({1, 4}), dist({2}), 1e-9) == doctest::Approx(l1_ccdf(dist({2}), dist({1, 4}), 1e-9)));
  // linear coordinates: {1} vs {3} differ by one on [1, 3)
  CHECK(l1_ccdf(dist({1}), dist({3}), 1e-12, false) == doctest::Approx(2.0));
  CHECK_THROWS_AS(l1_ccdf(dist({1}), dist({}), 1e-9), std::invalid_argument);
}

TEST_CASE("l1_ccdf equals the step integral on random pairs") {
  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = random_positive(rng, 1 + rng.below(60));
    const auto b = random_positive(rng, 1 + rng.below(60));
    CHECK(l1_ccdf(dist(a), dist(b), 1e-9) == doctest::Approx(brute_l1(a, b, 1e-9)).epsilon(1e-9));
  }
}

TEST_CASE("g_vector composition") {
  GuidanceConfig cfg;
  const auto a = dist({1, 3, 7, 20});
  const auto b = dist({2, 2, 9, 40});
  CHECK(g_vector(a, a, cfg) == 0.0);
  cfg.mu = 0.0;
  CHECK(g_vector(a, b, cfg) == w1_log(a, b, cfg.epsilon_log));
  cfg.mu = 0.5;
  CHECK(g_vector(a, b, cfg) ==
        doctest::Approx(brute_w1(a.samples, b.samples, 1e-9) + 0.5 * brute_l1(a.samples, b.samples, 1e-9)));
}

TEST_CASE("g_scalar") {
  CHECK(g_scalar(1.75, 1.75) == 0.0);
  CHECK(g_scalar(1.22, 1.75) == doctest::Approx(0.30286).epsilon(1e-4));
  CHECK(g_scalar(4.0, 2.0) == 1.0);
  CHECK_THROWS_AS(g_scalar(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("aggregate_R examples") {
  const std::vector<double> zeros{0, 0, 0};
  CHECK(aggregate_R(zeros, 1e-6) == doctest::Approx(1e-6));
  const std::vector<double> gs{0.2, 0.8};
  CHECK(aggregate_R(gs, 0.0) == doctest::Approx(0.4));
  const std::vector<double> rev{0.8, 0.2};
  CHECK(aggregate_R(rev, 0.0) == doctest::Approx(0.4));
  const std::vector<double> neg{-0.1};
  CHECK_THROWS(aggregate_R(neg, 1e-6));
}

TEST_CASE("aggregate_R is permutation invariant and monotone") {
  Rng rng(13);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> g(1 + rng.below(6));
    for (double& x : g) x = 3.0 * rng.uniform();
    const double r = aggregate_R(g, 1e-6);
    auto perm = g;
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    CHECK(aggregate_R(perm, 1e-6) == doctest::Approx(r).epsilon(1e-12));
    auto up = g;
    up[rng.below(up.size())] += rng.uniform();
    CHECK(aggregate_R(up, 1e-6) >= r);
  }
}

TEST_CASE("step_reward sign and telescoping") {
  CHECK(step_reward(0.5, 0.3) == doctest::Approx(0.2));
  CHECK(step_reward(0.4, 0.4) == 0.0);
  CHECK(step_reward(0.3, 0.5) < 0.0);
  Rng rng(14);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> rs(11);
    for (double& r : rs) r = rng.uniform();
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < rs.size(); ++i) sum += step_reward(rs[i], rs[i + 1]);
    CHECK(sum == doctest::Approx(rs.front() - rs.back()).epsilon(1e-12));
  }
}

TEST_CASE("default measures and validation") {
  CHECK(default_measures(SharedDataType::SD1).size() == 3);
  CHECK(default_measures(SharedDataType::SD2) == std::vector{MeasureId::Distance, MeasureId::Duration});
  CHECK(default_measures(SharedDataType::SD3).size() == 5);
  CHECK(shared_data_type_from_string("SD2") == SharedDataType::SD2);
  CHECK_THROWS(shared_data_type_from_string("sd4"));
  for (auto m : {MeasureId::Radius, MeasureId::ZetaTotal, MeasureId::KappaDuration}) {
    CHECK(measure_id_from_string(to_string(m)) == m);
  }

  GuidanceConfig cfg;
  CHECK_THROWS(validate(cfg));
  cfg.objectives.push_back({MeasureId::Radius, DistanceKind::Vector, dist({1.0}), 0.0});
  CHECK_NOTHROW(validate(cfg));
  cfg.mu = -1;
  CHECK_THROWS(validate(cfg));
  cfg.mu = 0.5;
  cfg.shared_data_type = SharedDataType::SD3;
  CHECK_THROWS(validate(cfg));
  cfg.objectives = {{MeasureId::BetaDistance, DistanceKind::Scalar, {}, 0.0}};
  CHECK_THROWS(validate(cfg));
  cfg.objectives[0].target_scalar = 1.75;
  CHECK_NOTHROW(validate(cfg));
}

TEST_CASE("make_target builds objectives per shared-data type") {
  Rng rng(15);
  std::vector<Trajectory> ts;
  for (int u = 0; u < 30; ++u) ts.push_back(testing::random_trajectory(rng, 40, 30, "u" + std::to_string(u)));
  const GridSpec grid;

  const GuidanceConfig sd1 = make_target(SharedDataType::SD1, ts, grid);
  REQUIRE(sd1.objectives.size() == 3);
  CHECK(sd1.objectives[0].target.samples.size() == 30);
  CHECK_NOTHROW(validate(sd1));

  const GuidanceConfig sd2 = make_target(SharedDataType::SD2, ts, grid);
  REQUIRE(sd2.objectives.size() == 2);
  CHECK(sd2.objectives[0].measure == MeasureId::Distance);
  CHECK(sd2.objectives[0].target.samples.size() == 30 * 39);

  // the reference scores zero against itself
  const PopulationSample pop = sample_population(ts, grid);
  for (const auto& cfg : {sd1, sd2}) {
    for (double g : objective_distances(cfg, pop)) CHECK(g == 0.0);
  }

  auto anon = ts;
  anon[3].user_id.reset();
  CHECK_THROWS_WITH_AS(make_target(SharedDataType::SD1, anon, grid), doctest::Contains("not available"),
                       std::invalid_argument);
  CHECK_NOTHROW(make_target(SharedDataType::SD2, anon, grid));
}

TEST_CASE("jsd basics") {
  const std::vector<double> p{1, 2, 3};
  CHECK(jsd(p, p) == 0.0);
  const std::vector<double> a{1, 0};
  const std::vector<double> b{0, 1};
  CHECK(jsd(a, b) == doctest::Approx(1.0));
  const std::vector<double> c{1, 1};
  // mixture of a one-hot and uniform: 0.5*KL(a||m)+0.5*KL(c||m) with m = (3/4, 1/4)
  const double expect = 0.5 * std::log2(1 / 0.75) + 0.5 * (0.5 * std::log2(0.5 / 0.75) + 0.5 * std::log2(0.5 / 0.25));
  CHECK(jsd(a, c) == doctest::Approx(expect));
  CHECK(jsd(a, c) == doctest::Approx(jsd(c, a)));
}

TEST_CASE("jsd over shared histograms") {
  Rng rng(16);
  std::vector<double> x(500);
  for (double& v : x) v = std::exp(5 * rng.uniform());
  CHECK(jsd_samples(x, x, Binning::Log) == 0.0);
  std::vector<double> y;
  for (double v : x) y.push_back(v * 1e4);
  CHECK(jsd_samples(x, y, Binning::Log) == doctest::Approx(1.0));

  const std::vector<double> with_zero{0, 0, 1, 2};
  const auto h = shared_histogram(with_zero, x, Binning::Log, 50);
  CHECK(h.zeros_a == 2);
  CHECK(h.zeros_b == 0);
  CHECK(std::accumulate(h.a.begin(), h.a.end(), 0.0) == 2);
  CHECK(h.edges.size() == 51);

  const std::vector<double> lin_a{0.1, 0.2, 0.3};
  const std::vector<double> lin_b{1.1, 1.2, 1.3};
  CHECK(jsd_samples(lin_a, lin_b, Binning::Linear) == doctest::Approx(1.0));

  std::map<int, double> p{{1, 1.0}};
  std::map<int, double> q{{2, 3.0}};
  CHECK(jsd_keyed(p, q) == doctest::Approx(1.0));
  CHECK(jsd_keyed(p, p) == 0.0);
}
