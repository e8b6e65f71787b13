#include "doctest.h"

#include <cmath>

#include "mdm/baselines.hpp"
#include "mdm/errors.hpp"
#include "mdm/metrics.hpp"
#include "mdm/random.hpp"
#include "support.hpp"

using namespace mdm;
using doctest::Approx;

namespace {

Matrix column(std::initializer_list<double> v) {
  Matrix m(v.size(), 1);
  m.data.assign(v);
  return m;
}

}  // namespace

TEST_CASE("violation count") {
  const auto ne = MirrorMap::negative_entropy(4);
  Matrix pts(500, 4);
  for (std::size_t r = 0; r < pts.rows; ++r) {
    const Vec y = CounterRng(1, r, 0).normals(4);
    Vec ys = y;
    for (double& v : ys) v *= 30.0;
    const Vec x = ne.grad_conjugate(ys);
    std::copy(x.begin(), x.end(), pts.row(r).begin());
  }
  CHECK(violation_count(ne.domain(), pts) == 0);
  SampleBatch b;
  b.samples = column({0.5, 1.2});
  b.domain = DomainSpec::box(1, 0, 1);
  CHECK(violation_count(b) == 1);
  b.samples = column({-1e300, 4.0, 1e12});
  b.domain = DomainSpec::euclidean(1);
  CHECK(violation_count(b) == 0);
}

TEST_CASE("moments") {
  const Moments m = empirical_moments(column({0, 1}));
  CHECK(m.mean[0] == 0.5);
  CHECK(m.variance[0] == 0.5);
  CHECK(empirical_moments(column({2.5, 2.5, 2.5})).variance[0] == 0.0);
  CHECK_THROWS_AS(empirical_moments(column({1})), InsufficientData);
}

TEST_CASE("uniform simplex moments from cir") {
  CirParams p;
  p.alpha = {1, 1, 1};
  const SampleBatch b = dirichlet_from_cir(p, 100000, 77);
  const Moments m = empirical_moments(b);
  for (int i = 0; i < 3; ++i) {
    CHECK(z_score(m.mean[i], 1.0 / 3, std::sqrt(1.0 / 18), b.size()) < 3.0);
    CHECK(z_score(m.variance[i], 1.0 / 18, std::sqrt(1.0 / 135 - 1.0 / 324), b.size()) < 3.0);
  }
}

TEST_CASE("histogram kl") {
  const Vec p{0.1, 0.4, 0.4, 0.9, 0.3};
  CHECK(std::abs(histogram_kl(p, p)) <= 1e-12);
  const Vec zeros(10, 0.0), ones(10, 1.0);
  const double e = 1e-9;
  const double hi = (1 + e) / (1 + 2 * e), lo = e / (1 + 2 * e);
  const double expect = (hi - lo) * std::log(hi / lo);
  CHECK(histogram_kl(zeros, ones, 2, e) == Approx(expect).epsilon(1e-12));
  CHECK(expect > 20.0);
  CHECK_THROWS_AS(histogram_kl(p, p, 0, e), ConfigError);
  CHECK_THROWS_AS(histogram_kl(Vec{}, p), InsufficientData);
  const Vec h = smoothed_histogram(p, 4, 0.0, 1.0, 0.0);
  const Vec expect_h{0.2, 0.6, 0.0, 0.2};
  for (int i = 0; i < 4; ++i) CHECK(h[i] == Approx(expect_h[i]).epsilon(1e-15));
}

TEST_CASE("pinsker on random histograms") {
  double worst = 1.0;
  for (std::uint64_t i = 0; i < 500; ++i) {
    CounterRng rng(12, i, 0, StreamTag::Oracle);
    const std::size_t d = 2 + rng.below(20);
    Vec a(d), b(d);
    double sa = 0, sb = 0;
    for (std::size_t j = 0; j < d; ++j) {
      sa += (a[j] = rng.gamma(0.5));
      sb += (b[j] = rng.gamma(0.5));
    }
    double l1 = 0;
    for (std::size_t j = 0; j < d; ++j) {
      a[j] /= sa;
      b[j] /= sb;
      l1 += std::abs(a[j] - b[j]);
    }
    worst = std::min(worst, kl_divergence(a, b) - 0.5 * l1 * l1);
  }
  CHECK(worst >= -1e-12);
  CHECK(kl_divergence(Vec{0.5, 0.5}, Vec{1.0, 0.0}) == INFINITY);
  CHECK(kl_divergence(Vec{1.0, 0.0}, Vec{0.5, 0.5}) == Approx(std::log(2.0)));
}

TEST_CASE("wasserstein") {
  const Vec a{0.3, -1.0, 2.0};
  CHECK(wasserstein1_1d(a, a) == 0.0);
  CHECK(wasserstein1_1d(Vec(7, 0.0), Vec(7, 1.0)) == 1.0);
  CHECK(wasserstein1_1d(Vec{0, 1}, Vec{0.5, 0.5}) == 0.5);
  const Vec b{5.0, 0.0, -2.5};
  CHECK(wasserstein1_1d(a, b) == wasserstein1_1d(b, a));
  // The larger set is reduced by order statistics.
  CHECK(wasserstein1_1d(Vec{0, 1}, Vec{0, 0, 1, 1}) == 0.0);
  CHECK_THROWS_AS(wasserstein1_1d(Vec{}, a), InsufficientData);
}

TEST_CASE("kolmogorov-smirnov") {
  const Vec a{0.3, 0.1, 0.8};
  CHECK(ks_statistic(a, a) == 0.0);
  const auto uniform = [](double t) { return std::clamp(t, 0.0, 1.0); };
  CHECK(ks_statistic(Vec(50, 0.0), uniform) == 1.0);
  CHECK(ks_statistic(Vec{0.0}, Vec{1.0}) == 1.0);
  Vec u(100000);
  CounterRng rng(4, 0, 0);
  for (double& v : u) v = rng.uniform();
  const double d = ks_statistic(u, uniform);
  CHECK(d >= 0.0);
  CHECK(d < 0.006);
  CHECK_THROWS_AS(ks_statistic(Vec{}, uniform), InsufficientData);
}

TEST_CASE("metric report") {
  MetricReport r;
  r.add("a", 0.5, 1.0, true);
  r.add("b", 3.0, std::nullopt, true);
  CHECK(r.all_pass());
  CHECK_THROWS_AS(r.add("a", 0.0, std::nullopt, true), ConfigError);
  r.add("c", 0.1, 0.01, false);
  CHECK_FALSE(r.all_pass());
  CHECK(r.to_csv() == "metric,value,tolerance,pass\na,0.5,1,true\nb,3,,true\nc,"
                      "0.10000000000000001,0.01,false\n");
  CHECK(std::stod(format_double(0.1)) == 0.1);
}
