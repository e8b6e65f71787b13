#include "doctest.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "mdm/errors.hpp"
#include "mdm/random.hpp"
#include "mdm/score.hpp"
#include "mdm/sde.hpp"
#include "mdm/train.hpp"
#include "mdm/verify.hpp"

using namespace mdm;
using doctest::Approx;

namespace {

double relative_gap(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

// Composite Simpson rule for exp(pushforward_log_density) on [lo, hi].
double pushforward_mass(const MirrorMap& mm, const TargetDistribution& t, double lo, double hi,
                        int n) {
  const double h = (hi - lo) / n;
  double s = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    s += w * std::exp(pushforward_log_density(mm, t, Vec{lo + i * h}));
  }
  return s * h / 3.0;
}

MlpArch arch(std::size_t d, std::vector<std::size_t> hidden, Activation act, int steps) {
  MlpArch a;
  a.input_dim = d;
  a.hidden_widths = std::move(hidden);
  a.time_embedding_dim = 4;
  a.activation = act;
  a.steps = steps;
  return a;
}

std::string tmp_path(const std::string& name) {
  std::filesystem::create_directories(MDM_TEST_TMP);
  return std::string(MDM_TEST_TMP) + "/" + name;
}

}  // namespace

TEST_CASE("pushforward density") {
  const auto id = MirrorMap::identity(2);
  const auto gm = TargetDistribution::gaussian_mixture({0.4, 0.6}, {{0, 1}, {2, -1}}, {1, 0.5});
  const Vec y{0.3, -0.2};
  CHECK(pushforward_log_density(id, gm, y) == Approx(gm.log_density(y)).epsilon(1e-14));
  const auto lb = MirrorMap::log_barrier(1, 0, 1);
  const auto uniform = TargetDistribution::product_beta({1}, {1});
  CHECK(pushforward_log_density(lb, uniform, Vec{0.0}) == Approx(-std::log(8.0)).epsilon(1e-14));
  CHECK(analytic_dual_score(lb, uniform, Vec{0.0})[0] == Approx(0.0));
  const auto ne = MirrorMap::negative_entropy(3);
  const auto dir = TargetDistribution::dirichlet({2, 2, 2});
  CHECK_THROWS_AS(pushforward_log_density(ne, dir, Vec{0, 0, 0}), UnsupportedError);
  CHECK_THROWS_AS(pushforward_log_density(lb, gm, Vec{0.0}), ConfigError);
}

// Beta(2,2) pushed through the log barrier has tails ~ 6/|y|^3, which leave
// about 2 * 3/30^2 = 0.0067 of the mass outside [-30, 30].
TEST_CASE("pushforward mass over [-30, 30] is one" * doctest::may_fail()) {
  const auto lb = MirrorMap::log_barrier(1, 0, 1);
  const auto t = TargetDistribution::product_beta({2}, {2});
  CHECK(std::abs(pushforward_mass(lb, t, -30, 30, 120000) - 1.0) <= 1e-4);
}

TEST_CASE("pushforward mass over [-30, 30] matches the target cdf") {
  const auto lb = MirrorMap::log_barrier(1, 0, 1);
  for (auto [a, b] : {std::pair{2.0, 2.0}, std::pair{3.0, 1.5}}) {
    const auto t = TargetDistribution::product_beta({a}, {b});
    const double x_hi = lb.grad_conjugate(Vec{30.0})[0];
    const double x_lo = lb.grad_conjugate(Vec{-30.0})[0];
    const double exact = t.marginal_cdf(0, x_hi) - t.marginal_cdf(0, x_lo);
    CHECK(pushforward_mass(lb, t, -30, 30, 120000) == Approx(exact).epsilon(1e-8));
  }
  // Far enough out the tails vanish.
  const auto t = TargetDistribution::product_beta({2}, {2});
  const double x_hi = lb.grad_conjugate(Vec{3000.0})[0];
  const double x_lo = lb.grad_conjugate(Vec{-3000.0})[0];
  CHECK(std::abs(t.marginal_cdf(0, x_hi) - t.marginal_cdf(0, x_lo) - 1.0) <= 1e-6);
}

TEST_CASE("analytic dual score matches finite differences") {
  SUBCASE("identity, standard normal") {
    const auto id = MirrorMap::identity(3);
    const auto n = TargetDistribution::gaussian_mixture({1.0}, {{0, 0, 0}}, {1.0});
    const Vec y{0.5, -1.25, 3.0};
    const Vec s = analytic_dual_score(id, n, y);
    for (int i = 0; i < 3; ++i) CHECK(s[i] == Approx(-y[i]).epsilon(1e-15));
  }
  struct Case {
    MirrorMap mm;
    TargetDistribution t;
  };
  const std::vector<Case> cases{
      {MirrorMap::log_barrier(2, -1, 2),
       TargetDistribution::product_beta({2, 0.7}, {3.5, 1.2}, -1, 2)},
      {MirrorMap::log_barrier(1, 0, 1), TargetDistribution::product_beta({2}, {2})},
      {MirrorMap::identity(2),
       TargetDistribution::gaussian_mixture({0.3, 0.7}, {{-1, 0}, {2, 1}}, {0.5, 1.5})}};
  for (const auto& c : cases) {
    for (std::uint64_t p = 0; p < 100; ++p) {
      const Vec x = random_interior_point(c.mm, 77, p);
      const Vec y = c.mm.grad(x);
      const Vec s = analytic_dual_score(c.mm, c.t, y);
      for (std::size_t i = 0; i < y.size(); ++i) {
        // Near the box bounds |y| reaches 1e8; an absolute step vanishes there.
        const double h = 1e-4 * std::max(1.0, std::abs(y[i]));
        Vec up = y, down = y;
        up[i] += h;
        down[i] -= h;
        const double fd = (pushforward_log_density(c.mm, c.t, up) -
                           pushforward_log_density(c.mm, c.t, down)) / (up[i] - down[i]);
        CAPTURE(y[i]);
        CHECK(relative_gap(s[i], fd) <= 1e-4);
      }
    }
  }
}

TEST_CASE("schedule-aware score") {
  const auto sched = NoiseSchedule::linear(0.1, 20, 100);
  SUBCASE("gaussian under the identity map") {
    const double m = 1.5, sd = 0.7;
    const auto t = TargetDistribution::gaussian_mixture({1.0}, {{m}}, {sd});
    const AnalyticPushforwardScore score(MirrorMap::identity(1), t, sched);
    for (int k : {0, 1, 30, 100})
      for (double y : {-2.0, 0.1, 3.0}) {
        const double ab = sched.alpha_bar(k);
        const double expect = -(y - std::sqrt(ab) * m) / (ab * sd * sd + 1 - ab);
        CHECK(score.score(Vec{y}, k)[0] == Approx(expect).epsilon(1e-12));
      }
  }
  SUBCASE("product beta under the log barrier") {
    const auto mm = MirrorMap::log_barrier(2, 0, 1);
    const auto t = TargetDistribution::product_beta({2, 3}, {2, 1.5});
    const AnalyticPushforwardScore score(mm, t, sched);
    CHECK(score.score(Vec{0.4, -2.0}, 0) == analytic_dual_score(mm, t, Vec{0.4, -2.0}));
    for (int k : {1, 5, 40, 100})
      for (double y : {-7.3, -0.4, 0.0, 1.1, 12.0}) {
        CAPTURE(k);
        CAPTURE(y);
        for (std::size_t i = 0; i < 2; ++i) {
          const double direct = score.diffused_score_direct(i, y, k);
          const double tab = score.score(Vec{y, y}, k)[i];
          // Cubic interpolation on a 0.02 grid in asinh(y).
          CHECK(std::abs(tab - direct) <= 1e-3 * std::max(1.0, std::abs(direct)));
        }
        // Quadrature score against differences of the quadrature log-density.
        const BarrierMarginal bm(0, 1, 3, 1.5);
        const double ab = sched.alpha_bar(k);
        const double fd = (bm.diffused(y + 1e-4, ab).log_density -
                           bm.diffused(y - 1e-4, ab).log_density) / 2e-4;
        CHECK(relative_gap(bm.diffused(y, ab).score, fd) <= 1e-5);
      }
  }
  SUBCASE("clean limit") {
    const BarrierMarginal bm(0, 1, 2, 2);
    for (double y : {-3.0, 0.5, 8.0}) {
      CHECK(bm.diffused(y, 1.0).score == bm.score0(y));
      CHECK(bm.diffused(y, 0.9999999).score == Approx(bm.score0(y)).epsilon(1e-3));
    }
  }
  CHECK_THROWS_AS(AnalyticPushforwardScore(MirrorMap::negative_entropy(3),
                                           TargetDistribution::dirichlet({2, 2, 2}), sched),
                  UnsupportedError);
}

TEST_CASE("noise_to_score") {
  const auto sched = NoiseSchedule::from_betas({0.25, 0.1});
  CHECK(sched.alpha_bar(1) == 0.75);
  CHECK(noise_to_score(Vec{0.0, 0.0}, 2, sched) == Vec{0.0, 0.0});
  CHECK(noise_to_score(Vec{1.0}, 1, sched) == Vec{-2.0});
  CHECK_THROWS_AS(noise_to_score(Vec{1.0}, 0, sched), IndexError);
  CHECK_THROWS_AS(noise_to_score(Vec{1.0}, 3, sched), IndexError);
}

TEST_CASE("optimal noise predictor converts to the exact marginal score") {
  // y0 ~ N(m, s^2): E[z | y_k] = sigma_k (y - sqrt(ab) m) / (ab s^2 + sigma_k^2).
  const auto sched = NoiseSchedule::linear();
  const double m = -0.8, s = 1.7;
  const AnalyticPushforwardScore exact(
      MirrorMap::identity(1), TargetDistribution::gaussian_mixture({1.0}, {{m}}, {s}), sched);
  for (int k : {1, 10, 250, 999})
    for (double y : {-3.0, 0.0, 0.4, 5.0}) {
      const double ab = sched.alpha_bar(k), sig = sched.sigma(k);
      const double eps = sig * (y - std::sqrt(ab) * m) / (ab * s * s + sig * sig);
      CHECK(std::abs(noise_to_score(Vec{eps}, k, sched)[0] - exact.score(Vec{y}, k)[0]) <=
            1e-10);
    }
}

TEST_CASE("mlp forward") {
  const auto a = arch(3, {5, 4}, Activation::Tanh, 20);
  const Mlp zero(a);
  CHECK(zero.forward(Vec{1, -2, 3}, 5) == Vec{0, 0, 0});
  CHECK(a.parameter_count() == (7 * 5 + 5) + (5 * 4 + 4) + (4 * 3 + 3));
  CHECK_THROWS_AS(zero.forward(Vec{1, 2}, 5), ShapeError);
  CHECK_THROWS_AS(zero.forward(Vec{1, 2, 3}, 21), IndexError);
  const MlpScore ms(Mlp::initialized(a, 3), NoiseSchedule::linear(0.1, 5, 20));
  const Vec y{0.2, -0.7, 1.9};
  CHECK(ms.score(y, 4) ==
        noise_to_score(ms.model().forward(y, 4), 4, NoiseSchedule::linear(0.1, 5, 20)));
}

TEST_CASE("mlp fixture regression") {
  const Mlp m = load_checkpoint(MDM_FIXTURES "/mlp_golden.mdm");
  CHECK(m.arch() == arch(3, {5, 4}, Activation::SiLU, 20));
  const Vec out = m.forward(Vec{0.25, -1.5, 2.0}, 7);
  const double golden[3] = {-0x1.1c3f2ae27c0bcp-2, -0x1.51a6395acef4dp-2,
                            0x1.879622e799525p-2};
  REQUIRE(out.size() == 3);
  for (int i = 0; i < 3; ++i) CHECK(std::memcmp(&out[i], &golden[i], sizeof(double)) == 0);
}

TEST_CASE("mlp hidden-unit permutation symmetry") {
  const auto a = arch(2, {6, 3}, Activation::SiLU, 50);
  Mlp m = Mlp::initialized(a, 8);
  CounterRng rng(8, 0, 0, StreamTag::Oracle);
  for (double& p : m.params()) p += 0.1 * rng.normal();
  const Vec y{0.3, -1.1};
  const Vec before = m.forward(y, 17);
  // Swap units 1 and 4 of the first hidden layer.
  const std::size_t in = 6, h1 = 6, h2 = 3;
  auto p = m.params();
  const std::size_t w1 = 0, b1 = h1 * in, w2 = b1 + h1;
  for (std::size_t j = 0; j < in; ++j) std::swap(p[w1 + 1 * in + j], p[w1 + 4 * in + j]);
  std::swap(p[b1 + 1], p[b1 + 4]);
  for (std::size_t r = 0; r < h2; ++r) std::swap(p[w2 + r * h1 + 1], p[w2 + r * h1 + 4]);
  const Vec after = m.forward(y, 17);
  for (int i = 0; i < 2; ++i) CHECK(after[i] == Approx(before[i]).epsilon(1e-14));
}

TEST_CASE("mlp gradients") {
  const auto a = arch(2, {5, 4}, Activation::Tanh, 30);
  Mlp m = Mlp::initialized(a, 4);
  CounterRng rng(4, 0, 0, StreamTag::Oracle);
  for (double& p : m.params()) p += 0.1 * rng.normal();
  const std::size_t B = 3;
  Matrix y(B, 2), noise(B, 2);
  std::vector<int> ks{1, 12, 30};
  for (double& v : y.data) v = rng.normal();
  for (double& v : noise.data) v = rng.normal();

  SUBCASE("perfect prediction has zero gradient") {
    Matrix target(B, 2);
    for (std::size_t b = 0; b < B; ++b) {
      const Vec out = m.forward(y.row(b), ks[b]);
      std::copy(out.begin(), out.end(), target.row(b).begin());
    }
    const MlpGradient g = m.loss_and_grad(y, ks, target);
    CHECK(g.loss == 0.0);
    for (double v : g.params) CHECK(v == 0.0);
  }
  SUBCASE("central differences with step 1e-6") {
    const MlpGradient g = m.loss_and_grad(y, ks, noise);
    auto p = m.params();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double saved = p[i];
      p[i] = saved + 1e-6;
      const double up = m.loss(y, ks, noise);
      p[i] = saved - 1e-6;
      const double down = m.loss(y, ks, noise);
      p[i] = saved;
      const double fd = (up - down) / 2e-6;
      const double denom = std::max({std::abs(fd), std::abs(g.params[i]), 1e-6});
      CAPTURE(i);
      CHECK(std::abs(fd - g.params[i]) / denom <= 1e-4);
    }
  }
  SUBCASE("batch gradient is the mean of per-example gradients") {
    const MlpGradient g = m.loss_and_grad(y, ks, noise);
    std::vector<double> mean(g.params.size(), 0.0);
    for (std::size_t b = 0; b < B; ++b) {
      Matrix yb(1, 2), nb(1, 2);
      std::copy(y.row(b).begin(), y.row(b).end(), yb.row(0).begin());
      std::copy(noise.row(b).begin(), noise.row(b).end(), nb.row(0).begin());
      const int kb[1] = {ks[b]};
      const MlpGradient gb = m.loss_and_grad(yb, kb, nb);
      for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += gb.params[i] / B;
    }
    for (std::size_t i = 0; i < mean.size(); ++i) CHECK(std::abs(mean[i] - g.params[i]) <= 1e-12);
  }
  CHECK_THROWS_AS(m.loss_and_grad(Matrix(0, 2), std::vector<int>{}, Matrix(0, 2)), ShapeError);
  CHECK_THROWS_AS(m.loss_and_grad(y, ks, Matrix(B, 3)), ShapeError);
}

TEST_CASE("mlp gradient matrix") { CHECK(check_mlp_gradients(VerifyOptions{}).pass); }

TEST_CASE("zero learning rate keeps the initialization") {
  const auto sched = NoiseSchedule::linear(0.1, 20, 100);
  const auto a = arch(1, {8}, Activation::Tanh, 100);
  TrainingConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.iterations = 10;
  cfg.log_every = 5;
  cfg.seed = 6;
  const auto r = train_dsm(MirrorMap::log_barrier(1, 0, 1),
                           TargetDistribution::product_beta({2}, {2}), sched, a, cfg);
  const Mlp init = Mlp::initialized(a, 6);
  CHECK(std::equal(r.model.params().begin(), r.model.params().end(), init.params().begin()));
  CHECK(r.loss_curve.size() == 2);
}

TEST_CASE("training on a single repeated point recovers it") {
  const auto sched = NoiseSchedule::linear();
  const auto mm = MirrorMap::log_barrier(1, 0, 1);
  Matrix pts(64, 1);
  for (double& v : pts.data) v = 0.3;
  const auto data = TargetDistribution::empirical(mm.domain(), pts);
  TrainingConfig cfg;
  cfg.iterations = 10000;
  cfg.batch_size = 64;
  cfg.seed = 2;
  const auto a = arch(1, {32, 32}, Activation::Tanh, 1000);
  const auto r = train_dsm(mm, data, sched, a, cfg);
  const double y0 = mm.grad(Vec{0.3})[0];
  const double ab = sched.alpha_bar(1), sig = sched.sigma(1);
  for (std::uint64_t c = 0; c < 100; ++c) {
    const double z = CounterRng(99, c, 0).normal();
    const double y1 = std::sqrt(ab) * y0 + sig * z;
    const double eps = r.model.forward(Vec{y1}, 1)[0];
    const double denoised = (y1 - sig * eps) / std::sqrt(ab);
    CHECK(std::abs(denoised - y0) <= 0.05);
  }
}

TEST_CASE("training on Beta(2,2) beats the zero predictor") {
  const auto sched = NoiseSchedule::linear(0.1, 20, 100);
  TrainingConfig cfg;
  cfg.iterations = 20000;
  cfg.batch_size = 128;
  cfg.log_every = 100;
  cfg.seed = 1;
  const auto r = train_dsm(MirrorMap::log_barrier(1, 0, 1),
                           TargetDistribution::product_beta({2}, {2}), sched,
                           arch(1, {32, 32}, Activation::Tanh, 100), cfg);
  REQUIRE(r.loss_curve.size() == 200);
  for (const auto& [it, loss] : r.loss_curve) REQUIRE(std::isfinite(loss));
  CHECK(r.loss_curve.back().second < 1.0);
  // Windowed mean at iteration 100 against iteration 1000.
  CHECK(r.loss_curve[9].second < r.loss_curve[0].second);
}

TEST_CASE("divergent training raises NonFiniteLossError") {
  TrainingConfig cfg;
  cfg.learning_rate = 1e300;
  cfg.iterations = 50;
  cfg.batch_size = 8;
  const auto sched = NoiseSchedule::linear(0.1, 20, 100);
  CHECK_THROWS_AS(train_dsm(MirrorMap::identity(1),
                            TargetDistribution::gaussian_mixture({1.0}, {{0.0}}, {1.0}), sched,
                            arch(1, {4}, Activation::Tanh, 100), cfg),
                  NonFiniteLossError);
  cfg.learning_rate = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("checkpoint round trip") {
  const auto a = arch(3, {7, 2}, Activation::SiLU, 250);
  const Mlp m = Mlp::initialized(a, 12);
  const std::string path = tmp_path("roundtrip.mdm");
  save_checkpoint(path, m);
  const Mlp back = load_checkpoint(path);
  CHECK(back.arch() == a);
  CHECK(std::equal(m.params().begin(), m.params().end(), back.params().begin()));

  std::ifstream is(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  CHECK(bytes.substr(0, 4) == "MDM1");
  CHECK(bytes.size() == 4 + 4 * (6 + 2) + 8 + 8 * a.parameter_count());

  const std::string bad = tmp_path("bad.mdm");
  std::ofstream(bad, std::ios::binary) << "MDM2" << bytes.substr(4);
  CHECK_THROWS_AS(load_checkpoint(bad), CheckpointError);
  std::ofstream(bad, std::ios::binary | std::ios::trunc) << bytes.substr(0, bytes.size() - 3);
  CHECK_THROWS_AS(load_checkpoint(bad), CheckpointError);
  CHECK_THROWS_AS(load_checkpoint(tmp_path("missing.mdm")), CheckpointError);
}
