#include "mdm/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "mdm/baselines.hpp"
#include "mdm/mlp.hpp"
#include "mdm/random.hpp"
#include "mdm/target.hpp"

namespace mdm {

namespace {

constexpr double kRoundtripTol = 1e-9;
constexpr double kFenchelTol = 1e-8;
constexpr double kHessianTol = 1e-4;
constexpr double kInequalitySlack = -1e-10;
constexpr double kGradTol = 1e-4;

std::size_t dim_for(std::size_t i) { return 2 + i % 15; }

const char* kind_tag(MirrorKind k) {
  switch (k) {
    case MirrorKind::Identity:
      return "identity";
    case MirrorKind::NegativeEntropy:
      return "negative_entropy";
    case MirrorKind::LogBarrier:
      return "log_barrier";
  }
  return "?";
}

MetricRow below(std::string name, double value, double tol) {
  return {std::move(name), value, tol, value <= tol};
}

MetricRow above(std::string name, double value, double tol) {
  return {std::move(name), value, tol, value >= tol};
}

Vec random_simplex_point(CounterRng& rng, std::size_t d) {
  // Small concentration parameters put mass near faces and vertices.
  const double conc = rng.uniform() < 0.2 ? 0.1 : 1.0;
  Vec x(d);
  double s = 0.0;
  for (double& v : x) s += (v = rng.gamma(conc));
  for (double& v : x) v /= s;
  return x;
}

}  // namespace

MirrorMap random_mirror_map(MirrorKind kind, std::size_t dim, std::uint64_t seed,
                            std::uint64_t index) {
  switch (kind) {
    case MirrorKind::Identity:
      return MirrorMap::identity(dim);
    case MirrorKind::NegativeEntropy:
      return MirrorMap::negative_entropy(dim);
    case MirrorKind::LogBarrier: {
      CounterRng rng(seed, index, 1, StreamTag::Oracle);
      const double a = -2.0 + 2.0 * rng.uniform();
      const double w = 0.5 + 2.5 * rng.uniform();
      return MirrorMap::log_barrier(dim, a, a + w);
    }
  }
  return MirrorMap::identity(dim);
}

Vec random_interior_point(const MirrorMap& mm, std::uint64_t seed, std::uint64_t index) {
  CounterRng rng(seed, index, 2, StreamTag::Oracle);
  const std::size_t d = mm.dim();
  switch (mm.domain().kind()) {
    case DomainKind::Euclidean: {
      Vec x = rng.normals(d);
      for (double& v : x) v *= 5.0;
      return x;
    }
    case DomainKind::Simplex:
      return mm.clamp_to_interior(random_simplex_point(rng, d));
    case DomainKind::Box: {
      const double a = mm.domain().lower(), w = mm.domain().upper() - a;
      const bool edge = rng.uniform() < 0.1;
      Vec x(d);
      for (double& v : x) {
        double u = rng.uniform();
        if (edge) u = rng.uniform() < 0.5 ? std::pow(u, 8.0) : 1.0 - std::pow(u, 8.0);
        // Closer than this, x - a carries too few significant bits in double
        // precision to resolve the Hessian by differences.
        v = a + w * std::clamp(u, 1e-9, 1.0 - 1e-9);
      }
      return mm.clamp_to_interior(x);
    }
  }
  return Vec(d, 0.0);
}

MetricRow check_roundtrip(MirrorKind kind, const VerifyOptions& o) {
  double worst = 0.0;
  for (std::size_t i = 0; i < o.points_per_map; ++i) {
    const MirrorMap mm = random_mirror_map(kind, dim_for(i), o.seed, i);
    const Vec x = random_interior_point(mm, o.seed, i);
    const Vec back = mm.grad_conjugate(mm.grad(x));
    for (std::size_t j = 0; j < x.size(); ++j) worst = std::max(worst, std::abs(back[j] - x[j]));
  }
  return below(std::string("roundtrip_") + kind_tag(kind), worst, kRoundtripTol);
}

MetricRow check_fenchel(MirrorKind kind, const VerifyOptions& o) {
  double worst = 0.0;
  for (std::size_t i = 0; i < o.points_per_map; ++i) {
    const MirrorMap mm = random_mirror_map(kind, dim_for(i), o.seed, i);
    const Vec x = random_interior_point(mm, o.seed, i);
    const Vec y = mm.grad(x);
    const double lhs = mm.potential(x) + mm.conjugate_potential(y);
    const double rhs = dot(x, y);
    const double scale = std::max({1.0, std::abs(lhs), std::abs(rhs)});
    worst = std::max(worst, std::abs(lhs - rhs) / scale);
  }
  return below(std::string("fenchel_") + kind_tag(kind), worst, kFenchelTol);
}

MetricRow check_fenchel_young(MirrorKind kind, const VerifyOptions& o) {
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < o.points_per_map; ++i) {
    const MirrorMap mm = random_mirror_map(kind, dim_for(i), o.seed, i);
    const Vec x = random_interior_point(mm, o.seed, i);
    const Vec other = random_interior_point(mm, o.seed + 1, i);
    const Vec y = mm.grad(x);
    const double gap = mm.potential(other) + mm.conjugate_potential(y) - dot(other, y);
    const double scale = std::max({1.0, std::abs(mm.potential(other)), std::abs(dot(other, y))});
    worst = std::min(worst, gap / scale);
  }
  return above(std::string("fenchel_young_") + kind_tag(kind), worst, -kFenchelTol);
}

MetricRow check_hessian_fd(MirrorKind kind, const VerifyOptions& o) {
  double worst = 0.0;
  for (std::size_t i = 0; i < o.points_per_map; ++i) {
    const MirrorMap mm =
        random_mirror_map(kind, dim_for(i), o.seed, i).with_hessian_fault(o.hessian_fault);
    const Vec x = random_interior_point(mm, o.seed, i);
    const Vec h = mm.hessian_diag(x);
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double step = 1e-5 * std::min(1.0, mm.coord_scale(x[j]));
      const double up = x[j] + step, down = x[j] - step;
      const double fd = (mm.grad_coord(up) - mm.grad_coord(down)) / (up - down);
      worst = std::max(worst, std::abs(h[j] - fd) / std::abs(h[j]));
    }
  }
  return below(std::string("hessian_fd_") + kind_tag(kind), worst, kHessianTol);
}

MetricRow check_pinsker(const VerifyOptions& o) {
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < o.inequality_pairs; ++i) {
    CounterRng rng(o.seed, i, 3, StreamTag::Oracle);
    const std::size_t d = dim_for(i);
    const Vec p = random_simplex_point(rng, d);
    const Vec q = random_simplex_point(rng, d);
    Vec diff(d);
    for (std::size_t j = 0; j < d; ++j) diff[j] = p[j] - q[j];
    const double l1 = norm_l1(diff);
    worst = std::min(worst, kl_divergence(p, q) - 0.5 * l1 * l1);
  }
  return above("pinsker", worst, kInequalitySlack);
}

MetricRow check_entropy_convexity(const VerifyOptions& o) {
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < o.inequality_pairs; ++i) {
    CounterRng rng(o.seed, i, 4, StreamTag::Oracle);
    const std::size_t d = dim_for(i);
    const MirrorMap mm = MirrorMap::negative_entropy(d);
    const Vec x = mm.clamp_to_interior(random_simplex_point(rng, d));
    const Vec y = mm.clamp_to_interior(random_simplex_point(rng, d));
    const Vec g = mm.grad(x);
    Vec diff(d);
    for (std::size_t j = 0; j < d; ++j) diff[j] = y[j] - x[j];
    const double l1 = norm_l1(diff);
    const double slack = mm.potential(y) - mm.potential(x) - dot(g, diff) - 0.5 * l1 * l1;
    worst = std::min(worst, slack);
  }
  return above("entropy_1_convexity", worst, kInequalitySlack);
}

MetricRow check_mlp_gradients(const VerifyOptions& o) {
  const std::vector<std::vector<std::size_t>> widths{{8}, {16, 16}, {32, 32, 32}};
  double worst = 0.0;
  std::uint64_t case_id = 0;
  for (const auto& w : widths)
    for (Activation act : {Activation::Tanh, Activation::SiLU}) {
      MlpArch arch;
      arch.input_dim = 3;
      arch.hidden_widths = w;
      arch.time_embedding_dim = 4;
      arch.activation = act;
      arch.steps = 50;
      Mlp model = Mlp::initialized(arch, o.seed + case_id);
      // Non-zero biases so that every parameter has a generic gradient.
      CounterRng rng(o.seed, case_id++, 5, StreamTag::Oracle);
      for (double& p : model.params()) p += 0.1 * rng.normal();
      const std::size_t batch = 4;
      Matrix y(batch, arch.input_dim), noise(batch, arch.input_dim);
      std::vector<int> ks(batch);
      for (std::size_t b = 0; b < batch; ++b) {
        for (double& v : y.row(b)) v = rng.normal();
        for (double& v : noise.row(b)) v = rng.normal();
        ks[b] = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(arch.steps)));
      }
      const MlpGradient g = model.loss_and_grad(y, ks, noise);
      auto params = model.params();
      for (std::size_t p = 0; p < params.size(); ++p) {
        const double saved = params[p];
        const double h = 1e-5 * std::max(1.0, std::abs(saved));
        params[p] = saved + h;
        const double up = model.loss(y, ks, noise);
        params[p] = saved - h;
        const double down = model.loss(y, ks, noise);
        params[p] = saved;
        const double fd = (up - down) / (2.0 * h);
        const double denom = std::max({std::abs(fd), std::abs(g.params[p]), 1e-6});
        worst = std::max(worst, std::abs(fd - g.params[p]) / denom);
      }
    }
  return below("mlp_gradient_fd", worst, kGradTol);
}

MetricRow check_identity_reduction(const VerifyOptions& o) {
  const std::size_t d = 3;
  const MirrorMap mm = MirrorMap::identity(d);
  const TargetDistribution target = TargetDistribution::gaussian_mixture(
      {0.3, 0.7}, {{-1.0, 0.0, 2.0}, {1.5, -0.5, 0.0}}, {0.8, 1.2});
  Vec x_ula(d, 0.25), x_mla(d, 0.25);
  long mismatches = 0;
  for (long t = 0; t < o.reduction_steps; ++t) {
    const Vec z = CounterRng(o.seed, 0, static_cast<std::uint64_t>(t)).normals(d);
    x_ula = ula_step(target, x_ula, 1e-2, z);
    x_mla = mla_step(mm, target, x_mla, 1e-2, z);
    if (std::memcmp(x_ula.data(), x_mla.data(), d * sizeof(double)) != 0) ++mismatches;
  }
  return {"identity_mla_equals_ula", static_cast<double>(mismatches), 0.0, mismatches == 0};
}

MetricReport run_verify_suite(const VerifyOptions& o) {
  MetricReport report;
  auto add = [&](const MetricRow& r) { report.add(r.name, r.value, r.tolerance, r.pass); };
  for (MirrorKind k : {MirrorKind::Identity, MirrorKind::NegativeEntropy, MirrorKind::LogBarrier}) {
    add(check_roundtrip(k, o));
    add(check_fenchel(k, o));
    add(check_fenchel_young(k, o));
    add(check_hessian_fd(k, o));
  }
  add(check_pinsker(o));
  add(check_entropy_convexity(o));
  add(check_mlp_gradients(o));
  add(check_identity_reduction(o));
  return report;
}

}  // namespace mdm
