#include "mdm/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "mdm/errors.hpp"
#include "mdm/parallel.hpp"
#include "mdm/random.hpp"

namespace mdm {

void LangevinConfig::validate() const {
  if (!(step_size > 0.0) || !std::isfinite(step_size))
    throw ConfigError("step size h must be positive");
  if (n_steps < 1) throw ConfigError("n_steps must be at least 1");
  if (n_chains < 1) throw ConfigError("n_chains must be at least 1");
}

Vec ula_step(const TargetDistribution& target, std::span<const double> x, double h,
             std::span<const double> noise) {
  if (noise.size() != x.size()) throw ShapeError("ula_step: noise dimension mismatch");
  const Vec g = target.potential_grad(x);
  const double unit_hessian = 1.0;
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] = x[i] - h * g[i] + std::sqrt(2.0 * h * unit_hessian) * noise[i];
  return out;
}

Vec mla_step(const MirrorMap& mm, const TargetDistribution& target,
             std::span<const double> x, double h, std::span<const double> noise) {
  if (noise.size() != x.size()) throw ShapeError("mla_step: noise dimension mismatch");
  if (!mm.domain().contains(x)) throw DomainError("mla_step: x outside the domain");
  const Vec xc = mm.clamp_to_interior(x);
  Vec y = mm.grad(xc);
  const Vec g = target.potential_grad(xc);
  const Vec hess = mm.hessian_diag(xc);
  for (std::size_t i = 0; i < y.size(); ++i)
    y[i] = y[i] - h * g[i] + std::sqrt(2.0 * h * hess[i]) * noise[i];
  return mm.grad_conjugate(y);
}

Vec project_onto_simplex(std::span<const double> v) {
  Vec u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0, theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumsum += u[j];
    const double t = (cumsum - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) theta = t;
  }
  Vec out(v.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) sum += (out[i] = std::max(v[i] - theta, 0.0));
  // For large |v| the subtraction above cancels badly and the sum drifts off 1.
  if (!(sum > 0.0)) {
    std::fill(out.begin(), out.end(), 0.0);
    out[static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin())] = 1.0;
    return out;
  }
  for (double& x : out) x /= sum;
  return out;
}

Vec project_onto_domain(const DomainSpec& domain, std::span<const double> v) {
  switch (domain.kind()) {
    case DomainKind::Simplex:
      return project_onto_simplex(v);
    case DomainKind::Box: {
      Vec out(v.begin(), v.end());
      for (double& x : out) x = std::clamp(x, domain.lower(), domain.upper());
      return out;
    }
    case DomainKind::Euclidean:
      break;
  }
  return Vec(v.begin(), v.end());
}

namespace {

Vec pull_inside(const DomainSpec& domain, std::span<const double> x, double floor) {
  Vec out(x.begin(), x.end());
  if (domain.kind() == DomainKind::Box) {
    for (double& v : out) v = std::clamp(v, domain.lower() + floor, domain.upper() - floor);
  } else if (domain.kind() == DomainKind::Simplex) {
    double sum = 0.0;
    for (double& v : out) sum += (v = std::max(v, floor));
    for (double& v : out) v /= sum;
  }
  return out;
}

}  // namespace

Vec pla_step(const DomainSpec& domain, const TargetDistribution& target,
             std::span<const double> x, double h, std::span<const double> noise,
             double grad_floor) {
  if (noise.size() != x.size()) throw ShapeError("pla_step: noise dimension mismatch");
  const Vec g = target.potential_grad(pull_inside(domain, x, grad_floor));
  Vec proposal(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    proposal[i] = x[i] - h * g[i] + std::sqrt(2.0 * h) * noise[i];
  return project_onto_domain(domain, proposal);
}

Vec reflect_into_box(const DomainSpec& domain, std::span<const double> x) {
  if (domain.kind() != DomainKind::Box)
    throw UnsupportedError("reflect_into_box: only box domains support reflection");
  const double a = domain.lower(), w = domain.upper() - domain.lower();
  Vec out(x.begin(), x.end());
  for (double& v : out) {
    double t = std::fmod(v - a, 2.0 * w);
    if (t < 0.0) t += 2.0 * w;
    if (t > w) t = 2.0 * w - t;
    v = a + t;
  }
  return out;
}

LangevinRunResult run_langevin(LangevinKind kind, const MirrorMap& mm,
                               const TargetDistribution& target, const LangevinConfig& cfg,
                               const LangevinRunOptions& options) {
  cfg.validate();
  if (!target.is_analytic()) throw UnsupportedError("Langevin sampling: analytic target required");
  if (!(target.domain() == mm.domain()))
    throw ConfigError("Langevin sampling: target and mirror map domains differ");
  const DomainSpec& domain = mm.domain();
  const std::size_t d = domain.dim();
  const long burn = static_cast<long>(options.burn_in_fraction * static_cast<double>(cfg.n_steps));
  const std::size_t kept = static_cast<std::size_t>(cfg.n_steps - burn);

  LangevinRunResult r;
  r.final_state = Matrix(cfg.n_chains, d);
  r.chain_mean = Matrix(cfg.n_chains, d);
  r.chain_var = Matrix(cfg.n_chains, d);
  r.kept_per_chain = kept;
  std::vector<std::size_t> violations(cfg.n_chains, 0);

  parallel_for(cfg.n_chains, options.threads, [&](std::size_t begin, std::size_t end) {
    Vec z(d);
    for (std::size_t c = begin; c < end; ++c) {
      Vec x = domain.center();
      // Welford accumulators over the kept iterates.
      Vec mean(d, 0.0), m2(d, 0.0);
      std::size_t count = 0;
      for (long t = 0; t < cfg.n_steps; ++t) {
        CounterRng rng(cfg.seed, c, static_cast<std::uint64_t>(t));
        rng.fill_normal(z);
        switch (kind) {
          case LangevinKind::Ula:
            x = ula_step(target, x, cfg.step_size, z);
            break;
          case LangevinKind::Mla:
            x = mla_step(mm, target, x, cfg.step_size, z);
            break;
          case LangevinKind::Pla:
            x = pla_step(domain, target, x, cfg.step_size, z);
            break;
        }
        const bool inside = domain.contains(x);
        if (!inside) {
          ++violations[c];
          if (kind == LangevinKind::Mla) x = mm.clamp_to_interior(x);
        }
        if (t >= burn) {
          ++count;
          for (std::size_t i = 0; i < d; ++i) {
            const double delta = x[i] - mean[i];
            mean[i] += delta / static_cast<double>(count);
            m2[i] += delta * (x[i] - mean[i]);
          }
        }
      }
      for (std::size_t i = 0; i < d; ++i) {
        r.final_state(c, i) = x[i];
        r.chain_mean(c, i) = mean[i];
        r.chain_var(c, i) = count > 1 ? m2[i] / static_cast<double>(count - 1) : 0.0;
      }
    }
  });
  for (std::size_t v : violations) r.violations += v;
  return r;
}

void CirParams::validate() const {
  if (alpha.empty()) throw ConfigError("cir: alpha must be non-empty");
  for (double a : alpha)
    if (!(a > 0.0) || !std::isfinite(a)) throw ConfigError("cir: alpha entries must be positive");
  if (!(beta > 0.0)) throw ConfigError("cir: beta must be positive");
  if (!(sigma >= 0.0)) throw ConfigError("cir: sigma must be non-negative");
  if (!(dt > 0.0)) throw ConfigError("cir: dt must be positive");
  if (n_steps < 1) throw ConfigError("cir: n_steps must be at least 1");
  if (!(floor > 0.0)) throw ConfigError("cir: floor must be positive");
  if (require_dirichlet &&
      std::abs(2.0 * beta - sigma * sigma) > 1e-12 * std::max(1.0, sigma * sigma))
    throw ConfigError("cir: Dirichlet terminal law requires 2*beta == sigma^2");
}

Vec cir_step(const CirParams& p, std::span<const double> x, std::span<const double> noise) {
  if (x.size() != p.alpha.size() || noise.size() != x.size())
    throw ShapeError("cir_step: dimension mismatch");
  const double sq_dt = std::sqrt(p.dt);
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xp = std::max(x[i], p.floor);
    const double next =
        x[i] + p.beta * (p.alpha[i] - xp) * p.dt + p.sigma * std::sqrt(xp) * sq_dt * noise[i];
    out[i] = std::max(next, p.floor);
  }
  return out;
}

Matrix cir_terminal(const CirParams& p, std::size_t n_chains, std::uint64_t seed, int threads) {
  p.validate();
  const std::size_t d = p.alpha.size();
  Matrix out(n_chains, d);
  const double sq_dt = std::sqrt(p.dt);
  parallel_for(n_chains, threads, [&](std::size_t begin, std::size_t end) {
    Vec x(d);
    for (std::size_t c = begin; c < end; ++c) {
      CounterRng rng(seed, c, 0);
      x = p.alpha;
      // Same arithmetic as cir_step, inlined to avoid an allocation per step.
      for (long t = 0; t < p.n_steps; ++t) {
        for (std::size_t i = 0; i < d; ++i) {
          const double z = rng.normal();
          const double xp = std::max(x[i], p.floor);
          const double next =
              x[i] + p.beta * (p.alpha[i] - xp) * p.dt + p.sigma * std::sqrt(xp) * sq_dt * z;
          x[i] = std::max(next, p.floor);
        }
      }
      std::copy(x.begin(), x.end(), out.row(c).begin());
    }
  });
  return out;
}

Matrix normalize_rows(const Matrix& m) {
  Matrix out = m;
  for (std::size_t i = 0; i < out.rows; ++i) {
    auto r = out.row(i);
    double sum = 0.0;
    for (double v : r) sum += v;
    for (double& v : r) v /= sum;
  }
  return out;
}

SampleBatch dirichlet_from_cir(const CirParams& p, std::size_t n_chains, std::uint64_t seed,
                               int threads) {
  if (!p.require_dirichlet) throw ConfigError("dirichlet_from_cir: require_dirichlet must be set");
  p.validate();
  SampleBatch batch;
  batch.samples = normalize_rows(cir_terminal(p, n_chains, seed, threads));
  batch.domain = DomainSpec::simplex(p.alpha.size());
  batch.provenance = {"cir", seed, p.n_steps, ""};
  return batch;
}

}  // namespace mdm
