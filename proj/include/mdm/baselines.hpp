#pragma once

#include <cstdint>
#include <span>

#include "mdm/domain.hpp"
#include "mdm/metrics.hpp"
#include "mdm/mirror.hpp"
#include "mdm/target.hpp"

namespace mdm {

struct LangevinConfig {
  double step_size = 1e-3;  // h (also the eta of projected Langevin)
  long n_steps = 1000;
  std::size_t n_chains = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

/// x - h grad f(x) + sqrt(2h) noise.
Vec ula_step(const TargetDistribution& target, std::span<const double> x, double h,
             std::span<const double> noise);

/// Mirror Langevin step
///   x' = grad phi*(grad phi(x) - h grad f(x) + sqrt(2h hess phi(x)) noise).
/// Evaluated in the same order as ula_step, so the identity map reproduces it
/// bit for bit.
Vec mla_step(const MirrorMap& mm, const TargetDistribution& target,
             std::span<const double> x, double h, std::span<const double> noise);

/// Euclidean projection onto the simplex (sort-based, O(d log d)).
Vec project_onto_simplex(std::span<const double> v);
/// Euclidean projection onto a domain: clamp for a box, simplex projection,
/// identity for R^d.
Vec project_onto_domain(const DomainSpec& domain, std::span<const double> v);

/// Projected Langevin: the ULA proposal projected back onto the domain. The
/// potential gradient is evaluated at x pulled `grad_floor` inside the domain,
/// since projected iterates sit on the boundary where Beta and Dirichlet scores
/// are infinite.
Vec pla_step(const DomainSpec& domain, const TargetDistribution& target,
             std::span<const double> x, double h, std::span<const double> noise,
             double grad_floor = 1e-12);

/// Folds each coordinate back into [lower, upper], reflecting as many times as
/// needed. UnsupportedError unless the domain is a box.
Vec reflect_into_box(const DomainSpec& domain, std::span<const double> x);

enum class LangevinKind { Ula, Mla, Pla };

struct LangevinRunOptions {
  int threads = 1;
  double burn_in_fraction = 0.5;
};

struct LangevinRunResult {
  Matrix final_state;  // n_chains x d
  Matrix chain_mean;   // post-burn-in mean of every chain
  Matrix chain_var;    // post-burn-in unbiased variance of every chain
  std::size_t kept_per_chain = 0;
  std::size_t violations = 0;  // iterates outside the domain, over all steps
};

/// Runs n_chains independent chains from the domain centre. Chain c draws the
/// noise for step t from CounterRng(seed, c, t). `mm` selects the domain and,
/// for Mla, the mirror map.
LangevinRunResult run_langevin(LangevinKind kind, const MirrorMap& mm,
                               const TargetDistribution& target, const LangevinConfig& cfg,
                               const LangevinRunOptions& options = {});

struct CirParams {
  Vec alpha{1.0};
  double beta = 1.0;
  double sigma = 1.4142135623730951;
  double dt = 1e-3;
  long n_steps = 10000;
  bool require_dirichlet = true;  // enforce 2 beta = sigma^2
  double floor = 1e-12;

  void validate() const;
};

/// Full-truncation Euler-Maruyama step of dx = beta (alpha - x) dt + sigma sqrt(x) dw,
/// x+ = max(x, floor) in drift and diffusion, result floored at `floor`.
Vec cir_step(const CirParams& p, std::span<const double> x, std::span<const double> noise);

/// Terminal states of n_chains CIR processes started at alpha. Chain c draws
/// all its noise from CounterRng(seed, c, 0).
Matrix cir_terminal(const CirParams& p, std::size_t n_chains, std::uint64_t seed,
                    int threads = 1);

/// Divides every row by its sum.
Matrix normalize_rows(const Matrix& m);

/// Gamma-to-Dirichlet construction: normalised terminal CIR states.
/// ConfigError unless 2 beta = sigma^2.
SampleBatch dirichlet_from_cir(const CirParams& p, std::size_t n_chains, std::uint64_t seed,
                               int threads = 1);

}  // namespace mdm
