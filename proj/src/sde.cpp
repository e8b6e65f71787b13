#include "mdm/sde.hpp"

#include <cmath>
#include <string>

#include "mdm/errors.hpp"
#include "mdm/parallel.hpp"
#include "mdm/random.hpp"

namespace mdm {

namespace {

void check_sizes(std::span<const double> a, std::span<const double> b, const char* op) {
  if (a.size() != b.size())
    throw ShapeError(std::string(op) + ": noise dimension does not match state");
}

}  // namespace

Vec forward_marginal(const NoiseSchedule& sched, std::span<const double> y0, int k,
                     std::span<const double> noise) {
  check_sizes(y0, noise, "forward_marginal");
  if (k < 0 || k > sched.steps())
    throw IndexError("forward_marginal: step " + std::to_string(k) + " outside [0, T]");
  const double ab = sched.alpha_bar(k);
  const double m = std::sqrt(ab);
  const double s = std::sqrt(1.0 - ab);
  Vec out(y0.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = m * y0[i] + s * noise[i];
  return out;
}

Vec forward_step(const NoiseSchedule& sched, std::span<const double> y_k, int k,
                 std::span<const double> noise) {
  check_sizes(y_k, noise, "forward_step");
  if (k < 0 || k >= sched.steps())
    throw IndexError("forward_step: step " + std::to_string(k) + " outside [0, T)");
  const double b = sched.beta(k + 1);
  const double keep = std::sqrt(1.0 - b);
  const double add = std::sqrt(b);
  Vec out(y_k.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = keep * y_k[i] + add * noise[i];
  return out;
}

Vec reverse_step_dual_ddpm(const NoiseSchedule& sched, const ScoreModel& score,
                           std::span<const double> y_k, int k,
                           std::span<const double> noise) {
  check_sizes(y_k, noise, "reverse_step_dual_ddpm");
  if (k < 1 || k > sched.steps())
    throw IndexError("reverse_step_dual_ddpm: step " + std::to_string(k) +
                     " outside [1, T]");
  const double b = sched.beta(k);
  const double inv_sqrt_alpha = 1.0 / std::sqrt(1.0 - b);
  const double noise_scale = k > 1 ? std::sqrt(b) : 0.0;
  const Vec s = score.score(y_k, k);
  if (s.size() != y_k.size()) throw ScoreModelError("score has the wrong dimension");
  Vec out(y_k.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = (y_k[i] + b * s[i]) * inv_sqrt_alpha + noise_scale * noise[i];
  return out;
}

double mirror_step_size(const NoiseSchedule& sched, int k) { return 0.5 * sched.beta(k); }

Vec reverse_step_mirror_corrected(const NoiseSchedule& sched, const MirrorMap& mm,
                                  const TargetDistribution& target,
                                  const ScoreModel& score, std::span<const double> y_k,
                                  int k, std::span<const double> noise,
                                  StepDiagnostics* diag, MirrorStepOptions options) {
  check_sizes(y_k, noise, "reverse_step_mirror_corrected");
  if (!target.is_analytic())
    throw UnsupportedError("mirror-corrected sampling: analytic target required");
  if (k < 1 || k > sched.steps())
    throw IndexError("reverse_step_mirror_corrected: step " + std::to_string(k) +
                     " outside [1, T]");
  const double h = mirror_step_size(sched, k);
  bool saturated = false;
  const Vec x = mm.grad_conjugate(y_k, &saturated);
  if (saturated && diag) ++diag->clamp_events;
  const Vec hess = mm.hessian_diag(x);
  const Vec slope = mm.log_hessian_slope(x);
  const Vec grad_f = target.potential_grad(x);
  const Vec s = score.score(y_k, k);
  if (s.size() != y_k.size()) throw ScoreModelError("score has the wrong dimension");

  Vec out(y_k.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    // dH_i/dy_i equals d/dx_i log H_i because dx_i/dy_i = 1/H_i.
    const double div = options.divergence_correction ? 2.0 * slope[i] : 0.0;
    const double drift = grad_f[i] + div + 2.0 * hess[i] * s[i];
    out[i] = y_k[i] + h * drift + std::sqrt(2.0 * h * hess[i]) * noise[i];
  }
  return out;
}

ReverseRunResult run_reverse_sampler(ReverseMode mode, const NoiseSchedule& sched,
                                     const MirrorMap& mm, const ScoreModel& score,
                                     const TargetDistribution* target,
                                     const ReverseRunOptions& options) {
  const std::size_t d = mm.dim();
  if (score.dim() != d)
    throw ShapeError("score model dimension " + std::to_string(score.dim()) +
                     " does not match mirror map dimension " + std::to_string(d));
  if (mode == ReverseMode::MirrorCorrected && (target == nullptr || !target->is_analytic()))
    throw UnsupportedError("mirror-corrected sampling: analytic target required");

  ReverseRunResult result;
  result.dual = Matrix(options.n_chains, d);
  result.primal = Matrix(options.n_chains, d);
  std::vector<std::size_t> clamps(options.n_chains, 0);
  const int steps = sched.steps();

  parallel_for(options.n_chains, options.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) {
      Vec y = CounterRng(options.seed, c, static_cast<std::uint64_t>(steps), StreamTag::Prior)
                  .normals(d);
      StepDiagnostics diag;
      for (int k = steps; k >= 1; --k) {
        const Vec z = CounterRng(options.seed, c, static_cast<std::uint64_t>(k)).normals(d);
        if (mode == ReverseMode::DualDdpm)
          y = reverse_step_dual_ddpm(sched, score, y, k, z);
        else
          y = reverse_step_mirror_corrected(sched, mm, *target, score, y, k, z, &diag,
                                            options.mirror);
      }
      bool saturated = false;
      const Vec x = mm.grad_conjugate(y, &saturated);
      clamps[c] = diag.clamp_events + (saturated ? 1 : 0);
      std::copy(y.begin(), y.end(), result.dual.row(c).begin());
      std::copy(x.begin(), x.end(), result.primal.row(c).begin());
    }
  });
  for (std::size_t v : clamps) result.clamp_events += v;
  return result;
}

}  // namespace mdm
