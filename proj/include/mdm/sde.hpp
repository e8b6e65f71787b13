#pragma once

#include <cstdint>
#include <span>

#include "mdm/mirror.hpp"
#include "mdm/schedule.hpp"
#include "mdm/score.hpp"
#include "mdm/target.hpp"

namespace mdm {

/// sqrt(alpha_bar_k) y0 + sqrt(1 - alpha_bar_k) noise.
Vec forward_marginal(const NoiseSchedule& sched, std::span<const double> y0, int k,
                     std::span<const double> noise);

/// y_{k+1} = sqrt(1 - beta_{k+1}) y_k + sqrt(beta_{k+1}) noise, 0 <= k < T.
Vec forward_step(const NoiseSchedule& sched, std::span<const double> y_k, int k,
                 std::span<const double> noise);

/// Ancestral step of the VP reverse SDE:
/// y_{k-1} = (y_k + beta_k s(y_k, k)) / sqrt(alpha_k) + sqrt(beta_k) noise,
/// with the noise dropped at k = 1.
Vec reverse_step_dual_ddpm(const NoiseSchedule& sched, const ScoreModel& score,
                           std::span<const double> y_k, int k,
                           std::span<const double> noise);

/// Step size of the mirror-corrected sampler at step k. The mirror diffusion
/// runs on the schedule's clock, h_k = beta_k / 2, which makes its diffusion
/// coefficient sqrt(2 h_k) under the identity map equal the VP coefficient
/// sqrt(beta_k).
double mirror_step_size(const NoiseSchedule& sched, int k);

struct MirrorStepOptions {
  /// Include the Ito term grad_y . (2H) that time reversal of a diffusion with
  /// state-dependent coefficient requires. Without it the chain is stationary
  /// at p_X / H^2 rather than at the target.
  bool divergence_correction = true;
};

struct StepDiagnostics {
  std::size_t clamp_events = 0;
};

/// Euler-Maruyama step of the Hessian-corrected reverse SDE in the dual space,
/// x = grad_conjugate(y_k), H = hessian_diag(x), h = mirror_step_size(k):
///   y_{k-1} = y_k + h (grad f(x) + 2 dH/dy + 2 H s(y_k)) + sqrt(2 h H) noise.
Vec reverse_step_mirror_corrected(const NoiseSchedule& sched, const MirrorMap& mm,
                                  const TargetDistribution& target,
                                  const ScoreModel& score, std::span<const double> y_k,
                                  int k, std::span<const double> noise,
                                  StepDiagnostics* diag = nullptr,
                                  MirrorStepOptions options = {});

enum class ReverseMode { DualDdpm, MirrorCorrected };

struct ReverseRunOptions {
  std::uint64_t seed = 0;
  std::size_t n_chains = 1;
  int threads = 1;
  MirrorStepOptions mirror;
};

struct ReverseRunResult {
  Matrix dual;    // y_0 per chain
  Matrix primal;  // grad_conjugate(y_0) per chain
  std::size_t clamp_events = 0;
};

/// Starts each chain from y_T ~ N(0, I), runs k = T..1 and maps the result
/// back with the inverse mirror map. Chain c at step k draws its noise from
/// CounterRng(seed, c, k), so results do not depend on `threads`.
/// `target` is only consulted in MirrorCorrected mode and may be null for
/// DualDdpm.
ReverseRunResult run_reverse_sampler(ReverseMode mode, const NoiseSchedule& sched,
                                     const MirrorMap& mm, const ScoreModel& score,
                                     const TargetDistribution* target,
                                     const ReverseRunOptions& options);

}  // namespace mdm
