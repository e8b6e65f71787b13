#pragma once

#include <vector>

#include "mdm/domain.hpp"

namespace mdm {

/// Discrete variance-preserving noise schedule with T steps.
///
/// Linear schedules are parametrised by continuous-time rates beta(t) on
/// t in [0, 1]; the per-step variance is beta_k = beta(t_k) / T. The defaults
/// (0.1, 20) reproduce the classic per-step DDPM constants 1e-4 .. 0.02 at
/// T = 1000 and keep alpha_bar_T near 0 for any T.
class NoiseSchedule {
 public:
  static constexpr double kDefaultBetaMin = 0.1;
  static constexpr double kDefaultBetaMax = 20.0;
  static constexpr int kDefaultSteps = 1000;

  static NoiseSchedule linear(double beta_min = kDefaultBetaMin,
                              double beta_max = kDefaultBetaMax,
                              int steps = kDefaultSteps);
  /// betas[k-1] is the variance of step k. Entries must lie in [0, 1).
  static NoiseSchedule from_betas(std::vector<double> betas);

  int steps() const { return static_cast<int>(betas_.size()); }
  double beta_min() const { return beta_min_; }
  double beta_max() const { return beta_max_; }

  /// Per-step variance, k in [1, T].
  double beta(int k) const;
  double alpha(int k) const { return 1.0 - beta(k); }
  /// Cumulative product of alpha up to k, k in [0, T]; alpha_bar(0) == 1.
  double alpha_bar(int k) const;
  /// Standard deviation of the closed-form marginal, sqrt(1 - alpha_bar(k)).
  double sigma(int k) const;

 private:
  NoiseSchedule(std::vector<double> betas, double beta_min, double beta_max);

  std::vector<double> betas_;
  std::vector<double> alpha_bar_;
  double beta_min_;
  double beta_max_;
};

}  // namespace mdm
