#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "mdm/mirror.hpp"
#include "mdm/mlp.hpp"
#include "mdm/schedule.hpp"
#include "mdm/target.hpp"

namespace mdm {

/// Anything that estimates grad_y log p_k(y) in the dual space.
class ScoreModel {
 public:
  virtual ~ScoreModel() = default;
  virtual std::size_t dim() const = 0;
  virtual Vec score(std::span<const double> y, int k) const = 0;
};

/// Log-density of the pushforward of `target` under the mirror map,
/// log p_X(x) - sum_i log H_i(x) with x the inverse image of y.
/// Only defined where the mirror map is a bijection (Identity, LogBarrier).
double pushforward_log_density(const MirrorMap& mm, const TargetDistribution& target,
                               std::span<const double> y);

/// (grad log p_X(x)_i - d/dx_i log H_i(x)) / H_i(x), the exact gradient of
/// pushforward_log_density. For NegativeEntropy the same formula is applied on
/// the coordinate chart x_i = exp(y_i - 1) with x taken from the softmax; it is
/// the score that makes the mirror-corrected reverse step stationary at the
/// target, although no normalised dual density exists in that case.
Vec analytic_dual_score(const MirrorMap& mm, const TargetDistribution& target,
                        std::span<const double> y);

/// Converts a noise prediction at step k to a score: -eps / sqrt(1 - alpha_bar_k).
Vec noise_to_score(std::span<const double> eps_hat, int k, const NoiseSchedule& sched);

/// One coordinate of a ProductBeta target pushed through the log barrier, and
/// the same density after k steps of the VP forward process. The diffused
/// density has no closed form; it is computed by composite Gauss-Legendre
/// quadrature over the clean dual coordinate.
class BarrierMarginal {
 public:
  BarrierMarginal(double lower, double upper, double a, double b);

  double log_density0(double y0) const;
  double score0(double y0) const;

  struct Value {
    double log_density;
    double score;
  };
  /// Marginal of sqrt(ab) y0 + sqrt(1 - ab) z at y. ab == 1 returns the clean
  /// pushforward.
  Value diffused(double y, double alpha_bar) const;

 private:
  double lower_, upper_, a_, b_, log_norm_;
  MirrorMap chart_;
};

/// Score of the pushforward of an analytic target.
///
/// Without a schedule the score ignores k and returns analytic_dual_score (the
/// stationary score used by the mirror-corrected sampler). With a schedule it
/// returns the score of the VP-diffused pushforward at step k: closed form for
/// Gaussian mixtures under the identity map, tabulated quadrature for
/// ProductBeta targets under the log barrier.
class AnalyticPushforwardScore : public ScoreModel {
 public:
  AnalyticPushforwardScore(MirrorMap mm, TargetDistribution target,
                           std::optional<NoiseSchedule> schedule = std::nullopt);

  std::size_t dim() const override { return mm_.dim(); }
  Vec score(std::span<const double> y, int k) const override;
  bool schedule_aware() const { return schedule_.has_value(); }

  /// Direct quadrature value for coordinate i, bypassing the lookup table.
  double diffused_score_direct(std::size_t i, double yi, int k) const;

 private:
  struct Table {
    BarrierMarginal marginal;
    std::vector<double> values;  // (T) x (grid) scores
  };
  double table_score(const Table& t, double yi, int k) const;

  MirrorMap mm_;
  TargetDistribution target_;
  std::optional<NoiseSchedule> schedule_;
  std::vector<std::shared_ptr<const Table>> tables_;  // one per coordinate
};

/// Trained noise-prediction network used as a score model.
class MlpScore : public ScoreModel {
 public:
  MlpScore(Mlp model, NoiseSchedule schedule);
  std::size_t dim() const override { return model_.arch().input_dim; }
  Vec score(std::span<const double> y, int k) const override;
  const Mlp& model() const { return model_; }

 private:
  Mlp model_;
  NoiseSchedule schedule_;
};

}  // namespace mdm
