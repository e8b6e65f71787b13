#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mdm/mirror.hpp"
#include "mdm/mlp.hpp"
#include "mdm/schedule.hpp"
#include "mdm/target.hpp"

namespace mdm {

struct TrainingConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 128;
  long iterations = 20000;
  std::uint64_t seed = 0;
  long log_every = 100;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const;
  bool operator==(const TrainingConfig&) const = default;
};

/// Adam with bias correction over a flat parameter vector.
class Adam {
 public:
  Adam(std::size_t n, double lr, double beta1, double beta2, double eps);
  void step(std::span<double> params, std::span<const double> grad);

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<double> m_, v_;
};

struct TrainingResult {
  Mlp model;
  /// (iteration, mean loss over the preceding log_every iterations)
  std::vector<std::pair<long, double>> loss_curve;
};

/// Denoising score matching with the noise-prediction loss. Each iteration
/// draws x0 from the data, maps it to y0 = grad phi(x0), draws k uniformly
/// from {1..T}, corrupts y0 with the closed-form VP marginal and takes an Adam
/// step on ||eps_hat(y_k, k) - z||^2. With weighting lambda_k = 1 - alpha_bar_k
/// this is the denoising score-matching objective.
TrainingResult train_dsm(const MirrorMap& mm, const TargetDistribution& data,
                         const NoiseSchedule& sched, const MlpArch& arch,
                         const TrainingConfig& cfg);

/// Same loop on data that is already in the dual space (one point per row).
TrainingResult train_dsm_dual(const Matrix& dual_data, const NoiseSchedule& sched,
                              const MlpArch& arch, const TrainingConfig& cfg);

/// "MDM1" checkpoint: magic, u32 version, u32 input_dim, u32 time_embedding_dim,
/// u32 activation, u32 T, u32 hidden layer count, u32 widths..., u64 parameter
/// count, then the parameters as little-endian float64 in declaration order.
void save_checkpoint(const std::string& path, const Mlp& model);
Mlp load_checkpoint(const std::string& path);

}  // namespace mdm
