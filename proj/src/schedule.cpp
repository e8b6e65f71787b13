#include "mdm/schedule.hpp"

#include <cmath>
#include <string>

#include "mdm/errors.hpp"

namespace mdm {

NoiseSchedule::NoiseSchedule(std::vector<double> betas, double beta_min,
                             double beta_max)
    : betas_(std::move(betas)), beta_min_(beta_min), beta_max_(beta_max) {
  if (betas_.empty()) throw ConfigError("schedule needs at least one step");
  alpha_bar_.resize(betas_.size() + 1);
  alpha_bar_[0] = 1.0;
  for (std::size_t k = 0; k < betas_.size(); ++k) {
    const double b = betas_[k];
    if (!(b >= 0.0 && b < 1.0))
      throw ConfigError("schedule step " + std::to_string(k + 1) +
                        " has beta outside [0, 1)");
    alpha_bar_[k + 1] = alpha_bar_[k] * (1.0 - b);
  }
}

NoiseSchedule NoiseSchedule::linear(double beta_min, double beta_max, int steps) {
  if (steps < 1) throw ConfigError("schedule.T must be at least 1");
  if (!(beta_min > 0.0) || !(beta_min <= beta_max))
    throw ConfigError("schedule requires 0 < beta_min <= beta_max");
  if (!(beta_max / steps < 1.0))
    throw ConfigError("schedule.beta_max / schedule.T must be below 1");
  std::vector<double> betas(static_cast<std::size_t>(steps));
  for (int k = 1; k <= steps; ++k) {
    const double frac = steps > 1 ? static_cast<double>(k - 1) / (steps - 1) : 0.0;
    betas[k - 1] = (beta_min + frac * (beta_max - beta_min)) / steps;
  }
  return NoiseSchedule(std::move(betas), beta_min, beta_max);
}

NoiseSchedule NoiseSchedule::from_betas(std::vector<double> betas) {
  double lo = 0.0, hi = 0.0;
  if (!betas.empty()) {
    lo = hi = betas.front();
    for (double b : betas) {
      lo = std::min(lo, b);
      hi = std::max(hi, b);
    }
  }
  const double t = static_cast<double>(betas.size());
  return NoiseSchedule(std::move(betas), lo * t, hi * t);
}

double NoiseSchedule::beta(int k) const {
  if (k < 1 || k > steps())
    throw IndexError("beta: step " + std::to_string(k) + " outside [1, " +
                     std::to_string(steps()) + "]");
  return betas_[static_cast<std::size_t>(k - 1)];
}

double NoiseSchedule::alpha_bar(int k) const {
  if (k < 0 || k > steps())
    throw IndexError("alpha_bar: step " + std::to_string(k) + " outside [0, " +
                     std::to_string(steps()) + "]");
  return alpha_bar_[static_cast<std::size_t>(k)];
}

double NoiseSchedule::sigma(int k) const { return std::sqrt(1.0 - alpha_bar(k)); }

}  // namespace mdm
