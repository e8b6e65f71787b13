#include "mdm/score.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "mdm/errors.hpp"

namespace mdm {

namespace {

// Six-point Gauss-Legendre rule on [-1, 1].
constexpr std::array<double, 6> kGlNodes{-0.9324695142031521, -0.6612093864662645,
                                         -0.2386191860831909, 0.2386191860831909,
                                         0.6612093864662645,  0.9324695142031521};
constexpr std::array<double, 6> kGlWeights{0.1713244923791704, 0.3607615730481386,
                                           0.4679139345726910, 0.4679139345726910,
                                           0.3607615730481386, 0.1713244923791704};

// Lookup grid y = sinh(u), u uniform; beyond the grid the direct quadrature
// is used.
constexpr double kGridMaxAbsY = 1e4;
constexpr double kGridStep = 0.02;

void require_matching_domain(const MirrorMap& mm, const TargetDistribution& t) {
  if (!(mm.domain() == t.domain()))
    throw ConfigError("mirror map domain " + mm.domain().describe() +
                      " does not match target domain " + t.domain().describe());
}

}  // namespace

double pushforward_log_density(const MirrorMap& mm, const TargetDistribution& target,
                               std::span<const double> y) {
  if (mm.kind() == MirrorKind::NegativeEntropy)
    throw UnsupportedError(
        "pushforward_log_density: the negative-entropy dual image is not full rank");
  if (!target.is_analytic())
    throw UnsupportedError("pushforward_log_density: analytic target required");
  require_matching_domain(mm, target);
  const Vec x = mm.grad_conjugate(y);
  const Vec h = mm.hessian_diag(x);
  double s = target.log_density(x);
  for (double v : h) s -= std::log(v);
  return s;
}

Vec analytic_dual_score(const MirrorMap& mm, const TargetDistribution& target,
                        std::span<const double> y) {
  if (!target.is_analytic())
    throw UnsupportedError("analytic_dual_score: analytic target required");
  require_matching_domain(mm, target);
  const Vec x = mm.grad_conjugate(y);
  const Vec h = mm.hessian_diag(x);
  const Vec slope = mm.log_hessian_slope(x);
  Vec s = target.score(x);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = (s[i] - slope[i]) / h[i];
  return s;
}

Vec noise_to_score(std::span<const double> eps_hat, int k, const NoiseSchedule& sched) {
  if (k < 1 || k > sched.steps())
    throw IndexError("noise_to_score: step " + std::to_string(k) + " outside [1, T]");
  const double sigma = sched.sigma(k);
  Vec s(eps_hat.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = -eps_hat[i] / sigma;
  return s;
}

// ---------------------------------------------------------------------------

BarrierMarginal::BarrierMarginal(double lower, double upper, double a, double b)
    : lower_(lower),
      upper_(upper),
      a_(a),
      b_(b),
      log_norm_(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b) +
                std::log(upper - lower)),
      chart_(MirrorMap::log_barrier(1, lower, upper)) {}

namespace {

// Distances of the inverse image to both walls, computed without cancellation.
inline void barrier_gaps(double y, double w, double& u, double& v) {
  const double yw = y * w;
  const double s = std::hypot(2.0, yw);
  const double gap = yw > 0.0 ? 4.0 / (s + yw) : s - yw;
  u = 2.0 * w / (2.0 + gap);
  v = w * gap / (2.0 + gap);
}

}  // namespace

double BarrierMarginal::log_density0(double y0) const {
  const double w = upper_ - lower_;
  double u, v;
  barrier_gaps(y0, w, u, v);
  if (!(u > 0.0) || !(v > 0.0)) return -std::numeric_limits<double>::infinity();
  const double log_h = std::log(u * u + v * v) - 2.0 * std::log(u) - 2.0 * std::log(v);
  return (a_ - 1.0) * std::log(u / w) + (b_ - 1.0) * std::log(v / w) - log_norm_ - log_h;
}

double BarrierMarginal::score0(double y0) const {
  const double w = upper_ - lower_;
  double u, v;
  barrier_gaps(y0, w, u, v);
  if (!(u > 0.0) || !(v > 0.0)) return 0.0;
  const double h = 1.0 / (u * u) + 1.0 / (v * v);
  const double slope = (-2.0 / (u * u * u) + 2.0 / (v * v * v)) / h;
  return ((a_ - 1.0) / u - (b_ - 1.0) / v - slope) / h;
}

BarrierMarginal::Value BarrierMarginal::diffused(double y, double alpha_bar) const {
  if (alpha_bar >= 1.0) return {log_density0(y), score0(y)};
  const double m = std::sqrt(alpha_bar);
  const double var = 1.0 - alpha_bar;
  const double sd = std::sqrt(var);
  const double width = sd / m;
  const double lo = (y - 10.0 * sd) / m;
  const double hi = (y + 10.0 * sd) / m;

  // Panels resolve both the Gaussian (two widths) and the pushforward density,
  // whose natural length scale grows like |y0|.
  std::vector<double> nodes, weights;
  nodes.reserve(256);
  weights.reserve(256);
  for (double t = lo; t < hi;) {
    const double step = std::min({2.0 * width, 0.5 * std::max(1.0, std::abs(t)), hi - t});
    const double mid = t + 0.5 * step;
    for (std::size_t j = 0; j < kGlNodes.size(); ++j) {
      nodes.push_back(mid + 0.5 * step * kGlNodes[j]);
      weights.push_back(0.5 * step * kGlWeights[j]);
    }
    t += step;
  }

  std::vector<double> logw(nodes.size());
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    const double r = y - m * nodes[j];
    logw[j] = log_density0(nodes[j]) - 0.5 * r * r / var;
    max_log = std::max(max_log, logw[j]);
  }
  double s0 = 0.0, s_y0 = 0.0, s_score = 0.0;
  const bool tweedie_score = alpha_bar >= 0.5;
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    const double wj = weights[j] * std::exp(logw[j] - max_log);
    s0 += wj;
    if (tweedie_score)
      s_score += wj * score0(nodes[j]);
    else
      s_y0 += wj * nodes[j];
  }
  Value out;
  out.log_density = max_log + std::log(s0) - 0.5 * std::log(2.0 * std::numbers::pi * var);
  // grad log p_k(y) = E[score0(y0) | y] / m  (accurate when the noise is small)
  //                = (m E[y0 | y] - y) / var (accurate when it is large)
  out.score = tweedie_score ? s_score / s0 / m : (m * s_y0 / s0 - y) / var;
  return out;
}

// ---------------------------------------------------------------------------

AnalyticPushforwardScore::AnalyticPushforwardScore(MirrorMap mm, TargetDistribution target,
                                                   std::optional<NoiseSchedule> schedule)
    : mm_(std::move(mm)), target_(std::move(target)), schedule_(std::move(schedule)) {
  if (!target_.is_analytic())
    throw UnsupportedError("analytic pushforward score: analytic target required");
  require_matching_domain(mm_, target_);
  if (!schedule_) return;

  if (mm_.kind() == MirrorKind::Identity &&
      target_.kind() == TargetKind::GaussianMixture)
    return;
  if (mm_.kind() != MirrorKind::LogBarrier || target_.kind() != TargetKind::ProductBeta)
    throw UnsupportedError(
        "schedule-aware analytic score needs identity + gaussian_mixture or "
        "log_barrier + product_beta");

  const int steps = schedule_->steps();
  const double umax = std::asinh(kGridMaxAbsY);
  const auto n_grid = static_cast<std::size_t>(std::ceil(2.0 * umax / kGridStep)) + 1;
  std::map<std::pair<double, double>, std::shared_ptr<const Table>> cache;
  for (std::size_t i = 0; i < dim(); ++i) {
    const auto key = std::make_pair(target_.beta_a()[i], target_.beta_b()[i]);
    auto it = cache.find(key);
    if (it == cache.end()) {
      auto table = std::make_shared<Table>(Table{
          BarrierMarginal(mm_.domain().lower(), mm_.domain().upper(), key.first,
                          key.second),
          {}});
      table->values.resize(static_cast<std::size_t>(steps) * n_grid);
      for (int k = 1; k <= steps; ++k) {
        const double ab = schedule_->alpha_bar(k);
        for (std::size_t j = 0; j < n_grid; ++j) {
          const double u = -umax + static_cast<double>(j) * kGridStep;
          table->values[static_cast<std::size_t>(k - 1) * n_grid + j] =
              table->marginal.diffused(std::sinh(u), ab).score;
        }
      }
      it = cache.emplace(key, std::move(table)).first;
    }
    tables_.push_back(it->second);
  }
}

double AnalyticPushforwardScore::table_score(const Table& t, double yi, int k) const {
  const double umax = std::asinh(kGridMaxAbsY);
  const std::size_t n_grid = t.values.size() / static_cast<std::size_t>(schedule_->steps());
  const double pos = (std::asinh(yi) + umax) / kGridStep;
  const auto j = static_cast<std::ptrdiff_t>(std::floor(pos));
  if (j < 1 || j + 2 >= static_cast<std::ptrdiff_t>(n_grid))
    return t.marginal.diffused(yi, schedule_->alpha_bar(k)).score;
  const double f = pos - static_cast<double>(j);
  const double* row = t.values.data() + static_cast<std::size_t>(k - 1) * n_grid;
  const double p0 = row[j - 1], p1 = row[j], p2 = row[j + 1], p3 = row[j + 2];
  // Catmull-Rom cubic
  return p1 + 0.5 * f *
                  (p2 - p0 +
                   f * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + f * (3.0 * (p1 - p2) + p3 - p0)));
}

double AnalyticPushforwardScore::diffused_score_direct(std::size_t i, double yi, int k) const {
  if (!schedule_ || tables_.empty())
    throw UnsupportedError("diffused_score_direct: needs a tabulated schedule-aware score");
  return tables_.at(i)->marginal.diffused(yi, schedule_->alpha_bar(k)).score;
}

Vec AnalyticPushforwardScore::score(std::span<const double> y, int k) const {
  if (y.size() != dim()) throw ShapeError("analytic score: wrong dimension");
  if (!schedule_ || k == 0) return analytic_dual_score(mm_, target_, y);
  if (k < 0 || k > schedule_->steps())
    throw IndexError("analytic score: step " + std::to_string(k) + " outside [0, T]");

  if (tables_.empty()) {
    // Gaussian mixture under the identity map stays a Gaussian mixture.
    const double ab = schedule_->alpha_bar(k);
    const double m = std::sqrt(ab);
    std::vector<Vec> means = target_.means();
    for (Vec& mu : means)
      for (double& v : mu) v *= m;
    Vec stds = target_.stds();
    for (double& s : stds) s = std::sqrt(ab * s * s + (1.0 - ab));
    return TargetDistribution::gaussian_mixture(target_.weights(), std::move(means),
                                                std::move(stds))
        .score(y);
  }
  Vec out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = table_score(*tables_[i], y[i], k);
  return out;
}

// ---------------------------------------------------------------------------

MlpScore::MlpScore(Mlp model, NoiseSchedule schedule)
    : model_(std::move(model)), schedule_(std::move(schedule)) {
  if (model_.arch().steps != schedule_.steps())
    throw ScoreModelError("model was trained for T=" +
                          std::to_string(model_.arch().steps) + " but schedule has T=" +
                          std::to_string(schedule_.steps()));
}

Vec MlpScore::score(std::span<const double> y, int k) const {
  return noise_to_score(model_.forward(y, k), k, schedule_);
}

}  // namespace mdm
