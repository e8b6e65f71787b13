#include "mdm/target.hpp"

#include <algorithm>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <numbers>
#include <numeric>

#include "mdm/errors.hpp"

namespace mdm {

namespace {

double log_beta_fn(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

void require_positive(std::span<const double> v, const char* what) {
  for (double x : v)
    if (!(x > 0.0) || !std::isfinite(x))
      throw ConfigError(std::string(what) + " entries must be positive and finite");
}

}  // namespace

std::string to_string(TargetKind kind) {
  switch (kind) {
    case TargetKind::Dirichlet:
      return "dirichlet";
    case TargetKind::ProductBeta:
      return "product_beta";
    case TargetKind::GaussianMixture:
      return "gaussian_mixture";
    case TargetKind::Empirical:
      return "empirical";
  }
  return "?";
}

TargetDistribution::TargetDistribution(TargetKind kind, DomainSpec domain)
    : kind_(kind), domain_(domain) {}

TargetDistribution TargetDistribution::dirichlet(Vec alpha) {
  if (alpha.size() < 2) throw ConfigError("dirichlet needs at least 2 coordinates");
  require_positive(alpha, "target.alpha");
  TargetDistribution t(TargetKind::Dirichlet, DomainSpec::simplex(alpha.size()));
  t.alpha_ = std::move(alpha);
  return t;
}

TargetDistribution TargetDistribution::product_beta(Vec a, Vec b, double lower,
                                                    double upper) {
  if (a.empty() || a.size() != b.size())
    throw ConfigError("product_beta needs matching, non-empty a and b");
  require_positive(a, "target.a");
  require_positive(b, "target.b");
  TargetDistribution t(TargetKind::ProductBeta,
                       DomainSpec::box(a.size(), lower, upper));
  t.a_ = std::move(a);
  t.b_ = std::move(b);
  return t;
}

TargetDistribution TargetDistribution::gaussian_mixture(Vec weights,
                                                        std::vector<Vec> means,
                                                        Vec stds) {
  if (weights.empty() || weights.size() != means.size() ||
      weights.size() != stds.size())
    throw ConfigError("gaussian_mixture needs one weight, mean and std per component");
  require_positive(weights, "target.weights");
  require_positive(stds, "target.stds");
  const std::size_t dim = means.front().size();
  for (const Vec& m : means)
    if (m.size() != dim || dim == 0)
      throw ConfigError("gaussian_mixture means must share one dimension");
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (double& w : weights) w /= total;
  TargetDistribution t(TargetKind::GaussianMixture, DomainSpec::euclidean(dim));
  t.weights_ = std::move(weights);
  t.means_ = std::move(means);
  t.stds_ = std::move(stds);
  return t;
}

TargetDistribution TargetDistribution::empirical(DomainSpec domain, Matrix points) {
  if (points.rows == 0) throw ConfigError("empirical dataset is empty");
  if (points.cols != domain.dim())
    throw ConfigError("empirical dataset dimension does not match the domain");
  for (std::size_t i = 0; i < points.rows; ++i)
    if (!domain.contains(points.row(i)))
      throw ConfigError("empirical dataset row " + std::to_string(i) +
                        " lies outside " + domain.describe());
  TargetDistribution t(TargetKind::Empirical, domain);
  t.points_ = std::move(points);
  return t;
}

void TargetDistribution::require_analytic(const char* op) const {
  if (!is_analytic())
    throw UnsupportedError(std::string(op) + ": analytic target required");
}

double TargetDistribution::marginal_log_density(std::size_t i, double xi) const {
  if (kind_ != TargetKind::ProductBeta)
    throw UnsupportedError("marginal_log_density: product_beta only");
  const double w = domain_.upper() - domain_.lower();
  const double t = (xi - domain_.lower()) / w;
  return (a_[i] - 1.0) * std::log(t) + (b_[i] - 1.0) * std::log1p(-t) -
         log_beta_fn(a_[i], b_[i]) - std::log(w);
}

double TargetDistribution::marginal_score(std::size_t i, double xi) const {
  if (kind_ != TargetKind::ProductBeta)
    throw UnsupportedError("marginal_score: product_beta only");
  const double w = domain_.upper() - domain_.lower();
  const double t = (xi - domain_.lower()) / w;
  return ((a_[i] - 1.0) / t - (b_[i] - 1.0) / (1.0 - t)) / w;
}

double TargetDistribution::log_density(std::span<const double> x) const {
  require_analytic("log_density");
  if (x.size() != dim()) throw ShapeError("log_density: wrong dimension");
  switch (kind_) {
    case TargetKind::Dirichlet: {
      double a0 = 0.0, s = 0.0, lnorm = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        s += (alpha_[i] - 1.0) * std::log(x[i]);
        lnorm += std::lgamma(alpha_[i]);
        a0 += alpha_[i];
      }
      return s - lnorm + std::lgamma(a0);
    }
    case TargetKind::ProductBeta: {
      double s = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) s += marginal_log_density(i, x[i]);
      return s;
    }
    case TargetKind::GaussianMixture: {
      Vec terms(weights_.size());
      const double d = static_cast<double>(dim());
      for (std::size_t c = 0; c < weights_.size(); ++c) {
        double r2 = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
          const double z = x[i] - means_[c][i];
          r2 += z * z;
        }
        const double s2 = stds_[c] * stds_[c];
        terms[c] = std::log(weights_[c]) - 0.5 * r2 / s2 -
                   0.5 * d * std::log(2.0 * std::numbers::pi * s2);
      }
      return log_sum_exp(terms);
    }
    case TargetKind::Empirical:
      break;
  }
  return 0.0;
}

Vec TargetDistribution::score(std::span<const double> x) const {
  require_analytic("score");
  if (x.size() != dim()) throw ShapeError("score: wrong dimension");
  Vec out(x.size(), 0.0);
  switch (kind_) {
    case TargetKind::Dirichlet:
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = (alpha_[i] - 1.0) / x[i];
      break;
    case TargetKind::ProductBeta:
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = marginal_score(i, x[i]);
      break;
    case TargetKind::GaussianMixture: {
      Vec logr(weights_.size());
      for (std::size_t c = 0; c < weights_.size(); ++c) {
        double r2 = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
          const double z = x[i] - means_[c][i];
          r2 += z * z;
        }
        const double s2 = stds_[c] * stds_[c];
        logr[c] = std::log(weights_[c]) - 0.5 * r2 / s2 -
                  0.5 * static_cast<double>(dim()) * std::log(s2);
      }
      const double lse = log_sum_exp(logr);
      for (std::size_t c = 0; c < weights_.size(); ++c) {
        const double r = std::exp(logr[c] - lse);
        const double s2 = stds_[c] * stds_[c];
        for (std::size_t i = 0; i < x.size(); ++i)
          out[i] += r * (means_[c][i] - x[i]) / s2;
      }
      break;
    }
    case TargetKind::Empirical:
      break;
  }
  return out;
}

Vec TargetDistribution::potential_grad(std::span<const double> x) const {
  Vec g = score(x);
  for (double& v : g) v = -v;
  return g;
}

Vec TargetDistribution::sample(CounterRng& rng) const {
  Vec out(dim());
  switch (kind_) {
    case TargetKind::Dirichlet: {
      double s = 0.0;
      for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = rng.gamma(alpha_[i]);
        s += out[i];
      }
      for (double& v : out) v /= s;
      break;
    }
    case TargetKind::ProductBeta: {
      const double w = domain_.upper() - domain_.lower();
      for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = domain_.lower() + w * rng.beta(a_[i], b_[i]);
      break;
    }
    case TargetKind::GaussianMixture: {
      const double u = rng.uniform();
      std::size_t c = 0;
      double acc = weights_[0];
      while (u > acc && c + 1 < weights_.size()) acc += weights_[++c];
      for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = means_[c][i] + stds_[c] * rng.normal();
      break;
    }
    case TargetKind::Empirical: {
      const auto r = rng.below(points_.rows);
      const auto row = points_.row(r);
      std::copy(row.begin(), row.end(), out.begin());
      break;
    }
  }
  return out;
}

Vec TargetDistribution::mean() const {
  Vec m(dim(), 0.0);
  switch (kind_) {
    case TargetKind::Dirichlet: {
      const double a0 = std::accumulate(alpha_.begin(), alpha_.end(), 0.0);
      for (std::size_t i = 0; i < m.size(); ++i) m[i] = alpha_[i] / a0;
      break;
    }
    case TargetKind::ProductBeta: {
      const double w = domain_.upper() - domain_.lower();
      for (std::size_t i = 0; i < m.size(); ++i)
        m[i] = domain_.lower() + w * a_[i] / (a_[i] + b_[i]);
      break;
    }
    case TargetKind::GaussianMixture:
      for (std::size_t c = 0; c < weights_.size(); ++c)
        for (std::size_t i = 0; i < m.size(); ++i) m[i] += weights_[c] * means_[c][i];
      break;
    case TargetKind::Empirical:
      for (std::size_t r = 0; r < points_.rows; ++r)
        for (std::size_t i = 0; i < m.size(); ++i) m[i] += points_(r, i);
      for (double& v : m) v /= static_cast<double>(points_.rows);
      break;
  }
  return m;
}

Vec TargetDistribution::variance() const {
  Vec v(dim(), 0.0);
  switch (kind_) {
    case TargetKind::Dirichlet: {
      const double a0 = std::accumulate(alpha_.begin(), alpha_.end(), 0.0);
      for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = alpha_[i] * (a0 - alpha_[i]) / (a0 * a0 * (a0 + 1.0));
      break;
    }
    case TargetKind::ProductBeta: {
      const double w = domain_.upper() - domain_.lower();
      for (std::size_t i = 0; i < v.size(); ++i) {
        const double s = a_[i] + b_[i];
        v[i] = w * w * a_[i] * b_[i] / (s * s * (s + 1.0));
      }
      break;
    }
    case TargetKind::GaussianMixture: {
      const Vec m = mean();
      for (std::size_t c = 0; c < weights_.size(); ++c)
        for (std::size_t i = 0; i < v.size(); ++i)
          v[i] += weights_[c] * (stds_[c] * stds_[c] + means_[c][i] * means_[c][i]);
      for (std::size_t i = 0; i < v.size(); ++i) v[i] -= m[i] * m[i];
      break;
    }
    case TargetKind::Empirical: {
      const Vec m = mean();
      for (std::size_t r = 0; r < points_.rows; ++r)
        for (std::size_t i = 0; i < v.size(); ++i) {
          const double z = points_(r, i) - m[i];
          v[i] += z * z;
        }
      const double n = static_cast<double>(points_.rows);
      for (double& x : v) x /= std::max(1.0, n - 1.0);
      break;
    }
  }
  return v;
}

double TargetDistribution::marginal_cdf(std::size_t i, double xi) const {
  require_analytic("marginal_cdf");
  switch (kind_) {
    case TargetKind::Dirichlet: {
      const double a0 = std::accumulate(alpha_.begin(), alpha_.end(), 0.0);
      const double t = std::clamp(xi, 0.0, 1.0);
      return boost::math::ibeta(alpha_[i], a0 - alpha_[i], t);
    }
    case TargetKind::ProductBeta: {
      const double t = std::clamp(
          (xi - domain_.lower()) / (domain_.upper() - domain_.lower()), 0.0, 1.0);
      return boost::math::ibeta(a_[i], b_[i], t);
    }
    case TargetKind::GaussianMixture: {
      double s = 0.0;
      for (std::size_t c = 0; c < weights_.size(); ++c)
        s += weights_[c] * 0.5 *
             std::erfc(-(xi - means_[c][i]) / (stds_[c] * std::numbers::sqrt2));
      return s;
    }
    case TargetKind::Empirical:
      break;
  }
  return 0.0;
}

}  // namespace mdm
