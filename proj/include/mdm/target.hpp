#pragma once

#include <span>
#include <string>
#include <vector>

#include "mdm/domain.hpp"
#include "mdm/random.hpp"

namespace mdm {

enum class TargetKind { Dirichlet, ProductBeta, GaussianMixture, Empirical };

std::string to_string(TargetKind kind);

/// Distribution nu = exp(-f) to sample from, on a given domain.
///
/// Analytic kinds expose a normalised log-density, its gradient and closed-form
/// moments. Empirical targets only support drawing data points.
///
///  - Dirichlet(alpha) on the simplex; density taken w.r.t. the first d-1
///    coordinates, score extended to R^d as (alpha_i - 1) / x_i.
///  - ProductBeta(a_i, b_i) on box [lower, upper]^d, each coordinate an affine
///    image of Beta(a_i, b_i).
///  - GaussianMixture of isotropic components N(mean_c, std_c^2 I) on R^d.
class TargetDistribution {
 public:
  static TargetDistribution dirichlet(Vec alpha);
  static TargetDistribution product_beta(Vec a, Vec b, double lower = 0.0,
                                         double upper = 1.0);
  static TargetDistribution gaussian_mixture(Vec weights, std::vector<Vec> means,
                                             Vec stds);
  static TargetDistribution empirical(DomainSpec domain, Matrix points);

  TargetKind kind() const { return kind_; }
  const DomainSpec& domain() const { return domain_; }
  std::size_t dim() const { return domain_.dim(); }
  bool is_analytic() const { return kind_ != TargetKind::Empirical; }

  double log_density(std::span<const double> x) const;
  /// grad log p(x) in primal coordinates.
  Vec score(std::span<const double> x) const;
  /// grad f(x) with f = -log p, i.e. -score(x).
  Vec potential_grad(std::span<const double> x) const;

  Vec sample(CounterRng& rng) const;

  Vec mean() const;
  Vec variance() const;

  /// One-dimensional marginal of coordinate i (analytic kinds only).
  double marginal_cdf(std::size_t i, double xi) const;
  /// Log-density and its derivative for coordinate i of a ProductBeta target.
  double marginal_log_density(std::size_t i, double xi) const;
  double marginal_score(std::size_t i, double xi) const;

  const Vec& alpha() const { return alpha_; }
  const Vec& beta_a() const { return a_; }
  const Vec& beta_b() const { return b_; }
  const Vec& weights() const { return weights_; }
  const std::vector<Vec>& means() const { return means_; }
  const Vec& stds() const { return stds_; }
  const Matrix& points() const { return points_; }

 private:
  TargetDistribution(TargetKind kind, DomainSpec domain);
  void require_analytic(const char* op) const;

  TargetKind kind_;
  DomainSpec domain_;
  Vec alpha_;
  Vec a_, b_;
  Vec weights_;
  std::vector<Vec> means_;
  Vec stds_;
  Matrix points_;
};

}  // namespace mdm
