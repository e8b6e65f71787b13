#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mdm/domain.hpp"

namespace mdm {

struct Provenance {
  std::string sampler;
  std::uint64_t seed = 0;
  long steps = 0;
  std::string config_hash;
};

/// Samples (one per row) together with the domain they should lie in.
struct SampleBatch {
  Matrix samples;
  DomainSpec domain = DomainSpec::euclidean(1);
  Provenance provenance;

  std::size_t size() const { return samples.rows; }
};

/// Rows that fail domain.contains().
std::size_t violation_count(const SampleBatch& batch);
std::size_t violation_count(const DomainSpec& domain, const Matrix& samples);

struct Moments {
  Vec mean;
  Vec variance;  // unbiased
};

/// Per-coordinate sample mean and unbiased variance. InsufficientData if n < 2.
Moments empirical_moments(const Matrix& samples);
Moments empirical_moments(const SampleBatch& batch);

/// Discrete KL divergence sum p_i log(p_i / q_i) in nats. Terms with p_i = 0
/// contribute 0; q_i = 0 with p_i > 0 gives +inf.
double kl_divergence(std::span<const double> p, std::span<const double> q);

/// Normalised histogram over [lo, hi] with `smoothing` added per bin:
/// h_i = (c_i / n + s) / sum_j (c_j / n + s).
Vec smoothed_histogram(std::span<const double> samples, std::size_t bins, double lo,
                       double hi, double smoothing);

/// KL between smoothed histograms of two 1-D sample sets over the union of
/// their ranges.
double histogram_kl(std::span<const double> p, std::span<const double> q,
                    std::size_t bins = 64, double smoothing = 1e-9);

/// Exact W1 between equal-size empirical measures (mean absolute difference of
/// sorted samples). A larger set is reduced to the smaller size by taking its
/// order statistics at ranks floor((i + 1/2) N / n).
double wasserstein1_1d(std::span<const double> p, std::span<const double> q);

/// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::span<const double> p, std::span<const double> q);
/// One-sample statistic against an analytic CDF.
double ks_statistic(std::span<const double> p, const std::function<double(double)>& cdf);

struct MetricRow {
  std::string name;
  double value = 0.0;
  std::optional<double> tolerance;
  bool pass = true;
};

class MetricReport {
 public:
  /// ConfigError if `name` is already present.
  void add(std::string name, double value, std::optional<double> tolerance, bool pass);
  const std::vector<MetricRow>& rows() const { return rows_; }
  bool all_pass() const;
  /// Header "metric,value,tolerance,pass"; an absent tolerance is left empty.
  std::string to_csv() const;

 private:
  std::vector<MetricRow> rows_;
};

/// Formats a double with 17 significant digits.
std::string format_double(double v);

}  // namespace mdm
